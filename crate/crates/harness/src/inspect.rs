use std::fmt::Write as _;

use layerood_core::dump::DatasetDump;

/// Header plus one summary line per record (at most `limit` lines).
pub fn summarize(dump: &DatasetDump, limit: Option<usize>) -> String {
    let h = dump.header();
    let mut out = String::new();
    writeln!(
        out,
        "magic: {}\nversion: {}\nexamples: {}\nlayers (L+1): {}\nhidden dim: {}\nclasses: {}",
        String::from_utf8_lossy(&h.magic),
        h.version,
        h.num_examples,
        h.num_layers_total,
        h.hidden_dim,
        h.num_classes
    )
    .unwrap();
    let tokens: Vec<usize> = dump.records().iter().map(|r| r.token_count()).collect();
    if let (Some(min), Some(max)) = (tokens.iter().min(), tokens.iter().max()) {
        writeln!(out, "tokens per record: {min}..={max}").unwrap();
    }
    out.push_str("record\tlabel\ttokens\targmax\tlast_layer_rms\n");
    let shown = limit.unwrap_or(usize::MAX).min(dump.len());
    for (i, r) in dump.records().iter().take(shown).enumerate() {
        let argmax = r
            .logits()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map_or("-".to_string(), |(c, _)| c.to_string());
        let last = r.layer(r.num_hidden_layers());
        let rms =
            (last.iter().map(|&v| f64::from(v).powi(2)).sum::<f64>() / last.len() as f64).sqrt();
        writeln!(
            out,
            "{i}\t{}\t{}\t{argmax}\t{rms:.4}",
            r.label(),
            r.token_count()
        )
        .unwrap();
    }
    if shown < dump.len() {
        writeln!(out, "... {} more records", dump.len() - shown).unwrap();
    }
    out
}
