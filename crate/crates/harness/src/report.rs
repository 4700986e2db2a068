//! Markdown and CSV rendering of benchmark and sweep results.
//!
//! Markdown shows AUROC and FAR95 as percentages with two decimals
//! (`99.25 / 3.12`); CSV keeps full precision fractions.

use std::fmt::Write as _;

use layerood_core::metrics::MetricReport;

use crate::manifest::OutputFormat;

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub ood_set: String,
    pub report: MetricReport,
}

/// One benchmark run: a row per OOD set plus the macro average.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkTable {
    pub detector: String,
    pub pooling: String,
    pub rows: Vec<ReportRow>,
    pub macro_average: MetricReport,
}

pub fn percent_pair(r: &MetricReport) -> String {
    format!("{:.2} / {:.2}", 100.0 * r.auroc, 100.0 * r.far95)
}

fn csv_string(write: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    write(&mut w).expect("writing CSV to memory");
    String::from_utf8(w.into_inner().expect("flushing CSV to memory")).expect("CSV is UTF-8")
}

impl BenchmarkTable {
    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Markdown => self.to_markdown(),
        }
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "detector: {}, pooling: {}\n",
            self.detector, self.pooling
        )
        .unwrap();
        out.push_str("| OOD set | AUROC / FAR95 | ID | OOD |\n|---|---|---|---|\n");
        for row in &self.rows {
            let r = &row.report;
            writeln!(
                out,
                "| {} | {} | {} | {} |",
                row.ood_set,
                percent_pair(r),
                r.id_count,
                r.ood_count
            )
            .unwrap();
        }
        let m = &self.macro_average;
        writeln!(
            out,
            "| macro avg | {} | {} | {} |",
            percent_pair(m),
            m.id_count,
            m.ood_count
        )
        .unwrap();
        out
    }

    pub fn to_csv(&self) -> String {
        csv_string(|w| {
            w.write_record([
                "ood_set",
                "auroc",
                "far95",
                "id_count",
                "ood_count",
                "threshold",
            ])?;
            let rows = self
                .rows
                .iter()
                .map(|r| (r.ood_set.as_str(), &r.report))
                .chain([("macro_average", &self.macro_average)]);
            for (name, r) in rows {
                w.write_record([
                    name.to_string(),
                    r.auroc.to_string(),
                    r.far95.to_string(),
                    r.id_count.to_string(),
                    r.ood_count.to_string(),
                    r.threshold_used.map(|t| t.to_string()).unwrap_or_default(),
                ])?;
            }
            Ok(())
        })
    }
}

/// Best layer subset found for one subset size.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub size: usize,
    pub evaluated: usize,
    pub exhaustive: bool,
    pub best_layers: Vec<usize>,
    pub macro_average: MetricReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub intra: String,
    pub rows: Vec<SweepRow>,
}

pub const SWEEP_CAVEAT: &str =
    "best subsets are selected on the test data: these numbers are an oracle upper bound, not a tuned result";

fn layer_list(layers: &[usize]) -> String {
    layers
        .iter()
        .map(|l| l.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl SweepTable {
    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Markdown => self.to_markdown(),
        }
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        writeln!(out, "> {SWEEP_CAVEAT}\n").unwrap();
        writeln!(
            out,
            "detector: mahalanobis, intra pooling: {}\n",
            self.intra
        )
        .unwrap();
        out.push_str("| layers combined | subsets evaluated | best subset | AUROC / FAR95 |\n|---|---|---|---|\n");
        for row in &self.rows {
            let evaluated = if row.exhaustive {
                format!("{} (all)", row.evaluated)
            } else {
                format!("{} (sampled)", row.evaluated)
            };
            writeln!(
                out,
                "| {} | {} | {} | {} |",
                row.size,
                evaluated,
                layer_list(&row.best_layers),
                percent_pair(&row.macro_average)
            )
            .unwrap();
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let body = csv_string(|w| {
            w.write_record([
                "size",
                "evaluated",
                "exhaustive",
                "best_layers",
                "auroc",
                "far95",
            ])?;
            for row in &self.rows {
                w.write_record([
                    row.size.to_string(),
                    row.evaluated.to_string(),
                    row.exhaustive.to_string(),
                    layer_list(&row.best_layers),
                    row.macro_average.auroc.to_string(),
                    row.macro_average.far95.to_string(),
                ])?;
            }
            Ok(())
        });
        format!("# {SWEEP_CAVEAT}\n{body}")
    }
}
