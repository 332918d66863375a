//! Deterministic report serialization.
//!
//! Markdown rounds to two decimals; CSV and JSON keep full precision (the
//! shortest decimal that parses back to the same `f64`).
//!
//! CSV columns:
//! - correlation: `metric,setting,source,n,pearson,spearman,error`
//! - generation: `system,variant,n,failed,repaired,rouge1,rouge2,rougeL,bleu,precision,recall,f1`
//! - model comparison: `corpus,model,size,scored,length_filtered,failed,mean,min,median,max`

use std::fmt::Write as _;
use std::path::Path;

use super::compare::ModelFaithfulnessReport;
use super::correlation::{Cell, CorrelationReport, MetricRow};
use super::generation::{GenerationQualityReport, QualityScores};
use super::{HarnessError, SettingColumn};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [
        ReportFormat::Markdown,
        ReportFormat::Csv,
        ReportFormat::Json,
    ];

    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Markdown => "md",
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        }
    }
}

pub trait Report {
    fn markdown(&self) -> String;
    fn csv(&self) -> String;
    fn json(&self) -> String;

    fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Markdown => self.markdown(),
            ReportFormat::Csv => self.csv(),
            ReportFormat::Json => self.json(),
        }
    }
}

pub fn emit_report(
    report: &dyn Report,
    format: ReportFormat,
    path: &Path,
) -> Result<(), HarnessError> {
    std::fs::write(path, report.render(format)).map_err(|e| HarnessError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn round2(v: f64) -> String {
    // avoid printing "-0.00"
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

fn json_string<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

const CORRELATION_HEADER: [&str; 7] = [
    "metric", "setting", "source", "n", "pearson", "spearman", "error",
];

impl Report for CorrelationReport {
    fn markdown(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "| Metric | {} |",
            self.columns
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(" | ")
        )
        .unwrap();
        writeln!(out, "|---|{}", "---|".repeat(self.columns.len())).unwrap();
        for row in &self.rows {
            let cells: Vec<String> = row
                .cells
                .iter()
                .map(|c| match (c.pearson, c.spearman) {
                    (Some(p), Some(s)) => format!("{} / {}", round2(p), round2(s)),
                    _ => "n/a".to_string(),
                })
                .collect();
            writeln!(out, "| {} | {} |", row.metric, cells.join(" | ")).unwrap();
        }
        writeln!(out).unwrap();
        writeln!(
            out,
            "Cells: Pearson / Spearman against human ratings. Generator: {}. Rated examples: {}; skipped unrated: {}; generation failures: {}.",
            self.generator, self.rated, self.unrated_skipped, self.generation_failures
        )
        .unwrap();
        out
    }

    fn csv(&self) -> String {
        let rows = self.rows.iter().flat_map(|row| {
            self.columns.iter().zip(&row.cells).map(move |(col, cell)| {
                vec![
                    row.metric.clone(),
                    col.setting_label().to_string(),
                    col.source_label().to_string(),
                    cell.n.to_string(),
                    opt(cell.pearson),
                    opt(cell.spearman),
                    cell.error.clone().unwrap_or_default(),
                ]
            })
        });
        csv_string(&CORRELATION_HEADER, rows)
    }

    fn json(&self) -> String {
        json_string(self)
    }
}

impl CorrelationReport {
    /// Rebuild columns and rows from [`Report::csv`] output. Run metadata
    /// (generator, counts) is not part of the CSV and comes back empty.
    pub fn from_csv(text: &str) -> Result<Self, HarnessError> {
        let bad = |m: String| HarnessError::Input(format!("correlation csv: {m}"));
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
        if header.iter().collect::<Vec<_>>() != CORRELATION_HEADER {
            return Err(bad(format!("unexpected header {header:?}")));
        }
        let parse_opt = |s: &str| -> Result<Option<f64>, HarnessError> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|e| bad(format!("{s:?}: {e}")))
            }
        };
        let mut columns: Vec<SettingColumn> = Vec::new();
        let mut rows: Vec<MetricRow> = Vec::new();
        for record in reader.records() {
            let r = record.map_err(|e| bad(e.to_string()))?;
            let col = SettingColumn::parse(&r[1], &r[2])
                .ok_or_else(|| bad(format!("unknown setting {} {}", &r[1], &r[2])))?;
            if !columns.contains(&col) {
                columns.push(col);
            }
            let cell = Cell {
                n: r[3].parse().map_err(|e| bad(format!("n: {e}")))?,
                pearson: parse_opt(&r[4])?,
                spearman: parse_opt(&r[5])?,
                error: (!r[6].is_empty()).then(|| r[6].to_string()),
            };
            match rows.last_mut() {
                Some(row) if row.metric == r[0] => row.cells.push(cell),
                _ => rows.push(MetricRow {
                    metric: r[0].to_string(),
                    cells: vec![cell],
                }),
            }
        }
        Ok(CorrelationReport {
            generator: String::new(),
            rated: 0,
            unrated_skipped: 0,
            generation_failures: 0,
            columns,
            rows,
        })
    }
}

impl Report for GenerationQualityReport {
    fn markdown(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "| System | Output | {} |",
            QualityScores::NAMES.join(" | ")
        )
        .unwrap();
        writeln!(
            out,
            "|---|---|{}",
            "---|".repeat(QualityScores::NAMES.len())
        )
        .unwrap();
        for row in &self.rows {
            let vals: Vec<String> = row.scores.values().iter().map(|v| round2(*v)).collect();
            writeln!(
                out,
                "| {} | {} | {} |",
                row.system,
                row.variant.label(),
                vals.join(" | ")
            )
            .unwrap();
        }
        writeln!(out).unwrap();
        for row in self
            .rows
            .iter()
            .filter(|r| r.variant == super::OutputVariant::Raw)
        {
            writeln!(
                out,
                "{}: {} examples, {} failed, {} repaired.",
                row.system, row.n, row.failed, row.repaired
            )
            .unwrap();
        }
        out
    }

    fn csv(&self) -> String {
        let header = [
            "system",
            "variant",
            "n",
            "failed",
            "repaired",
            "rouge1",
            "rouge2",
            "rougeL",
            "bleu",
            "precision",
            "recall",
            "f1",
        ];
        let rows = self.rows.iter().map(|row| {
            let mut r = vec![
                row.system.clone(),
                row.variant.label().to_string(),
                row.n.to_string(),
                row.failed.to_string(),
                row.repaired.to_string(),
            ];
            r.extend(row.scores.values().iter().map(|v| v.to_string()));
            r
        });
        csv_string(&header, rows)
    }

    fn json(&self) -> String {
        json_string(self)
    }
}

impl Report for ModelFaithfulnessReport {
    fn markdown(&self) -> String {
        let mut out = String::new();
        writeln!(out, "| Corpus | Model | Mean LSS-BLEU | Min | Median | Max | Scored | Length-filtered | Failed |").unwrap();
        writeln!(out, "|---|---|---|---|---|---|---|---|---|").unwrap();
        for row in &self.rows {
            let stats = match row.summary {
                Some(s) => format!(
                    "{} | {} | {} | {}",
                    round2(s.mean),
                    round2(s.min),
                    round2(s.median),
                    round2(s.max)
                ),
                None => "n/a | n/a | n/a | n/a".to_string(),
            };
            writeln!(
                out,
                "| {} | {} | {} | {} | {} | {} |",
                row.corpus, row.model, stats, row.scored, row.length_filtered, row.failed
            )
            .unwrap();
        }
        writeln!(out).unwrap();
        writeln!(
            out,
            "Generator: {}. Length limit: {} tokens.",
            self.generator, self.max_tokens
        )
        .unwrap();
        out
    }

    fn csv(&self) -> String {
        let header = [
            "corpus",
            "model",
            "size",
            "scored",
            "length_filtered",
            "failed",
            "mean",
            "min",
            "median",
            "max",
        ];
        let rows = self.rows.iter().map(|row| {
            let s = row.summary;
            vec![
                row.corpus.clone(),
                row.model.clone(),
                row.size.to_string(),
                row.scored.to_string(),
                row.length_filtered.to_string(),
                row.failed.to_string(),
                opt(s.map(|s| s.mean)),
                opt(s.map(|s| s.min)),
                opt(s.map(|s| s.median)),
                opt(s.map(|s| s.max)),
            ]
        });
        csv_string(&header, rows)
    }

    fn json(&self) -> String {
        json_string(self)
    }
}
