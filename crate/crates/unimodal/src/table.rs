//! Comparison tables: one row per swept loss with test MAE and SOI as mean ± standard deviation.

use std::fmt::Write as _;

use unimodal_core::trainer::{Aggregate, MeanStd};

use crate::record::RecordFile;

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub runs: usize,
    pub failed: usize,
    pub mae: MeanStd,
    /// Fraction, rendered as percent.
    pub soi: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComparisonTable {
    pub rows: Vec<Row>,
}

impl ComparisonTable {
    /// Groups records by sweep position; rows follow the sweep order.
    pub fn from_records(records: &[RecordFile]) -> Self {
        let mut keys: Vec<(usize, &str)> = records.iter().map(|r| (r.sweep_index, r.name.as_str())).collect();
        keys.sort();
        keys.dedup();
        let rows = keys
            .into_iter()
            .map(|(index, name)| {
                let mut group: Vec<&RecordFile> = records
                    .iter()
                    .filter(|r| r.sweep_index == index && r.name == name)
                    .collect();
                group.sort_by_key(|r| r.seed);
                let agg = Aggregate::of(group.iter().map(|r| &r.record));
                Row {
                    name: name.to_string(),
                    runs: group.len(),
                    failed: agg.failed.len(),
                    mae: agg.mae,
                    soi: agg.soi_predicted,
                }
            })
            .collect();
        Self { rows }
    }

    pub fn row(&self, name: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,runs,failed,mae_mean,mae_std,soi_pct_mean,soi_pct_std\n");
        for r in &self.rows {
            let (mm, ms) = parts(&r.mae, 1.0, 3);
            let (sm, ss) = parts(&r.soi, 100.0, 2);
            writeln!(
                out,
                "{},{},{},{mm},{ms},{sm},{ss}",
                csv_field(&r.name),
                r.runs,
                r.failed
            )
            .unwrap();
        }
        out
    }

    /// Markdown with padded columns so it also reads as plain text.
    pub fn to_markdown(&self) -> String {
        let header = ["Method", "Runs", "MAE", "SOI_ŷ (%)"];
        let body: Vec<[String; 4]> = self
            .rows
            .iter()
            .map(|r| {
                let runs = if r.failed > 0 {
                    format!("{} ({} failed)", r.runs, r.failed)
                } else {
                    r.runs.to_string()
                };
                [r.name.clone(), runs, cell(&r.mae, 1.0, 3), cell(&r.soi, 100.0, 2)]
            })
            .collect();
        let mut widths = header.map(|h| h.chars().count());
        for row in &body {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |cells: [&str; 4]| {
            let mut s = String::from("|");
            for (i, (c, w)) in cells.iter().zip(widths).enumerate() {
                let pad = w - c.chars().count();
                if i == 0 {
                    write!(s, " {c}{} |", " ".repeat(pad)).unwrap();
                } else {
                    write!(s, " {}{c} |", " ".repeat(pad)).unwrap();
                }
            }
            s.push('\n');
            s
        };
        let mut out = line(header);
        let rule: Vec<String> = widths
            .iter()
            .enumerate()
            .map(|(i, &w)| {
                if i == 0 {
                    "-".repeat(w)
                } else {
                    format!("{}:", "-".repeat(w - 1))
                }
            })
            .collect();
        out += &line([&rule[0], &rule[1], &rule[2], &rule[3]]);
        for row in &body {
            out += &line([&row[0], &row[1], &row[2], &row[3]]);
        }
        out
    }
}

fn parts(m: &MeanStd, scale: f64, digits: usize) -> (String, String) {
    if m.n == 0 {
        return (String::new(), String::new());
    }
    let mean = format!("{:.*}", digits, m.mean * scale);
    let std = if m.n > 1 {
        format!("{:.*}", digits, m.std * scale)
    } else {
        String::new()
    };
    (mean, std)
}

fn cell(m: &MeanStd, scale: f64, digits: usize) -> String {
    match parts(m, scale, digits) {
        (mean, _) if mean.is_empty() => "n/a".into(),
        (mean, std) if std.is_empty() => mean,
        (mean, std) => format!("{mean} ± {std}"),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ms(values: &[f64]) -> MeanStd {
        MeanStd::of(values)
    }

    fn table() -> ComparisonTable {
        ComparisonTable {
            rows: vec![
                Row {
                    name: "CE".into(),
                    runs: 2,
                    failed: 0,
                    mae: ms(&[0.5, 0.7]),
                    soi: ms(&[0.8, 0.9]),
                },
                Row {
                    name: "ELB".into(),
                    runs: 1,
                    failed: 0,
                    mae: ms(&[0.25]),
                    soi: ms(&[0.99321]),
                },
            ],
        }
    }

    #[test]
    fn csv_rendering() {
        assert_eq!(
            table().to_csv(),
            "method,runs,failed,mae_mean,mae_std,soi_pct_mean,soi_pct_std\n\
             CE,2,0,0.600,0.141,85.00,7.07\n\
             ELB,1,0,0.250,,99.32,\n"
        );
    }

    #[test]
    fn markdown_rendering() {
        let md = table().to_markdown();
        let lines: Vec<&str> = md.lines().collect();
        assert_eq!(lines[0], "| Method | Runs |           MAE |    SOI_ŷ (%) |");
        assert_eq!(lines[2], "| CE     |    2 | 0.600 ± 0.141 | 85.00 ± 7.07 |");
        assert_eq!(lines[3], "| ELB    |    1 |         0.250 |        99.32 |");
    }

    #[test]
    fn empty_table() {
        let t = ComparisonTable::from_records(&[]);
        assert!(t.rows.is_empty());
        assert_eq!(t.to_markdown().lines().count(), 2);
    }
}
