//! Dataset files.
//!
//! ```text
//! # c=3
//! f1,f2,label
//! 0.25,-1.5,1
//! 0.75,2,3
//! ```
//!
//! The first line declares the label count, the second names `d` feature
//! columns followed by `label`, and every further line is one sample.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use unimodal_core::data::{Dataset, Provenance};
use unimodal_core::{Label, LabelSpace};

use crate::error::{CliError, Result};

/// Reads a dataset file.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_dataset_from(file, path)
}

/// Parses a dataset from any reader; `path` is used in messages and provenance.
pub fn read_dataset_from(reader: impl Read, path: &Path) -> Result<Dataset> {
    let mut reader = BufReader::new(reader);
    let mut first = String::new();
    reader.read_line(&mut first).map_err(|e| CliError::io(path, e))?;
    let classes =
        parse_class_line(first.trim_end()).ok_or_else(|| CliError::parse(path, "line 1: expected `# c=<int>`"))?;
    let space = LabelSpace::new(classes).map_err(|e| CliError::parse(path, format!("line 1: {e}")))?;

    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| CliError::parse(path, format!("line 2: {e}")))?
        .clone();
    let dim = check_header(&header).map_err(|m| CliError::parse(path, format!("line 2: {m}")))?;

    let mut features = Vec::new();
    let mut labels = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| CliError::parse(path, e.to_string()))?;
        // The class line was consumed before the csv reader saw the input.
        let line = row.position().map_or(0, |p| p.line() + 1);
        if row.len() != dim + 1 {
            return Err(CliError::parse(
                path,
                format!("line {line}: expected {} fields, found {}", dim + 1, row.len()),
            ));
        }
        for (j, field) in row.iter().take(dim).enumerate() {
            let value: f64 = field
                .trim()
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| CliError::parse(path, format!("line {line}: f{}: invalid number `{field}`", j + 1)))?;
            features.push(value);
        }
        let raw = &row[dim];
        let label: usize = raw
            .trim()
            .parse()
            .map_err(|_| CliError::parse(path, format!("line {line}: invalid label `{raw}`")))?;
        if label == 0 || label > classes {
            return Err(CliError::parse(
                path,
                format!("line {line}: label {label} outside 1..={classes}"),
            ));
        }
        labels.push(Label::new(label));
    }
    if labels.is_empty() {
        return Err(CliError::parse(path, "empty dataset"));
    }
    Dataset::new(
        features,
        dim,
        labels,
        space,
        Provenance::File(path.display().to_string()),
    )
    .map_err(|e| CliError::parse(path, e.to_string()))
}

fn parse_class_line(line: &str) -> Option<usize> {
    let rest = line.strip_prefix('#')?.trim_start();
    rest.strip_prefix("c=")?.trim().parse().ok()
}

fn check_header(header: &csv::StringRecord) -> std::result::Result<usize, String> {
    let n = header.len();
    if n < 2 || &header[n - 1] != "label" {
        return Err("expected header `f1,...,fd,label`".into());
    }
    for (j, name) in header.iter().take(n - 1).enumerate() {
        if name != format!("f{}", j + 1) {
            return Err(format!("expected column `f{}`, found `{name}`", j + 1));
        }
    }
    Ok(n - 1)
}

/// Writes a dataset file, replacing any existing one.
pub fn write_dataset(path: &Path, ds: &Dataset) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_dataset_to(&mut out, ds).map_err(|e| CliError::io(path, e))?;
    out.flush().map_err(|e| CliError::io(path, e))
}

/// Serialises a dataset; floats use the shortest text that reads back exactly.
pub fn write_dataset_to(out: &mut impl Write, ds: &Dataset) -> std::io::Result<()> {
    writeln!(out, "# c={}", ds.space().classes())?;
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=ds.dim()).map(|j| format!("f{j}")).collect();
    header.push("label".into());
    w.write_record(&header)?;
    let mut fields = Vec::with_capacity(ds.dim() + 1);
    for i in 0..ds.len() {
        fields.clear();
        fields.extend(ds.row(i).iter().map(|x| x.to_string()));
        fields.push(ds.labels()[i].to_string());
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Dataset> {
        read_dataset_from(text.as_bytes(), Path::new("mem.csv"))
    }

    #[test]
    fn reads_small_file() {
        let ds = parse("# c=3\nf1,f2,label\n0.25,-1.5,1\n0.75,2,3\n").unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.row(1), &[0.75, 2.0]);
        assert_eq!(ds.labels(), &[Label::new(1), Label::new(3)]);
    }

    #[test]
    fn header_only_is_empty() {
        let err = parse("# c=3\nf1,label\n").unwrap_err().to_string();
        assert!(err.contains("empty dataset"), "{err}");
    }

    #[test]
    fn label_zero_cites_line() {
        let err = parse("# c=3\nf1,label\n0.5,2\n0.1,0\n").unwrap_err().to_string();
        assert!(err.contains("line 4") && err.contains("label 0"), "{err}");
    }

    #[test]
    fn malformed_rows_cite_line() {
        let err = parse("# c=3\nf1,label\n0.5,2\nabc,1\n").unwrap_err().to_string();
        assert!(err.contains("line 4") && err.contains("f1"), "{err}");
        let err = parse("# c=3\nf1,label\n0.5,2,9\n").unwrap_err().to_string();
        assert!(err.contains("line 3") && err.contains("expected 2 fields"), "{err}");
    }

    #[test]
    fn bad_preamble() {
        assert!(parse("f1,label\n0.5,1\n").unwrap_err().to_string().contains("line 1"));
        assert!(parse("# c=1\nf1,label\n0.5,1\n").is_err());
        assert!(parse("# c=3\nx,label\n0.5,1\n")
            .unwrap_err()
            .to_string()
            .contains("line 2"));
    }
}
