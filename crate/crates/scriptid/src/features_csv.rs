//! The feature CSV: five metadata columns, then the 60 features in index order.

use std::io::Write;
use std::path::Path;

use scriptid_core::features::{feature_names, Dataset, FeatureVector, LabeledSample, FEATURE_DIM};

use crate::error::{CliError, Result};

pub const METADATA_COLUMNS: [&str; 5] = ["label", "page_id", "level", "row", "col"];

pub fn header() -> Vec<String> {
    METADATA_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain(feature_names())
        .collect()
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_features<W: Write>(out: W, ds: &Dataset) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let fail = |e: csv::Error| CliError::Format(format!("writing feature CSV: {e}"));
    w.write_record(header()).map_err(fail)?;
    for s in &ds.samples {
        let mut row: Vec<String> = vec![
            s.label.clone(),
            s.page_id.clone(),
            s.level.to_string(),
            s.row.to_string(),
            s.col.to_string(),
        ];
        row.extend(s.features.values().iter().map(|&v| format_float(v)));
        w.write_record(&row).map_err(fail)?;
    }
    w.flush()
        .map_err(|e| CliError::Format(format!("writing feature CSV: {e}")))
}

pub fn save_features(path: &Path, ds: &Dataset) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write_features(std::io::BufWriter::new(file), ds)
}

/// Reads a feature CSV. Classes are listed in order of first appearance.
/// Every row must carry the same level.
pub fn read_features<R: std::io::Read>(input: R, path: &Path) -> Result<Dataset> {
    let malformed = |line: u64, reason: String| CliError::MalformedCsv {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut records = reader.records();
    let head = match records.next() {
        Some(r) => r.map_err(|e| malformed(1, e.to_string()))?,
        None => return Err(malformed(1, "missing header".into())),
    };
    let expected = header();
    if head.iter().ne(expected.iter().map(String::as_str)) {
        return Err(malformed(1, format!("header must be `{}`", expected.join(","))));
    }

    let mut classes: Vec<String> = Vec::new();
    let mut samples = Vec::new();
    for record in records {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != expected.len() {
            return Err(malformed(
                line,
                format!("expected {} fields, found {}", expected.len(), record.len()),
            ));
        }
        let int = |i: usize| -> Result<usize> {
            record[i].parse::<usize>().map_err(|_| {
                malformed(
                    line,
                    format!("{} `{}` is not a non-negative integer", expected[i], &record[i]),
                )
            })
        };
        let level = int(2)?;
        let (row, col) = (int(3)?, int(4)?);
        let mut values = Vec::with_capacity(FEATURE_DIM);
        for i in METADATA_COLUMNS.len()..expected.len() {
            let v: f64 = record[i]
                .trim()
                .parse()
                .map_err(|_| malformed(line, format!("{} `{}` is not a number", expected[i], &record[i])))?;
            if !v.is_finite() {
                return Err(malformed(line, format!("{} is not finite", expected[i])));
            }
            values.push(v);
        }
        let label = record[0].to_string();
        if label.is_empty() {
            return Err(malformed(line, "empty label".into()));
        }
        if let Some(first) = samples.first().map(|s: &LabeledSample| s.level) {
            if first as usize != level {
                return Err(malformed(
                    line,
                    format!("level {level} differs from the first row's level {first}"),
                ));
            }
        }
        if !classes.contains(&label) {
            classes.push(label.clone());
        }
        samples.push(LabeledSample {
            features: FeatureVector::new(values).map_err(|e| malformed(line, e.to_string()))?,
            label,
            page_id: record[1].to_string(),
            level: u32::try_from(level).map_err(|_| malformed(line, "level out of range".into()))?,
            row,
            col,
        });
    }
    Ok(Dataset { classes, samples })
}

pub fn load_features(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    read_features(std::io::BufReader::new(file), path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(label: &str, seed: f64) -> LabeledSample {
        LabeledSample {
            features: FeatureVector::new((0..FEATURE_DIM).map(|i| seed / (i as f64 + 3.0)).collect()).unwrap(),
            label: label.into(),
            page_id: format!("{label}_0"),
            level: 2,
            row: 1,
            col: 3,
        }
    }

    fn to_string(ds: &Dataset) -> String {
        let mut buf = Vec::new();
        write_features(&mut buf, ds).unwrap();
        String::from_utf8(buf).unwrap()
    }

    fn parse(text: &str) -> Result<Dataset> {
        read_features(text.as_bytes(), Path::new("t.csv"))
    }

    #[test]
    fn header_shape() {
        let h = header();
        assert_eq!(h.len(), 65);
        assert_eq!(h[..7].join(","), "label,page_id,level,row,col,e_v1_o0,h_v1_o0");
        assert_eq!(h[64], "h_v5_o5");
    }

    #[test]
    fn round_trip_is_exact() {
        let ds = Dataset::new(
            vec!["b".into(), "a,x".into()],
            vec![
                sample("b", 1.0),
                sample("a,x", std::f64::consts::PI),
                sample("b", 1e-300),
            ],
        )
        .unwrap();
        let text = to_string(&ds);
        assert!(text.ends_with('\n') && !text.contains('\r'));
        assert_eq!(parse(&text).unwrap(), ds);
    }

    /// `text` with field `col` of line `line` (0-based) replaced.
    fn with_field(text: &str, line: usize, col: usize, value: &str) -> String {
        let mut rows: Vec<String> = text.lines().map(String::from).collect();
        let mut f: Vec<String> = rows[line].split(',').map(String::from).collect();
        f[col] = value.into();
        rows[line] = f.join(",");
        rows.join("\n")
    }

    #[test]
    fn malformed_rows_name_the_line() {
        let ds = Dataset::new(vec!["a".into()], vec![sample("a", 1.0), sample("a", 2.0)]).unwrap();
        let text = to_string(&ds);
        assert!(matches!(
            parse(&with_field(&text, 2, 10, "abc")),
            Err(CliError::MalformedCsv { line: 3, .. })
        ));
        assert!(matches!(
            parse(&with_field(&text, 1, 3, "-1")),
            Err(CliError::MalformedCsv { line: 2, .. })
        ));
        let mut short: Vec<String> = text.lines().map(String::from).collect();
        short[1] = "a,p,2,0,0,1.0".into();
        assert!(matches!(
            parse(&short.join("\n")),
            Err(CliError::MalformedCsv { line: 2, .. })
        ));
        assert!(matches!(
            parse("label,page\n"),
            Err(CliError::MalformedCsv { line: 1, .. })
        ));
        assert!(matches!(parse(""), Err(CliError::MalformedCsv { line: 1, .. })));
    }

    #[test]
    fn mixed_levels_are_rejected() {
        let mut s = sample("a", 1.0);
        s.level = 3;
        let ds = Dataset::new(vec!["a".into()], vec![sample("a", 1.0), s]).unwrap();
        assert!(matches!(
            parse(&to_string(&ds)),
            Err(CliError::MalformedCsv { line: 3, .. })
        ));
    }

    #[test]
    fn non_finite_is_rejected() {
        let text = to_string(&Dataset::new(vec!["a".into()], vec![sample("a", 1.0)]).unwrap());
        assert!(matches!(
            parse(&with_field(&text, 1, 5, "NaN")),
            Err(CliError::MalformedCsv { line: 2, .. })
        ));
    }
}
