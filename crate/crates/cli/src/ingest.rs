use std::fs::File;
use std::io::Read;
use std::path::Path;

use sgm::SampleMatrix;

use crate::CliError;

fn parse_error(source: &str, line: u64, column: Option<usize>, message: impl Into<String>) -> CliError {
    CliError::Parse {
        file: source.to_string(),
        line,
        column,
        message: message.into(),
    }
}

/// Reads a numeric CSV file. A first row containing any non-numeric cell is
/// taken as a header of column names.
pub fn ingest_csv(path: &Path) -> Result<SampleMatrix, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_csv(file, &path.display().to_string())
}

pub fn parse_csv<R: Read>(reader: R, source: &str) -> Result<SampleMatrix, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut names: Option<Vec<String>> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (k, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(source, line, None, e.to_string())
        })?;
        let line = record.position().map_or(k as u64 + 1, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if let Some(w) = width {
            if record.len() != w {
                return Err(parse_error(
                    source,
                    line,
                    None,
                    format!("row has {} fields, expected {w}", record.len()),
                ));
            }
        }
        let parsed: Vec<Result<f64, usize>> = record
            .iter()
            .enumerate()
            .map(|(c, cell)| cell.parse::<f64>().map_err(|_| c))
            .collect();
        if rows.is_empty() && names.is_none() && parsed.iter().any(Result::is_err) {
            names = Some(record.iter().map(str::to_string).collect());
            width = Some(record.len());
            continue;
        }
        width = Some(record.len());
        let mut row = Vec::with_capacity(record.len());
        for (c, v) in parsed.into_iter().enumerate() {
            match v {
                Ok(x) if x.is_finite() => row.push(x),
                Ok(_) => {
                    return Err(parse_error(source, line, Some(c + 1), format!("'{}' is not finite", &record[c])))
                }
                Err(_) => {
                    return Err(parse_error(source, line, Some(c + 1), format!("'{}' is not a number", &record[c])))
                }
            }
        }
        rows.push(row);
    }

    let n = rows.len();
    let p = width.unwrap_or(0);
    if n < 4 {
        return Err(parse_error(source, 0, None, format!("need at least 4 data rows, found {n}")));
    }
    if p < 3 {
        return Err(parse_error(source, 0, None, format!("need at least 3 columns, found {p}")));
    }
    let data = SampleMatrix::from_rows(rows)?;
    match names {
        Some(names) => Ok(data.with_names(names)?),
        None => Ok(data),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_detected() {
        let text = "a,b,c\n1,2,3\n4,5,6\n7,8,9\n1,1,1\n2,2,2\n";
        let m = parse_csv(text.as_bytes(), "t").unwrap();
        assert_eq!((m.n(), m.p()), (5, 3));
        assert_eq!(m.label(1), "b");
    }

    #[test]
    fn headerless_file_uses_indices() {
        let text = "1,2,3\n4,5,6\n7,8,9\n1,1,1\n";
        let m = parse_csv(text.as_bytes(), "t").unwrap();
        assert_eq!(m.n(), 4);
        assert_eq!(m.label(2), "3");
    }

    #[test]
    fn errors_carry_locations() {
        let ragged = "1,2,3\n4,5\n7,8,9\n1,1,1\n";
        let e = parse_csv(ragged.as_bytes(), "t").unwrap_err().to_string();
        assert!(e.contains("line 2"), "{e}");

        let nan = "x,y,z\n1,2,3\n4,NaN,6\n7,8,9\n1,1,1\n";
        let e = parse_csv(nan.as_bytes(), "t").unwrap_err().to_string();
        assert!(e.contains("line 3") && e.contains("column 2"), "{e}");

        let word = "1,2,3\n4,five,6\n7,8,9\n1,1,1\n";
        let e = parse_csv(word.as_bytes(), "t").unwrap_err().to_string();
        assert!(e.contains("line 2") && e.contains("column 2"), "{e}");

        assert!(parse_csv("1,2,3\n4,5,6\n".as_bytes(), "t").is_err());
        assert!(parse_csv("1,2\n3,4\n5,6\n7,8\n".as_bytes(), "t").is_err());
    }
}
