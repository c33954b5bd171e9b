//! Line-oriented TSV reading shared by every file format in the crate.
//!
//! Lines starting with `#` are comments and blank lines are skipped. Each
//! yielded record carries its 1-based line number for error reporting.

use std::io::BufRead;

use crate::error::{Error, Result};

/// A non-comment, non-blank line split on tabs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub line: usize,
    pub fields: Vec<String>,
}

impl Record {
    /// Returns the fields, or a malformed-record error if the arity differs.
    pub fn expect_fields(&self, source_name: &str, arity: usize) -> Result<&[String]> {
        if self.fields.len() != arity {
            return Err(Error::malformed(
                source_name,
                self.line,
                format!("expected {arity} tab-separated fields, found {}", self.fields.len()),
            ));
        }
        Ok(&self.fields)
    }
}

/// Reads all records from `reader`.
pub fn read_records<R: BufRead>(reader: R, source_name: &str) -> Result<Vec<Record>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| {
            Error::malformed(source_name, line_no, format!("unreadable line: {e}"))
        })?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(Record {
            line: line_no,
            fields: line.split('\t').map(str::to_string).collect(),
        });
    }
    Ok(out)
}

/// Formats a score the way every report in the crate does.
pub fn fmt_score(value: f64) -> String {
    format!("{value:.6}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skips_comments_and_blank_lines() {
        let input = "# header\n\na\tb\n  \nc\td\r\n";
        let recs = read_records(input.as_bytes(), "t").unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].line, 3);
        assert_eq!(recs[1].fields, vec!["c", "d"]);
    }

    #[test]
    fn arity_error_reports_line() {
        let recs = read_records("a\tb\tc\nx\ty\n".as_bytes(), "f.tsv").unwrap();
        let err = recs[1].expect_fields("f.tsv", 3).unwrap_err();
        assert!(err.to_string().starts_with("f.tsv:2:"), "{err}");
    }
}
