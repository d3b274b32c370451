//! Field escaping and file helpers shared by every TSV format in the crate.
//!
//! All formats are UTF-8, LF-terminated, one record per line, with a header row.
//! Inside a field a tab is written as `\t`, a newline as `\n`, a carriage
//! return as `\r` and a backslash as `\\`.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub fn escape_field(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for c in raw.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

/// Inverse of [`escape_field`]. Returns the offending sequence on failure.
pub fn unescape_field(field: &str) -> std::result::Result<String, String> {
    let mut out = String::with_capacity(field.len());
    let mut chars = field.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(other) => return Err(format!("unknown escape sequence \\{other}")),
            None => return Err("dangling backslash at end of field".to_owned()),
        }
    }
    Ok(out)
}

/// Splits file contents into `(line_number, line)` pairs, 1-based.
///
/// A trailing newline does not produce an empty final record.
pub(crate) fn numbered_lines(contents: &str) -> impl Iterator<Item = (usize, &str)> {
    let body = contents.strip_suffix('\n').unwrap_or(contents);
    let lines = (!contents.is_empty()).then(|| body.split('\n'));
    lines.into_iter().flatten().enumerate().map(|(i, l)| (i + 1, l))
}

/// Checks the header row and returns the data rows, each split into exactly
/// `header.len()` raw fields.
pub(crate) fn data_rows<'a>(
    source_name: &str,
    contents: &'a str,
    header: &[&str],
) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let mut lines = numbered_lines(contents);
    let (_, first) = lines
        .next()
        .ok_or_else(|| Error::parse(source_name, 1, "missing header row"))?;
    let expected = header.join("\t");
    if first != expected {
        return Err(Error::parse(
            source_name,
            1,
            format!("expected header {expected:?}, found {first:?}"),
        ));
    }
    let mut rows = Vec::new();
    for (line, text) in lines {
        let fields: Vec<&str> = text.split('\t').collect();
        if fields.len() != header.len() {
            return Err(Error::parse(
                source_name,
                line,
                format!(
                    "expected {} tab-separated columns, found {}",
                    header.len(),
                    fields.len()
                ),
            ));
        }
        rows.push((line, fields));
    }
    Ok(rows)
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes `contents` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", file_name.to_string_lossy()));
    let mut file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    file.write_all(contents).map_err(|e| Error::io(&tmp, e))?;
    file.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(file);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub(crate) fn source_name(path: &Path) -> String {
    path.display().to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escapes_control_characters() {
        let raw = "a\tb\nc\\d\re";
        let escaped = escape_field(raw);
        assert_eq!(escaped, "a\\tb\\nc\\\\d\\re");
        assert!(!escaped.contains('\t') && !escaped.contains('\n'));
        assert_eq!(unescape_field(&escaped).unwrap(), raw);
    }

    #[test]
    fn rejects_unknown_escape() {
        assert!(unescape_field("bad\\x").is_err());
        assert!(unescape_field("trailing\\").is_err());
    }

    #[test]
    fn numbered_lines_ignores_single_trailing_newline() {
        let got: Vec<_> = numbered_lines("h\na\nb\n").collect();
        assert_eq!(got, vec![(1, "h"), (2, "a"), (3, "b")]);
        assert_eq!(numbered_lines("").count(), 0);
    }

    #[test]
    fn header_mismatch_is_parse_error() {
        let err = data_rows("f", "id\tlabel\n", &["id", "text", "label"]).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn wrong_column_count_reports_line() {
        let err = data_rows("f", "a\tb\nx\ty\nonly\n", &["a", "b"]).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.tsv");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
