//! MatrixMarket persistence of a [`DocumentTermMatrix`].
//!
//! A corpus directory holds `dtm.mtx` (coordinate integer general, 1-based),
//! `vocab.txt` (line k = column k), an optional `labels.txt` (line i =
//! document i) and `docs.txt` with document identifiers. Files written by
//! [`save_dtm`] are reproduced byte for byte by a load/save cycle.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::DocumentTermMatrix;
use crate::error::{Error, Result};
use crate::Count;

pub const MATRIX_FILE: &str = "dtm.mtx";
pub const VOCAB_FILE: &str = "vocab.txt";
pub const LABELS_FILE: &str = "labels.txt";
pub const DOCS_FILE: &str = "docs.txt";

const HEADER: &str = "%%MatrixMarket matrix coordinate integer general";

pub fn save_dtm(dtm: &DocumentTermMatrix, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for term in dtm.vocab() {
        check_line("vocabulary term", term)?;
    }
    for id in dtm.doc_ids() {
        check_line("document id", id)?;
    }
    if let Some(labels) = dtm.labels() {
        for l in labels {
            check_line("label", l)?;
        }
    }

    let mut mtx = String::with_capacity(16 * dtm.nnz() + 128);
    mtx.push_str(HEADER);
    mtx.push('\n');
    let _ = writeln!(mtx, "{} {} {}", dtm.n_docs(), dtm.n_terms(), dtm.nnz());
    for i in 0..dtm.n_docs() {
        for (j, v) in dtm.row_entries(i) {
            let _ = writeln!(mtx, "{} {} {}", i + 1, j + 1, v);
        }
    }
    write_atomic(&dir.join(MATRIX_FILE), &mtx)?;
    write_atomic(&dir.join(VOCAB_FILE), &lines(dtm.vocab()))?;
    write_atomic(&dir.join(DOCS_FILE), &lines(dtm.doc_ids()))?;
    match dtm.labels() {
        Some(labels) => write_atomic(&dir.join(LABELS_FILE), &lines(labels))?,
        None => {
            let path = dir.join(LABELS_FILE);
            if path.exists() {
                fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
            }
        }
    }
    Ok(())
}

pub fn load_dtm(dir: &Path) -> Result<DocumentTermMatrix> {
    let vocab_path = dir.join(VOCAB_FILE);
    let vocab = read_lines(&vocab_path)?;
    let mut seen: HashMap<&str, usize> = HashMap::with_capacity(vocab.len());
    for (k, term) in vocab.iter().enumerate() {
        if let Some(first) = seen.insert(term.as_str(), k) {
            return Err(parse_err(
                &vocab_path,
                k + 1,
                1,
                format!("duplicate vocabulary term {term:?} (first on line {})", first + 1),
            ));
        }
    }

    let mtx_path = dir.join(MATRIX_FILE);
    let (n, entries) = parse_mtx(&mtx_path, vocab.len())?;

    let labels_path = dir.join(LABELS_FILE);
    let labels = if labels_path.exists() {
        let l = read_lines(&labels_path)?;
        if l.len() != n {
            return Err(parse_err(
                &labels_path,
                l.len() + 1,
                1,
                format!("expected {n} labels, found {}", l.len()),
            ));
        }
        Some(l)
    } else {
        None
    };
    let docs_path = dir.join(DOCS_FILE);
    let doc_ids = if docs_path.exists() {
        let d = read_lines(&docs_path)?;
        if d.len() != n {
            return Err(parse_err(
                &docs_path,
                d.len() + 1,
                1,
                format!("expected {n} document ids, found {}", d.len()),
            ));
        }
        Some(d)
    } else {
        None
    };
    DocumentTermMatrix::from_triplets(n, vocab, entries, labels, doc_ids)
}

fn parse_mtx(path: &Path, p: usize) -> Result<(usize, Vec<(usize, usize, Count)>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));

    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, 1, "empty file".into()))?;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens != ["%%matrixmarket", "matrix", "coordinate", "integer", "general"] {
        return Err(parse_err(
            path,
            1,
            1,
            format!("expected header {HEADER:?}, found {header:?}"),
        ));
    }

    let mut data = lines.filter(|(_, l)| !l.starts_with('%') && !l.trim().is_empty());
    let (size_line, size) = data
        .next()
        .ok_or_else(|| parse_err(path, 2, 1, "missing size line".into()))?;
    let dims = fields(size);
    if dims.len() != 3 {
        return Err(parse_err(path, size_line, 1, "size line needs rows, columns, entries".into()));
    }
    let n = parse_usize(path, size_line, dims[0])?;
    let cols = parse_usize(path, size_line, dims[1])?;
    let nnz = parse_usize(path, size_line, dims[2])?;
    if cols != p {
        return Err(parse_err(
            path,
            size_line,
            dims[1].0,
            format!("matrix has {cols} columns but the vocabulary has {p} terms"),
        ));
    }

    let mut entries = Vec::with_capacity(nnz);
    let mut seen = std::collections::HashSet::with_capacity(nnz);
    for (line, content) in data {
        let f = fields(content);
        if f.len() != 3 {
            return Err(parse_err(path, line, 1, format!("expected 3 fields, found {}", f.len())));
        }
        let i = parse_usize(path, line, f[0])?;
        let j = parse_usize(path, line, f[1])?;
        if i == 0 || i > n {
            return Err(parse_err(path, line, f[0].0, format!("row index {i} outside 1..={n}")));
        }
        if j == 0 || j > p {
            return Err(parse_err(path, line, f[1].0, format!("column index {j} outside 1..={p}")));
        }
        let value: i64 = f[2].1.parse().map_err(|_| {
            parse_err(path, line, f[2].0, format!("invalid integer {:?}", f[2].1))
        })?;
        if value < 0 {
            return Err(parse_err(
                path,
                line,
                f[2].0,
                format!("negative count {value} at ({i}, {j})"),
            ));
        }
        let value = Count::try_from(value).map_err(|_| {
            parse_err(path, line, f[2].0, format!("count {value} at ({i}, {j}) is too large"))
        })?;
        if !seen.insert((i, j)) {
            return Err(parse_err(path, line, 1, format!("duplicate entry ({i}, {j})")));
        }
        entries.push((i - 1, j - 1, value));
    }
    if entries.len() != nnz {
        return Err(parse_err(
            path,
            size_line,
            dims[2].0,
            format!("size line declares {nnz} entries, file has {}", entries.len()),
        ));
    }
    Ok((n, entries))
}

/// Whitespace-separated fields with their 1-based starting column.
fn fields(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (pos, ch) in line.char_indices() {
        match (ch.is_whitespace(), start) {
            (false, None) => start = Some(pos),
            (true, Some(s)) => {
                out.push((s + 1, &line[s..pos]));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

fn parse_usize(path: &Path, line: usize, (col, tok): (usize, &str)) -> Result<usize> {
    tok.parse()
        .map_err(|_| parse_err(path, line, col, format!("expected a non-negative integer, found {tok:?}")))
}

fn parse_err(path: &Path, line: usize, column: usize, message: String) -> Error {
    Error::Parse {
        path: PathBuf::from(path),
        line,
        column,
        message,
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text.lines().map(str::to_owned).collect())
}

fn lines(items: &[String]) -> String {
    let mut s = String::new();
    for it in items {
        s.push_str(it);
        s.push('\n');
    }
    s
}

fn check_line(what: &str, s: &str) -> Result<()> {
    if s.contains('\n') || s.contains('\r') {
        return Err(Error::invalid(format!("{what} {s:?} contains a line break")));
    }
    Ok(())
}

/// Writes through a temporary sibling and renames, so readers never see a
/// partially written file.
pub(crate) fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
