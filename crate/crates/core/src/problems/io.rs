//! Network files: MatrixMarket stoichiometry, plain-text vectors and a JSON
//! manifest tying them together.
//!
//! ```json
//! {"name": "ab", "F": "F.mtx", "R": "R.mtx", "k": "k.txt", "l0": "l0.txt"}
//! ```
//!
//! Paths are relative to the manifest. `"c0"` may replace `"l0"`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::bio::{BioNetwork, MoietyTotals, SparseIntMatrix};

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn parse_err(file: &Path, line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        file: file.to_path_buf(),
        line,
        column,
        message: message.into(),
    }
}

/// Whitespace-separated tokens with their 1-based columns.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        match (ch.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push((s + 1, &line[s..i]));
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

/// Parses a `%%MatrixMarket matrix coordinate integer general` file.
pub fn parse_matrix_market(text: &str, file: &Path) -> Result<SparseIntMatrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(file, 1, 1, "empty file, expected a %%MatrixMarket header"))?;
    let head: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    let expected = ["%%matrixmarket", "matrix", "coordinate", "integer", "general"];
    if head.len() != 5 || head.iter().zip(expected).any(|(a, b)| a != b) {
        return Err(parse_err(
            file,
            1,
            1,
            format!("unsupported header `{header}`, expected `%%MatrixMarket matrix coordinate integer general`"),
        ));
    }

    let mut body = lines.filter(|(_, l)| !l.trim_start().starts_with('%') && !l.trim().is_empty());
    let (size_line, size) = body
        .next()
        .ok_or_else(|| parse_err(file, 2, 1, "missing size line `rows cols entries`"))?;
    let size_tok = tokens(size);
    if size_tok.len() != 3 {
        return Err(parse_err(file, size_line, 1, "size line needs exactly three integers"));
    }
    let mut dims = [0usize; 3];
    for (d, (col, t)) in dims.iter_mut().zip(&size_tok) {
        *d = t
            .parse()
            .map_err(|_| parse_err(file, size_line, *col, format!("`{t}` is not a nonnegative integer")))?;
    }
    let [nrows, ncols, nnz] = dims;

    let mut triplets = Vec::with_capacity(nnz);
    let mut seen = std::collections::HashSet::with_capacity(nnz);
    for (line_no, line) in body {
        let tok = tokens(line);
        if tok.len() != 3 {
            return Err(parse_err(file, line_no, 1, "entry line needs `row col value`"));
        }
        let index = |(col, t): (usize, &str), bound: usize, what: &str| -> Result<usize> {
            let v: usize = t
                .parse()
                .map_err(|_| parse_err(file, line_no, col, format!("`{t}` is not a {what} index")))?;
            if v == 0 || v > bound {
                return Err(parse_err(file, line_no, col, format!("{what} index {v} outside 1..={bound}")));
            }
            Ok(v - 1)
        };
        let i = index(tok[0], nrows, "row")?;
        let j = index(tok[1], ncols, "column")?;
        let (vcol, vt) = tok[2];
        let v: i64 = vt
            .parse()
            .map_err(|_| parse_err(file, line_no, vcol, format!("`{vt}` is not an integer")))?;
        if !seen.insert((i, j)) {
            return Err(parse_err(file, line_no, 1, format!("duplicate entry ({}, {})", i + 1, j + 1)));
        }
        triplets.push((i, j, v));
    }
    if triplets.len() != nnz {
        return Err(parse_err(
            file,
            size_line,
            1,
            format!("size line declares {nnz} entries, found {}", triplets.len()),
        ));
    }
    SparseIntMatrix::from_triplets(nrows, ncols, &triplets)
}

pub fn read_matrix_market(path: &Path) -> Result<SparseIntMatrix> {
    parse_matrix_market(&read(path)?, path)
}

pub fn format_matrix_market(m: &SparseIntMatrix) -> String {
    let mut s = String::from("%%MatrixMarket matrix coordinate integer general\n");
    let _ = writeln!(s, "{} {} {}", m.nrows(), m.ncols(), m.nnz());
    for (i, j, v) in m.triplets() {
        let _ = writeln!(s, "{} {} {}", i + 1, j + 1, v);
    }
    s
}

/// One decimal per line; blank lines and `#` comments are skipped.
pub fn parse_vector(text: &str, file: &Path) -> Result<DVector<f64>> {
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let col = line.len() - line.trim_start().len() + 1;
        let v: f64 = trimmed
            .parse()
            .map_err(|_| parse_err(file, i + 1, col, format!("`{trimmed}` is not a number")))?;
        values.push(v);
    }
    Ok(DVector::from_vec(values))
}

pub fn read_vector(path: &Path) -> Result<DVector<f64>> {
    parse_vector(&read(path)?, path)
}

pub fn format_vector(v: &DVector<f64>) -> String {
    v.iter().map(|x| format!("{x}\n")).collect()
}

pub fn write_vector(path: &Path, v: &DVector<f64>) -> Result<()> {
    write(path, &format_vector(v))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemManifest {
    pub name: String,
    #[serde(rename = "F")]
    pub f: PathBuf,
    #[serde(rename = "R")]
    pub r: PathBuf,
    pub k: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l0: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<PathBuf>,
}

impl ProblemManifest {
    pub fn read(path: &Path) -> Result<Self> {
        serde_json::from_str(&read(path)?).map_err(|e| Error::Manifest {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

/// Reads, validates and assembles the network described by a manifest.
pub fn load_network(manifest_path: &Path) -> Result<BioNetwork> {
    let manifest = ProblemManifest::read(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let f = read_matrix_market(&base.join(&manifest.f))?;
    let r = read_matrix_market(&base.join(&manifest.r))?;
    let k = read_vector(&base.join(&manifest.k))?;
    let totals = match (&manifest.l0, &manifest.c0) {
        (Some(l0), None) => MoietyTotals::Direct(read_vector(&base.join(l0))?),
        (None, Some(c0)) => MoietyTotals::FromConcentrations(read_vector(&base.join(c0))?),
        _ => {
            return Err(Error::Manifest {
                path: manifest_path.to_path_buf(),
                message: "exactly one of \"l0\" and \"c0\" must be given".into(),
            })
        }
    };
    BioNetwork::new(manifest.name, f, r, k, totals)
}

/// Writes `net` into `dir` (created if missing) and returns the manifest path.
pub fn save_network(net: &BioNetwork, dir: &Path) -> Result<PathBuf> {
    use crate::problem::NlsProblem;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(&dir.join("F.mtx"), &format_matrix_market(net.forward()))?;
    write(&dir.join("R.mtx"), &format_matrix_market(net.reverse()))?;
    write_vector(&dir.join("k.txt"), net.log_rates())?;
    let mut manifest = ProblemManifest {
        name: net.name().to_string(),
        f: "F.mtx".into(),
        r: "R.mtx".into(),
        k: "k.txt".into(),
        l0: None,
        c0: None,
    };
    match net.initial_concentrations() {
        Some(c0) => {
            write_vector(&dir.join("c0.txt"), c0)?;
            manifest.c0 = Some("c0.txt".into());
        }
        None => {
            write_vector(&dir.join("l0.txt"), net.moiety_totals())?;
            manifest.l0 = Some("l0.txt".into());
        }
    }
    let path = dir.join("manifest.json");
    write(&path, &serde_json::to_string_pretty(&manifest)?)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mm(text: &str) -> Result<SparseIntMatrix> {
        parse_matrix_market(text, Path::new("test.mtx"))
    }

    #[test]
    fn parses_coordinate_integer() {
        let m = mm("%%MatrixMarket matrix coordinate integer general\n% comment\n2 3 2\n1 1 1\n2 3 4\n").unwrap();
        assert_eq!((m.nrows(), m.ncols(), m.nnz()), (2, 3, 2));
        assert_eq!(m.get(1, 2), 4);
        assert_eq!(parse_matrix_market(&format_matrix_market(&m), Path::new("x")).unwrap(), m);
    }

    #[test]
    fn reports_position_of_bad_token() {
        let err = mm("%%MatrixMarket matrix coordinate integer general\n2 2 1\n1  x 1\n").unwrap_err();
        match err {
            Error::Parse { line, column, .. } => assert_eq!((line, column), (3, 4)),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn rejects_out_of_range_and_counts() {
        assert!(mm("%%MatrixMarket matrix coordinate integer general\n2 2 1\n3 1 1\n").is_err());
        assert!(mm("%%MatrixMarket matrix coordinate integer general\n2 2 2\n1 1 1\n").is_err());
        assert!(mm("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 1\n").is_err());
        assert!(mm("%%MatrixMarket matrix coordinate integer general\n2 2 2\n1 1 1\n1 1 2\n").is_err());
    }

    #[test]
    fn vector_with_comments() {
        let v = parse_vector("# totals\n1.5\n\n  -2e-3\n", Path::new("v.txt")).unwrap();
        assert_eq!(v.as_slice(), &[1.5, -2e-3]);
        let err = parse_vector("1\n  abc\n", Path::new("v.txt")).unwrap_err();
        match err {
            Error::Parse { line, column, .. } => assert_eq!((line, column), (2, 3)),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn vector_formatting_round_trips_exactly() {
        let v = DVector::from_vec(vec![0.1, 1.0 / 3.0, -2.5e-300, 7.0]);
        assert_eq!(parse_vector(&format_vector(&v), Path::new("v")).unwrap(), v);
    }
}
