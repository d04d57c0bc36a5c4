//! Embedding matrices and the fundamental metric-space measurements.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use crate::{Error, Result};

/// Dense `n × d` matrix of finite reals with unique row labels.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    labels: Vec<String>,
    values: Vec<f64>,
    dim: usize,
    index: HashMap<String, usize>,
}

impl EmbeddingMatrix {
    pub fn new(labels: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if labels.len() != rows.len() {
            return Err(Error::arg(format!(
                "{} labels for {} rows",
                labels.len(),
                rows.len()
            )));
        }
        if rows.is_empty() {
            return Err(Error::arg("embedding matrix needs at least one row"));
        }
        let dim = rows[0].len();
        if dim == 0 {
            return Err(Error::arg("embedding dimension must be at least 1"));
        }
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(Error::arg(format!(
                    "row {} ({:?}) has {} values, expected {dim}",
                    i + 1,
                    labels[i],
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::arg(format!(
                    "row {} ({:?}) column {} is not finite",
                    i + 1,
                    labels[i],
                    j + 1
                )));
            }
            values.extend(row);
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::arg(format!("duplicate label {l:?}")));
            }
        }
        Ok(EmbeddingMatrix {
            labels,
            values,
            dim,
            index,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn get(&self, label: &str) -> Option<&[f64]> {
        self.position(label).map(|i| self.row(i))
    }

    /// Writes the text-vec format. Values use shortest round-trip decimal form.
    pub fn write_text_vec<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.n_rows(), self.dim)?;
        for (label, row) in self.labels.iter().zip(self.rows()) {
            write!(w, "{label}")?;
            for v in row {
                write!(w, " {v:?}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Loads a text-vec file: a `"<n> <d>"` header, then `n` lines of
/// `"<label> <v1> … <vd>"`.
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_text_vec(file, path)
}

pub fn read_text_vec<R: Read>(reader: R, path: impl Into<PathBuf>) -> Result<EmbeddingMatrix> {
    let path = path.into();
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.clone(),
        line,
        message,
    };
    let mut lines = BufReader::new(reader).lines();
    let header = match lines.next() {
        Some(l) => l.map_err(|e| Error::io(&path, e))?,
        None => return Err(parse_err(1, "missing \"<n> <d>\" header".into())),
    };
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| parse_err(1, format!("bad header {header:?}")))?;
    let [n, d] = dims[..] else {
        return Err(parse_err(1, format!("bad header {header:?}")));
    };
    if n == 0 || d == 0 {
        return Err(parse_err(1, "header must declare n ≥ 1 and d ≥ 1".into()));
    }

    let mut labels = Vec::with_capacity(n);
    let mut rows = Vec::with_capacity(n);
    let mut seen = HashMap::with_capacity(n);
    for row_idx in 1..=n {
        let line_no = row_idx + 1;
        let line = match lines.next() {
            Some(l) => l.map_err(|e| Error::io(&path, e))?,
            None => {
                return Err(parse_err(
                    line_no,
                    format!("row {row_idx} missing: header declares {n} rows"),
                ))
            }
        };
        let mut parts = line.split_ascii_whitespace();
        let label = parts
            .next()
            .ok_or_else(|| parse_err(line_no, format!("row {row_idx} is empty")))?;
        let vals: Vec<f64> = parts
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(line_no, format!("row {row_idx}: {e}")))?;
        if vals.len() != d {
            return Err(parse_err(
                line_no,
                format!("row {row_idx} has {} values, expected {d}", vals.len()),
            ));
        }
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(parse_err(line_no, format!("row {row_idx} has a non-finite value")));
        }
        if let Some(prev) = seen.insert(label.to_owned(), row_idx) {
            return Err(parse_err(
                line_no,
                format!("row {row_idx}: duplicate label {label:?} (first at row {prev})"),
            ));
        }
        labels.push(label.to_owned());
        rows.push(vals);
    }
    for (extra, l) in lines.enumerate() {
        let l = l.map_err(|e| Error::io(&path, e))?;
        if !l.trim().is_empty() {
            return Err(parse_err(
                n + 2 + extra,
                format!("more rows than the {n} declared in the header"),
            ));
        }
    }
    EmbeddingMatrix::new(labels, rows)
}

fn check_dims(u: &[f64], v: &[f64]) -> Result<()> {
    if u.len() != v.len() {
        return Err(Error::arg(format!(
            "dimension mismatch: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    Ok(())
}

/// Straight-line distance `√Σ(uᵢ−vᵢ)²`.
pub fn euclidean(u: &[f64], v: &[f64]) -> Result<f64> {
    check_dims(u, v)?;
    Ok(euclidean_unchecked(u, v))
}

pub(crate) fn euclidean_unchecked(u: &[f64], v: &[f64]) -> f64 {
    u.iter()
        .zip(v)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn norm(u: &[f64]) -> f64 {
    u.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Cosine of the angle between `u` and `v`, clamped to `[-1, 1]`.
///
/// Zero-norm inputs have no direction and yield [`Error::Undefined`].
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    check_dims(u, v)?;
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::undefined("cosine similarity of a zero-norm vector"));
    }
    Ok((dot(u, v) / (nu * nv)).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn loads_small_file() {
        let m = read_text_vec("2 2\na 1 0\nb 0 1\n".as_bytes(), "t.vec").unwrap();
        assert_eq!(m.labels(), ["a", "b"]);
        assert_eq!(m.row(1), [0.0, 1.0]);
        assert_eq!(m.get("a"), Some(&[1.0, 0.0][..]));
    }

    #[test]
    fn short_file_names_missing_row() {
        let err = read_text_vec("3 2\na 1 0\nb 0 1\n".as_bytes(), "t.vec").unwrap_err();
        assert!(err.to_string().contains("row 3"), "{err}");
    }

    #[test]
    fn load_errors() {
        let cases = [
            ("2 2\na 1 0\nb 0\n", "row 2"),
            ("2 2\na 1 0\na 0 1\n", "duplicate label"),
            ("1 2\na 1 NaN\n", "non-finite"),
            ("1 2\na 1 inf\n", "non-finite"),
            ("2\n", "bad header"),
            ("1 1\na 1\nb 2\n", "more rows"),
        ];
        for (src, needle) in cases {
            let err = read_text_vec(src.as_bytes(), "t.vec").unwrap_err();
            assert!(err.to_string().contains(needle), "{src:?}: {err}");
        }
    }

    #[test]
    fn euclidean_examples() {
        assert_eq!(euclidean(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(euclidean(&[1.5, -2.0], &[1.5, -2.0]).unwrap(), 0.0);
        assert!(euclidean(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine_similarity(&[1.0, 2.0], &[2.0, 4.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::Undefined(_))
        ));
    }

    fn vec3() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-100.0..100.0f64, 3)
    }

    proptest! {
        #[test]
        fn cosine_scale_invariance(u in vec3(), v in vec3(), a in 0.01..50.0f64, b in 0.01..50.0f64) {
            prop_assume!(norm(&u) > 1e-6 && norm(&v) > 1e-6);
            let base = cosine_similarity(&u, &v).unwrap();
            let su: Vec<f64> = u.iter().map(|x| a * x).collect();
            let sv: Vec<f64> = v.iter().map(|x| b * x).collect();
            prop_assert!((cosine_similarity(&su, &sv).unwrap() - base).abs() < 1e-12);
            prop_assert!((cosine_similarity(&u, &su).unwrap() - 1.0).abs() < 1e-12);
            let neg: Vec<f64> = u.iter().map(|x| -a * x).collect();
            prop_assert!((cosine_similarity(&u, &neg).unwrap() + 1.0).abs() < 1e-12);
        }

        #[test]
        fn text_vec_round_trip(rows in prop::collection::vec(vec3(), 1..20)) {
            let labels = (0..rows.len()).map(|i| format!("w{i}")).collect();
            let m = EmbeddingMatrix::new(labels, rows).unwrap();
            let mut buf = Vec::new();
            m.write_text_vec(&mut buf).unwrap();
            let back = read_text_vec(&buf[..], "mem").unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
