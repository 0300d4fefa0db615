use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// What an out-of-vocabulary word maps to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OovPolicy {
    #[default]
    ZeroVector,
    MeanVector,
}

/// Pretrained word vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix<T> {
    words: Vec<String>,
    index: HashMap<String, usize>,
    dim: usize,
    /// Row-major `words.len() x dim`.
    data: Vec<T>,
    mean: Vec<T>,
    pub oov_policy: OovPolicy,
}

impl<T: Scalar> EmbeddingMatrix<T> {
    pub fn from_rows(rows: Vec<(String, Vec<T>)>) -> Result<Self> {
        let dim = rows.first().map(|r| r.1.len()).unwrap_or(0);
        let mut m = EmbeddingMatrix {
            words: Vec::new(),
            index: HashMap::new(),
            dim,
            data: Vec::new(),
            mean: vec![T::zero(); dim],
            oov_policy: OovPolicy::default(),
        };
        for (word, v) in rows {
            if v.len() != dim {
                return Err(Error::data(format!(
                    "vector for {word:?} has dimension {}, expected {dim}",
                    v.len()
                )));
            }
            m.push(word, v)?;
        }
        m.finish();
        Ok(m)
    }

    fn push(&mut self, word: String, v: Vec<T>) -> Result<()> {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::data(format!(
                "non-finite entry in vector for {word:?}"
            )));
        }
        if self.index.contains_key(&word) {
            log::warn!("duplicate embedding for {word:?}; keeping the first");
            return Ok(());
        }
        self.index.insert(word.clone(), self.words.len());
        self.words.push(word);
        self.data.extend(v);
        Ok(())
    }

    fn finish(&mut self) {
        let n = self.words.len();
        self.mean = vec![T::zero(); self.dim];
        if n > 0 {
            for row in self.data.chunks(self.dim.max(1)) {
                for (m, &x) in self.mean.iter_mut().zip(row) {
                    *m += x;
                }
            }
            let n = T::from_usize_lossy(n);
            self.mean.iter_mut().for_each(|m| *m /= n);
        }
    }

    /// Parses the whitespace-separated text format: an optional `rows dim`
    /// header, then one `word v1 ... vdim` line per word.
    pub fn parse(text: &str) -> Result<Self> {
        let mut m = EmbeddingMatrix {
            words: Vec::new(),
            index: HashMap::new(),
            dim: 0,
            data: Vec::new(),
            mean: Vec::new(),
            oov_policy: OovPolicy::default(),
        };
        let mut declared_dim = None;
        for (n, line) in text.lines().enumerate() {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.is_empty() {
                continue;
            }
            if n == 0 && parts.len() == 2 && parts.iter().all(|p| p.parse::<usize>().is_ok()) {
                declared_dim = parts[1].parse::<usize>().ok();
                continue;
            }
            let values: Vec<T> = parts[1..]
                .iter()
                .map(|p| p.parse::<f64>().map(T::lit))
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::data(format!("line {}: unparsable number", n + 1)))?;
            let expected = declared_dim.unwrap_or(if m.words.is_empty() {
                values.len()
            } else {
                m.dim
            });
            if values.is_empty() || values.len() != expected {
                return Err(Error::data(format!(
                    "line {}: expected {expected} values, found {}",
                    n + 1,
                    values.len()
                )));
            }
            m.dim = expected;
            m.push(parts[0].to_string(), values)
                .map_err(|e| Error::data(format!("line {}: {e}", n + 1)))?;
        }
        if m.words.is_empty() {
            return Err(Error::data("embedding file contains no vectors"));
        }
        m.finish();
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::data(format!("{}: {e}", path.display())))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.words.len(), self.dim);
        for (i, w) in self.words.iter().enumerate() {
            out.push_str(w);
            for x in self.row(i) {
                out.push_str(&format!(" {:?}", x.to_f64_lossy()));
            }
            out.push('\n');
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, word: &str) -> Option<&[T]> {
        self.index.get(word).map(|&i| self.row(i))
    }

    /// Vector used for words not in the matrix.
    pub fn oov_vector(&self) -> Vec<T> {
        match self.oov_policy {
            OovPolicy::ZeroVector => vec![T::zero(); self.dim],
            OovPolicy::MeanVector => self.mean.clone(),
        }
    }

    pub fn lookup(&self, word: &str) -> Vec<T> {
        self.get(word)
            .map(<[T]>::to_vec)
            .unwrap_or_else(|| self.oov_vector())
    }
}

pub fn load_embeddings<T: Scalar>(path: &Path) -> Result<EmbeddingMatrix<T>> {
    EmbeddingMatrix::load(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_and_without_header() {
        let e = EmbeddingMatrix::<f64>::parse("3 4\nkat 1 2 3 4\nhond 0 0 0 1\nmuur 1 1 1 1\n")
            .unwrap();
        assert_eq!((e.len(), e.dim()), (3, 4));
        assert_eq!(e.get("hond").unwrap(), [0.0, 0.0, 0.0, 1.0]);
        let e = EmbeddingMatrix::<f32>::parse("kat 1 2\nhond 3 4\n").unwrap();
        assert_eq!(e.dim(), 2);
    }

    #[test]
    fn oov_policies() {
        let mut e = EmbeddingMatrix::<f64>::parse("a 1 2\nb 3 4\n").unwrap();
        assert_eq!(e.lookup("zzz"), [0.0, 0.0]);
        e.oov_policy = OovPolicy::MeanVector;
        assert_eq!(e.lookup("zzz"), [2.0, 3.0]);
        assert_eq!(e.lookup("a"), [1.0, 2.0]);
    }

    #[test]
    fn duplicates_keep_first() {
        let e = EmbeddingMatrix::<f64>::parse("a 1 2\na 3 4\n").unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e.get("a").unwrap(), [1.0, 2.0]);
    }

    #[test]
    fn inconsistent_dimension_names_line() {
        let err = EmbeddingMatrix::<f64>::parse("a 1 2\nb 3\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 2"), "{err}");
        let err = EmbeddingMatrix::<f64>::parse("2 3\na 1 2\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 2"), "{err}");
        assert!(EmbeddingMatrix::<f64>::parse("").is_err());
        assert!(EmbeddingMatrix::<f64>::parse("a 1 x\n").is_err());
    }

    #[test]
    fn text_round_trip() {
        let e = EmbeddingMatrix::<f64>::parse("a 0.1 -2.5\nb 3 4e-3\n").unwrap();
        assert_eq!(EmbeddingMatrix::<f64>::parse(&e.to_text()).unwrap(), e);
    }
}
