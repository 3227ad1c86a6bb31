//! Text embedding files.
//!
//! ```text
//! <count> <dim>
//! <label> <v1> ... <vdim>
//! ```
//!
//! Values use six-decimal fixed point. Word files are keyed by token, paragraph
//! files by the 0-based line number of the source document.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::Matrix;
use crate::error::{Error, Result};

/// Writes one labelled row per line.
pub fn write_embeddings<W, L, S>(mut writer: W, labels: L, matrix: &Matrix) -> std::io::Result<()>
where
    W: Write,
    L: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    writeln!(writer, "{} {}", matrix.rows(), matrix.dim())?;
    let mut labels = labels.into_iter();
    for row in matrix.iter_rows() {
        let label = labels.next().expect("fewer labels than rows");
        writer.write_all(label.as_ref().as_bytes())?;
        for x in row {
            write!(writer, " {x:.6}")?;
        }
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn write_embeddings_file<L, S>(path: impl AsRef<Path>, labels: L, matrix: &Matrix) -> Result<()>
where
    L: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_embeddings(BufWriter::new(file), labels, matrix).map_err(|e| Error::io(path, e))
}

/// Embeddings read back from a text file, in double precision.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    pub labels: Vec<String>,
    pub dim: usize,
    pub rows: Vec<Vec<f64>>,
}

impl EmbeddingTable {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(BufReader::new(file), path)
    }

    pub fn from_reader<R: BufRead>(reader: R, path: &Path) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let header = match lines.next() {
            Some((_, line)) => line.map_err(|e| Error::io(path, e))?,
            None => return Err(Error::parse(path, 1, "missing header line")),
        };
        let mut fields = header.split_ascii_whitespace();
        let parse_usize = |s: Option<&str>| s.and_then(|s| s.parse::<usize>().ok());
        let (count, dim) = match (
            parse_usize(fields.next()),
            parse_usize(fields.next()),
            fields.next(),
        ) {
            (Some(c), Some(d), None) => (c, d),
            _ => return Err(Error::parse(path, 1, "header must be '<count> <dim>'")),
        };

        let mut labels = Vec::with_capacity(count);
        let mut rows = Vec::with_capacity(count);
        for (i, line) in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_ascii_whitespace();
            let label = fields.next().unwrap().to_owned();
            let row = fields
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(path, i + 1, format!("bad value: {e}")))?;
            if row.len() != dim {
                return Err(Error::parse(
                    path,
                    i + 1,
                    format!("expected {dim} values, found {}", row.len()),
                ));
            }
            labels.push(label);
            rows.push(row);
        }
        if rows.len() != count {
            return Err(Error::parse(
                path,
                1,
                format!("header declares {count} rows, file has {}", rows.len()),
            ));
        }
        Ok(EmbeddingTable { labels, dim, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows rescaled to unit norm; zero rows stay zero.
    pub fn normalized_rows(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| {
                let mut r = r.clone();
                crate::sphere::normalize_in_place(&mut r);
                r
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use std::io::Cursor;

    use super::*;

    #[test]
    fn writes_fixed_point_rows() {
        let m = Matrix::from_vec(2, 2, vec![0.6, 0.8, -1.0, 0.0]).unwrap();
        let mut out = Vec::new();
        write_embeddings(&mut out, ["a", "b"], &m).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "2 2\na 0.600000 0.800000\nb -1.000000 0.000000\n"
        );
    }

    #[test]
    fn reads_what_it_writes() {
        let m = Matrix::from_vec(3, 2, vec![0.6, 0.8, -1.0, 0.0, 0.0, 1.0]).unwrap();
        let mut out = Vec::new();
        write_embeddings(&mut out, (0..3).map(|i| i.to_string()), &m).unwrap();
        let t = EmbeddingTable::from_reader(Cursor::new(out), Path::new("mem")).unwrap();
        assert_eq!(t.labels, ["0", "1", "2"]);
        assert_eq!(t.dim, 2);
        assert_eq!(t.rows[0], vec![0.6, 0.8]);
    }

    #[test]
    fn rejects_malformed_files() {
        let bad = [
            "",
            "2\n",
            "1 2\na 0.1\n",
            "2 2\na 0.1 0.2\n",
            "1 2\na 0.1 zz\n",
        ];
        for text in bad {
            assert!(
                EmbeddingTable::from_reader(Cursor::new(text), Path::new("mem")).is_err(),
                "{text:?}"
            );
        }
    }
}
