//! Point sets and their CSV file format.
//!
//! ```text
//! # sepkit pointset v1, n=3, kind=unit-ball, seed=42
//! 1.2345678901234567e-1,-5.0000000000000000e-1,3.3333333333333331e-1
//! ...
//! ```
//!
//! Values are written with 17 significant digits, enough to round-trip every
//! `f64` exactly. `kind=external` and `seed=none` mark data that did not come
//! from [`crate::sampling::sample`].

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::sampling::DistributionKind;
use crate::{Error, Result};

const HEADER_PREFIX: &str = "# sepkit pointset v1";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Origin {
    pub kind: Option<DistributionKind>,
    pub seed: Option<u64>,
}

/// `M` points in `R^n`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    data: Vec<f64>,
    origin: Origin,
}

impl PointSet {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        Self::with_origin(dim, data, Origin::default())
    }

    pub fn with_origin(dim: usize, data: Vec<f64>, origin: Origin) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("point dimension must be at least 1"));
        }
        if data.is_empty() || !data.len().is_multiple_of(dim) {
            return Err(Error::Format(format!(
                "{} values do not form a non-empty set of {dim}-dimensional rows",
                data.len()
            )));
        }
        Ok(PointSet { dim, data, origin })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    /// New point set holding the given rows, in order.
    pub fn select(&self, indices: &[usize]) -> PointSet {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        PointSet {
            dim: self.dim,
            data,
            origin: Origin::default(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = BufWriter::new(out);
        let kind = self.origin.kind.map_or("external", |k| k.as_str());
        let seed = self
            .origin
            .seed
            .map_or_else(|| "none".to_string(), |s| s.to_string());
        writeln!(
            w,
            "{HEADER_PREFIX}, n={}, kind={kind}, seed={seed}",
            self.dim
        )?;
        for row in self.rows() {
            for (j, x) in row.iter().enumerate() {
                if j > 0 {
                    w.write_all(b",")?;
                }
                write!(w, "{x:.16e}")?;
            }
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(fs::File::create(path)?)
    }

    /// Parses the CSV format. A file without the header line is accepted as
    /// external data with `n` taken from the first row.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let reader = BufReader::new(input);
        let mut dim = None;
        let mut origin = Origin::default();
        let mut data = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('#') {
                if lineno == 0 && line.starts_with(HEADER_PREFIX) {
                    let (n, o) = parse_header(line)?;
                    dim = Some(n);
                    origin = o;
                }
                continue;
            }
            let before = data.len();
            for field in line.split(',') {
                let v: f64 = field.trim().parse().map_err(|_| {
                    Error::Format(format!(
                        "line {}: bad number `{}`",
                        lineno + 1,
                        field.trim()
                    ))
                })?;
                data.push(v);
            }
            let width = data.len() - before;
            match dim {
                None => dim = Some(width),
                Some(n) if n != width => {
                    return Err(Error::Format(format!(
                        "line {}: expected {n} values, found {width}",
                        lineno + 1
                    )))
                }
                _ => {}
            }
        }
        let dim = dim.ok_or_else(|| Error::Format("empty point file".into()))?;
        if data.is_empty() {
            return Err(Error::Format("point file has no rows".into()));
        }
        Self::with_origin(dim, data, origin)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(fs::File::open(path)?)
    }
}

fn parse_header(line: &str) -> Result<(usize, Origin)> {
    let mut dim = None;
    let mut origin = Origin::default();
    for part in line[HEADER_PREFIX.len()..].split(',') {
        let Some((key, value)) = part.trim().split_once('=') else {
            continue;
        };
        match key.trim() {
            "n" => {
                dim = Some(
                    value
                        .trim()
                        .parse()
                        .map_err(|_| Error::Format(format!("bad header dimension `{value}`")))?,
                )
            }
            "kind" if value.trim() != "external" => origin.kind = Some(value.trim().parse()?),
            "seed" if value.trim() != "none" => {
                origin.seed = Some(
                    value
                        .trim()
                        .parse()
                        .map_err(|_| Error::Format(format!("bad header seed `{value}`")))?,
                )
            }
            _ => {}
        }
    }
    let dim = dim.ok_or_else(|| Error::Format("header is missing n=".into()))?;
    Ok((dim, origin))
}

/// Reads a file of 0-based row indices, one per line. Blank lines and `#`
/// comments are skipped.
pub fn read_indices<R: Read>(input: R) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(
            line.parse()
                .map_err(|_| Error::Format(format!("line {}: bad index `{line}`", lineno + 1)))?,
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{sample, DistributionSpec};
    use proptest::prelude::*;

    #[test]
    fn header_carries_provenance() {
        let ps = sample(&DistributionSpec::unit_ball(3), 2, 42).unwrap();
        let mut buf = Vec::new();
        ps.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# sepkit pointset v1, n=3, kind=unit-ball, seed=42\n"));
        assert_eq!(text.lines().count(), 3);
        let back = PointSet::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back, ps);
    }

    #[test]
    fn headerless_file_is_external() {
        let ps = PointSet::read_csv("1,2\n3,4\n".as_bytes()).unwrap();
        assert_eq!(ps.dim(), 2);
        assert_eq!(ps.origin(), Origin::default());
        assert!(PointSet::read_csv("1,2\n3\n".as_bytes()).is_err());
        assert!(PointSet::read_csv("".as_bytes()).is_err());
    }

    #[test]
    fn indices_file() {
        let idx = read_indices("3\n\n# c\n 7 \n".as_bytes()).unwrap();
        assert_eq!(idx, vec![3, 7]);
        assert!(read_indices("x\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_bit_exact(rows in prop::collection::vec(prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 4), 1..20)) {
            let ps = PointSet::from_rows(&rows).unwrap();
            let mut buf = Vec::new();
            ps.write_csv(&mut buf).unwrap();
            let back = PointSet::read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back.data().iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
                            ps.data().iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        }
    }
}
