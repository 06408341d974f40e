//! JSON persistence for [`CorrectorModel`].
//!
//! Floats are written in shortest round-trip form, so a save/load cycle is
//! bit-exact and saving the same model twice gives identical bytes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{pipeline, CorrectorModel, FitMeta, KnowledgeUnit};
use crate::numerics::SymmetricMatrix;
use crate::{Error, Result};

pub const MODEL_VERSION: &str = "sepkit-model-1";

#[derive(Serialize, Deserialize)]
struct UnitRecord {
    w: Vec<f64>,
    c: f64,
    cluster_size: usize,
    beta1: f64,
    beta2: f64,
}

#[derive(Serialize, Deserialize)]
struct ModelRecord {
    version: String,
    n: usize,
    m: usize,
    mean: Vec<f64>,
    /// `n` rows of length `m`.
    #[serde(rename = "H")]
    projection: Vec<Vec<f64>>,
    /// `m` rows of length `m`.
    #[serde(rename = "W")]
    whitener: Vec<Vec<f64>>,
    ridge: f64,
    units: Vec<UnitRecord>,
    meta: FitMeta,
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

fn matrix_from(rows: &[Vec<f64>], nrows: usize, ncols: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Format(format!("{what} must be {nrows} x {ncols}")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

impl CorrectorModel {
    fn record(&self) -> ModelRecord {
        let p = &self.pipeline;
        ModelRecord {
            version: MODEL_VERSION.to_string(),
            n: p.input_dim(),
            m: p.output_dim(),
            mean: p.mean().iter().copied().collect(),
            projection: rows_of(p.projection()),
            whitener: rows_of(p.whitener().as_matrix()),
            ridge: p.ridge(),
            units: self
                .units
                .iter()
                .map(|u| UnitRecord {
                    w: u.w.clone(),
                    c: u.c,
                    cluster_size: u.cluster_size,
                    beta1: u.beta1,
                    beta2: u.beta2,
                })
                .collect(),
            meta: self.meta.clone(),
        }
    }

    fn from_record(r: ModelRecord) -> Result<Self> {
        if r.version != MODEL_VERSION {
            return Err(Error::Format(format!(
                "unsupported model version {:?}, expected {MODEL_VERSION:?}",
                r.version
            )));
        }
        if r.mean.len() != r.n {
            return Err(Error::Format(format!("mean must have length {}", r.n)));
        }
        let projection = matrix_from(&r.projection, r.n, r.m, "H")?;
        let whitener = SymmetricMatrix::new(matrix_from(&r.whitener, r.m, r.m, "W")?)
            .map_err(|_| Error::Format("W is not symmetric".into()))?;
        let units = r
            .units
            .into_iter()
            .map(|u| {
                if u.w.len() != r.m {
                    return Err(Error::Format(format!(
                        "unit direction must have length {}",
                        r.m
                    )));
                }
                Ok(KnowledgeUnit {
                    w: u.w,
                    c: u.c,
                    cluster_size: u.cluster_size,
                    beta1: u.beta1,
                    beta2: u.beta2,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let pipeline = pipeline::restore(
            DVector::from_vec(r.mean),
            projection,
            whitener,
            r.ridge,
            r.meta.retained_variance,
            r.meta.cond_ridge_applied,
        )?;
        Ok(CorrectorModel {
            pipeline,
            units,
            meta: r.meta,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.record())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_record(serde_json::from_str(s)?)
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        let mut out = out;
        serde_json::to_writer_pretty(&mut out, &self.record())?;
        out.write_all(b"\n")?;
        Ok(())
    }

    pub fn read_json<R: Read>(input: R) -> Result<Self> {
        Self::from_record(serde_json::from_reader(input)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_json(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_json(BufReader::new(File::open(path)?))
    }
}
