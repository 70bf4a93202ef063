//! On-disk JSON shapes.
//!
//! Tensors are nested arrays in index order `x, y, a, b`. Complex numbers are
//! two-element arrays `[re, im]`; matrices are arrays of rows.

use serde::{Deserialize, Serialize};

use crate::bell::{BellFunctional, CrossDiagonalMode, TiltedSpec, Variant};
use crate::correlation::{Correlation, QuantumStrategy};
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec};
use num_complex::Complex64;

type Tensor4 = Vec<Vec<Vec<Vec<f64>>>>;

fn nest(flat: &[f64], nx: usize, ny: usize, d: usize) -> Tensor4 {
    (0..nx)
        .map(|x| {
            (0..ny)
                .map(|y| {
                    (0..d)
                        .map(|a| {
                            let start = ((x * ny + y) * d + a) * d;
                            flat[start..start + d].to_vec()
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

fn flatten(t: &Tensor4, nx: usize, ny: usize, d: usize) -> Result<Vec<f64>> {
    if t.len() != nx {
        return Err(Error::Shape(format!("expected {nx} x-slices, got {}", t.len())));
    }
    let mut flat = Vec::with_capacity(nx * ny * d * d);
    for (x, tx) in t.iter().enumerate() {
        if tx.len() != ny {
            return Err(Error::Shape(format!("x={x}: expected {ny} y-slices, got {}", tx.len())));
        }
        for (y, txy) in tx.iter().enumerate() {
            if txy.len() != d {
                return Err(Error::Shape(format!("(x={x}, y={y}): expected {d} rows")));
            }
            for row in txy {
                if row.len() != d {
                    return Err(Error::Shape(format!("(x={x}, y={y}): expected rows of length {d}")));
                }
                flat.extend_from_slice(row);
            }
        }
    }
    Ok(flat)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationJson {
    pub d: usize,
    pub nx: usize,
    pub ny: usize,
    pub table: Tensor4,
    #[serde(default)]
    pub quantum_generated: bool,
}

impl From<Correlation> for CorrelationJson {
    fn from(c: Correlation) -> Self {
        Self {
            d: c.d(),
            nx: c.nx(),
            ny: c.ny(),
            table: nest(c.table(), c.nx(), c.ny(), c.d()),
            quantum_generated: c.is_quantum_generated(),
        }
    }
}

impl TryFrom<CorrelationJson> for Correlation {
    type Error = Error;
    fn try_from(j: CorrelationJson) -> Result<Self> {
        let flat = flatten(&j.table, j.nx, j.ny, j.d)?;
        Ok(Correlation::new(j.d, j.nx, j.ny, flat)?.with_quantum_flag(j.quantum_generated))
    }
}

type ComplexMatrixJson = Vec<Vec<[f64; 2]>>;

fn matrix_to_json(m: &CMat) -> ComplexMatrixJson {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn matrix_from_json(rows: &ComplexMatrixJson, dim: usize) -> Result<CMat> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(Error::Shape(format!("expected a {dim}x{dim} matrix")));
    }
    Ok(CMat::from_fn(dim, dim, |i, j| {
        let [re, im] = rows[i][j];
        Complex64::new(re, im)
    }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuantumStrategyJson {
    pub d: usize,
    #[serde(rename = "dA")]
    pub dim_a: usize,
    #[serde(rename = "dB")]
    pub dim_b: usize,
    pub state: Vec<[f64; 2]>,
    pub alice_pvms: Vec<Vec<ComplexMatrixJson>>,
    pub bob_pvms: Vec<Vec<ComplexMatrixJson>>,
}

impl From<QuantumStrategy> for QuantumStrategyJson {
    fn from(s: QuantumStrategy) -> Self {
        let pvms = |p: &[Vec<CMat>]| -> Vec<Vec<ComplexMatrixJson>> {
            p.iter().map(|q| q.iter().map(matrix_to_json).collect()).collect()
        };
        Self {
            d: s.d(),
            dim_a: s.dim_a(),
            dim_b: s.dim_b(),
            state: s.state().iter().map(|z| [z.re, z.im]).collect(),
            alice_pvms: pvms(s.alice()),
            bob_pvms: pvms(s.bob()),
        }
    }
}

impl TryFrom<QuantumStrategyJson> for QuantumStrategy {
    type Error = Error;
    fn try_from(j: QuantumStrategyJson) -> Result<Self> {
        let state = CVec::from_iterator(j.state.len(), j.state.iter().map(|&[re, im]| Complex64::new(re, im)));
        let load = |p: &Vec<Vec<ComplexMatrixJson>>, dim: usize| -> Result<Vec<Vec<CMat>>> {
            p.iter()
                .map(|q| q.iter().map(|m| matrix_from_json(m, dim)).collect())
                .collect()
        };
        let alice = load(&j.alice_pvms, j.dim_a)?;
        let bob = load(&j.bob_pvms, j.dim_b)?;
        QuantumStrategy::from_parts_unchecked(j.d, state, alice, bob)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BellFunctionalJson {
    pub d: usize,
    pub epsilon: f64,
    pub variant: Variant,
    pub mode: CrossDiagonalMode,
    pub coeff: Tensor4,
    pub tilted_spec: Option<TiltedSpec>,
}

impl From<&BellFunctional> for BellFunctionalJson {
    fn from(f: &BellFunctional) -> Self {
        Self {
            d: f.d(),
            epsilon: f.epsilon(),
            variant: f.variant(),
            mode: f.mode(),
            coeff: nest(f.coefficients(), 3, 4, f.d()),
            tilted_spec: f.tilted_spec().cloned(),
        }
    }
}

impl TryFrom<BellFunctionalJson> for BellFunctional {
    type Error = Error;
    fn try_from(j: BellFunctionalJson) -> Result<Self> {
        let coeff = flatten(&j.coeff, 3, 4, j.d)?;
        // derived angles are recomputed from the coefficients
        let spec = match j.tilted_spec {
            Some(s) => Some(TiltedSpec::from_coefficients(&s.c)?),
            None => None,
        };
        BellFunctional::from_parts(j.d, j.epsilon, j.variant, j.mode, coeff, spec)
    }
}

pub fn functional_to_json(f: &BellFunctional) -> Result<String> {
    Ok(serde_json::to_string_pretty(&BellFunctionalJson::from(f))?)
}

pub fn functional_from_json(s: &str) -> Result<BellFunctional> {
    let j: BellFunctionalJson = serde_json::from_str(s)?;
    BellFunctional::try_from(j)
}
