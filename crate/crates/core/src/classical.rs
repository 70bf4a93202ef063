//! Exact classical maximum of a Bell functional by enumerating all
//! deterministic strategies.
//!
//! For a fixed `f_A` the coefficient slices `Σ_x coeff[x][y][f_A(x)][b]` are
//! tabulated once per `(y, b)`; each `f_B` then costs four lookups. The
//! `f_A` space is split across rayon workers and the partial results merged
//! by maximum and tie union, which is order independent.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell::BellFunctional;
use crate::correlation::{DeterministicStrategy, ALICE_QUESTIONS, BOB_QUESTIONS};
use crate::error::{Error, Result};

/// Largest d enumerated by default (`d^7` strategies).
pub const DEFAULT_MAX_D: usize = 10;

/// Two strategies whose values differ by at most this are tied.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalMaxResult {
    pub value: f64,
    /// Maximizers in lexicographic `(f_A, f_B)` order.
    pub argmax: Vec<DeterministicStrategy>,
    #[serde(rename = "scanned")]
    pub strategies_scanned: u128,
}

pub fn strategy_count(d: usize) -> u128 {
    (d as u128).pow((ALICE_QUESTIONS + BOB_QUESTIONS) as u32)
}

/// Value of one deterministic strategy: `Σ_{x,y} coeff[x][y][f_A(x)][f_B(y)]`.
pub fn classical_value_of(f: &BellFunctional, s: &DeterministicStrategy) -> Result<f64> {
    s.check_range(f.d())?;
    let mut total = 0.0;
    for x in 0..ALICE_QUESTIONS {
        for y in 0..BOB_QUESTIONS {
            total += f.coeff(x, y, s.fa[x], s.fb[y]);
        }
    }
    Ok(total)
}

pub fn classical_max(f: &BellFunctional) -> Result<ClassicalMaxResult> {
    classical_max_with_cap(f, DEFAULT_MAX_D)
}

pub fn classical_max_with_cap(f: &BellFunctional, max_d: usize) -> Result<ClassicalMaxResult> {
    let d = f.d();
    if d > max_d {
        return Err(Error::EnumerationCap {
            d,
            cap: max_d,
            count: strategy_count(d),
        });
    }
    let alice_count = d.pow(ALICE_QUESTIONS as u32);
    let merged = (0..alice_count)
        .into_par_iter()
        .map(|ia| scan_alice_assignment(f, decode(ia, d)))
        .reduce(Partial::empty, Partial::merge);
    let mut argmax = merged.argmax;
    // partial maxima may differ by up to TIE_TOL; re-filter against the global one
    argmax.retain(|s| {
        let v = classical_value_of(f, s).unwrap_or(f64::NEG_INFINITY);
        v >= merged.value - TIE_TOL
    });
    argmax.sort();
    Ok(ClassicalMaxResult {
        value: merged.value,
        argmax,
        strategies_scanned: strategy_count(d),
    })
}

fn decode<const N: usize>(mut index: usize, d: usize) -> [usize; N] {
    let mut out = [0; N];
    for slot in out.iter_mut().rev() {
        *slot = index % d;
        index /= d;
    }
    out
}

struct Partial {
    value: f64,
    argmax: Vec<DeterministicStrategy>,
}

impl Partial {
    fn empty() -> Self {
        Self {
            value: f64::NEG_INFINITY,
            argmax: Vec::new(),
        }
    }

    fn offer(&mut self, value: f64, make: impl FnOnce() -> DeterministicStrategy) {
        if value > self.value + TIE_TOL {
            self.value = value;
            self.argmax.clear();
            self.argmax.push(make());
        } else if value >= self.value - TIE_TOL {
            self.argmax.push(make());
            if value > self.value {
                self.value = value;
            }
        }
    }

    fn merge(mut self, other: Self) -> Self {
        if other.value > self.value + TIE_TOL {
            return other;
        }
        if self.value > other.value + TIE_TOL {
            return self;
        }
        self.value = self.value.max(other.value);
        self.argmax.extend(other.argmax);
        self
    }
}

fn scan_alice_assignment(f: &BellFunctional, fa: [usize; ALICE_QUESTIONS]) -> Partial {
    let d = f.d();
    // slice[y][b] = Σ_x coeff[x][y][fa[x]][b]
    let mut slice = vec![[0.0f64; BOB_QUESTIONS]; d];
    for y in 0..BOB_QUESTIONS {
        for (b, row) in slice.iter_mut().enumerate() {
            row[y] = (0..ALICE_QUESTIONS).map(|x| f.coeff(x, y, fa[x], b)).sum();
        }
    }
    let mut best = Partial::empty();
    for b0 in 0..d {
        let v0 = slice[b0][0];
        for b1 in 0..d {
            let v1 = v0 + slice[b1][1];
            for b2 in 0..d {
                let v2 = v1 + slice[b2][2];
                for b3 in 0..d {
                    let value = v2 + slice[b3][3];
                    best.offer(value, || DeterministicStrategy {
                        fa,
                        fb: [b0, b1, b2, b3],
                    });
                }
            }
        }
    }
    let top = best.value;
    best.argmax.retain(|s| {
        let v: f64 = (0..BOB_QUESTIONS).map(|y| slice[s.fb[y]][y]).sum();
        v >= top - TIE_TOL
    });
    best
}
