//! Ideal strategies: the maximally entangled construction that attains the
//! quantum bound, and its per-block tilted lift.
//!
//! Every measurement is block diagonal. Within a two-dimensional block with
//! ordered basis `(|i⟩, |j⟩)` the observable `cos μ σ_Z + sin μ σ_X` has
//! eigenprojectors `(I ± (cos μ σ_Z + sin μ σ_X))/2`, written down in closed
//! form. The `+1` projector goes to the first label of the block.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use crate::bell::{block_labels, num_blocks, primed_block_labels, TiltedSpec};
use crate::correlation::{correlation_from_quantum, Correlation, QuantumStrategy};
use crate::error::{Error, Result};
use crate::linalg::{basis_projector, c, CMat, CVec};

/// Named single-qubit observables used inside a block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlockOperator {
    Z,
    X,
    ZPlusXOverSqrt2,
    ZMinusXOverSqrt2,
    /// `cos μ σ_Z + sign · sin μ σ_X`.
    TiltedBob { mu: f64, sign: f64 },
}

impl BlockOperator {
    /// Angle `φ` with the observable equal to `cos φ σ_Z + sin φ σ_X`.
    pub fn angle(self) -> f64 {
        match self {
            BlockOperator::Z => 0.0,
            BlockOperator::X => FRAC_PI_2,
            BlockOperator::ZPlusXOverSqrt2 => FRAC_PI_4,
            BlockOperator::ZMinusXOverSqrt2 => -FRAC_PI_4,
            BlockOperator::TiltedBob { mu, sign } => sign * mu,
        }
    }
}

/// A two-outcome observable acting on the span of two computational basis states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockObservableSpec {
    pub block: usize,
    pub basis_pair: (usize, usize),
    pub operator: BlockOperator,
}

impl BlockObservableSpec {
    pub fn new(block: usize, basis_pair: (usize, usize), operator: BlockOperator, dim: usize) -> Result<Self> {
        let (i, j) = basis_pair;
        if i == j || i >= dim || j >= dim {
            return Err(Error::Input(format!(
                "basis pair ({i},{j}) must be distinct labels below {dim}"
            )));
        }
        Ok(Self {
            block,
            basis_pair,
            operator,
        })
    }

    /// `(+1 projector, −1 projector)` embedded in a `dim`-dimensional space.
    pub fn projectors(&self, dim: usize) -> (CMat, CMat) {
        let phi = self.operator.angle();
        let (cz, sx) = (phi.cos(), phi.sin());
        let (i, j) = self.basis_pair;
        let mut plus = CMat::zeros(dim, dim);
        let mut minus = CMat::zeros(dim, dim);
        plus[(i, i)] = c((1.0 + cz) / 2.0);
        plus[(j, j)] = c((1.0 - cz) / 2.0);
        plus[(i, j)] = c(sx / 2.0);
        plus[(j, i)] = c(sx / 2.0);
        minus[(i, i)] = c((1.0 - cz) / 2.0);
        minus[(j, j)] = c((1.0 + cz) / 2.0);
        minus[(i, j)] = c(-sx / 2.0);
        minus[(j, i)] = c(-sx / 2.0);
        (plus, minus)
    }
}

/// Measurement that applies a block observable on every unprimed (or primed)
/// block, assigns the `±1` projectors to the block's first/second label, and
/// gives the odd-d leftover label its basis projector.
fn block_pvm(d: usize, primed: bool, op_for_block: impl Fn(usize) -> BlockOperator) -> Vec<CMat> {
    let mut pvm = vec![CMat::zeros(d, d); d];
    for m in 0..num_blocks(d) {
        let labels = if primed { primed_block_labels(d, m) } else { block_labels(m) };
        let spec = BlockObservableSpec {
            block: m,
            basis_pair: labels,
            operator: op_for_block(m),
        };
        let (plus, minus) = spec.projectors(d);
        pvm[labels.0] = plus;
        pvm[labels.1] = minus;
    }
    if d % 2 == 1 {
        let leftover = if primed { 0 } else { d - 1 };
        pvm[leftover] = basis_projector(d, leftover);
    }
    pvm
}

fn lifted_strategy(amplitudes: &[f64], mu: &[f64], mu_prime: &[f64]) -> Result<QuantumStrategy> {
    let d = amplitudes.len();
    let mut state = CVec::zeros(d * d);
    for (i, &a) in amplitudes.iter().enumerate() {
        state[i * d + i] = c(a);
    }
    let computational: Vec<CMat> = (0..d).map(|a| basis_projector(d, a)).collect();
    let alice = vec![
        computational,
        block_pvm(d, false, |_| BlockOperator::X),
        block_pvm(d, true, |_| BlockOperator::X),
    ];
    let bob = (0..4)
        .map(|y| {
            let sign = if y % 2 == 0 { 1.0 } else { -1.0 };
            if y < 2 {
                block_pvm(d, false, |m| BlockOperator::TiltedBob { mu: mu[m], sign })
            } else {
                block_pvm(d, true, |m| BlockOperator::TiltedBob { mu: mu_prime[m], sign })
            }
        })
        .collect();
    QuantumStrategy::new(d, state, alice, bob)
}

/// State `(1/√d) Σ_i |ii⟩`; Alice measures σ_Z, σ_X, σ_X' blockwise and Bob
/// `(σ_Z ± σ_X)/√2` blockwise, with odd-d leftovers as basis projectors.
pub fn ideal_maxent_strategy(d: usize) -> Result<QuantumStrategy> {
    if d < 2 {
        return Err(Error::Input(format!("d must be at least 2, got {d}")));
    }
    let amp = 1.0 / (d as f64).sqrt();
    let mu = vec![FRAC_PI_4; num_blocks(d)];
    lifted_strategy(&vec![amp; d], &mu, &mu)
}

pub fn ideal_maxent_correlation(d: usize) -> Result<Correlation> {
    correlation_from_quantum(&ideal_maxent_strategy(d)?)
}

/// State `Σ_i c_i |ii⟩`; Alice as in the maximally entangled case; Bob
/// measures `cos μ_m σ_Z ± sin μ_m σ_X` in each block with `μ_m = arctan sin 2θ_m`.
pub fn ideal_tilted_strategy(spec: &TiltedSpec) -> Result<QuantumStrategy> {
    let recomputed = TiltedSpec::from_coefficients(&spec.c)?;
    lifted_strategy(&recomputed.c, &recomputed.mu, &recomputed.mu_prime)
}

pub fn ideal_tilted_correlation(spec: &TiltedSpec) -> Result<Correlation> {
    correlation_from_quantum(&ideal_tilted_strategy(spec)?)
}
