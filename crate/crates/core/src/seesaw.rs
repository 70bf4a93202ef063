//! See-saw (alternating ascent) lower bounds on the quantum value of a Bell functional.
//!
//! A sweep sets the state to a principal eigenvector of the Bell operator,
//! then improves Alice's and Bob's measurements one question at a time. With
//! the state and the other party fixed, the value is linear in a question's
//! projectors, `Σ_a Tr(P_a R_a)`. For a pair of outcomes `(a, a')` the sum
//! `P_a + P_a'` is held fixed and split along the sign of the restricted
//! response difference `R_a − R_a'`, which is the best two-outcome choice on
//! that subspace. Only improving splits are accepted, so the value never
//! decreases.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell::{BellFunctional, Variant};
use crate::correlation::{QuantumStrategy, ALICE_QUESTIONS, BOB_QUESTIONS};
use crate::error::{Error, Result};
use crate::ideal::{ideal_maxent_strategy, ideal_tilted_strategy};
use crate::linalg::{
    hermitian_eigen, kron, principal_eigenvector, random_hermitian, range_basis, unitary_from_hermitian, CMat,
    CVec,
};

/// Eigenvalues closer than this to the top one count as degenerate in the state step.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// A see-saw value above the bound by more than this is flagged.
pub const EXCESS_TOL: f64 = 1e-7;

/// Cap on passes over outcome pairs within one question update.
const MAX_PAIR_PASSES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Init {
    Random,
    /// Ideal strategy with every measurement rotated by `exp(i·noise·H)`,
    /// `H` a unit-norm random Hermitian matrix.
    IdealPerturbed { noise: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeesawConfig {
    #[serde(rename = "dA")]
    pub dim_a: usize,
    #[serde(rename = "dB")]
    pub dim_b: usize,
    pub restarts: usize,
    pub max_iters: usize,
    pub convergence_tol: f64,
    pub seed: u64,
    pub init: Init,
}

impl SeesawConfig {
    /// Local dimensions `d`, 20 random restarts.
    pub fn new(d: usize, seed: u64) -> Self {
        Self {
            dim_a: d,
            dim_b: d,
            restarts: 20,
            max_iters: 2000,
            convergence_tol: 1e-10,
            seed,
            init: Init::Random,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_iters == 0 {
            return Err(Error::Input("restarts and max_iters must be at least 1".into()));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::Input(format!(
                "convergence_tol must be positive, got {}",
                self.convergence_tol
            )));
        }
        if self.dim_a == 0 || self.dim_b == 0 {
            return Err(Error::Input("local dimensions must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeesawResult {
    pub best_value: f64,
    pub best_strategy: QuantumStrategy,
    pub best_restart: usize,
    /// Value after each sweep, per restart.
    pub trajectory: Vec<Vec<f64>>,
    pub converged: Vec<bool>,
    /// `f.quantum_bound()`.
    pub bound: f64,
    /// The bound is only proven for the even-d max-entangled family.
    pub bound_is_conjectural: bool,
    pub exceeds_bound: bool,
}

/// `M = Σ_{x,y,a,b} coeff · Π_{A_x}^a ⊗ Π_{B_y}^b`, in the Alice-major basis `i·dB + j`.
pub fn bell_operator_matrix(f: &BellFunctional, s: &QuantumStrategy) -> Result<CMat> {
    check_dims(f, s)?;
    let (da, db) = (s.dim_a(), s.dim_b());
    let mut m = CMat::zeros(da * db, da * db);
    for x in 0..ALICE_QUESTIONS {
        for a in 0..f.d() {
            let mut bob_side = CMat::zeros(db, db);
            for y in 0..BOB_QUESTIONS {
                for b in 0..f.d() {
                    let c = f.coeff(x, y, a, b);
                    if c != 0.0 {
                        bob_side += s.bob()[y][b].scale(c);
                    }
                }
            }
            m += kron(&s.alice()[x][a], &bob_side);
        }
    }
    Ok(m)
}

fn check_dims(f: &BellFunctional, s: &QuantumStrategy) -> Result<()> {
    if s.d() != f.d() {
        return Err(Error::Shape(format!(
            "strategy has {} outcomes, functional has d = {}",
            s.d(),
            f.d()
        )));
    }
    if s.nx() != ALICE_QUESTIONS || s.ny() != BOB_QUESTIONS {
        return Err(Error::Shape(format!(
            "strategy has {}x{} questions, expected {ALICE_QUESTIONS}x{BOB_QUESTIONS}",
            s.nx(),
            s.ny()
        )));
    }
    Ok(())
}

fn expectation(m: &CMat, psi: &CVec) -> f64 {
    psi.dotc(&(m * psi)).re
}

/// Row-major reshape of the state into a `dA × dB` matrix.
fn reshape(psi: &CVec, da: usize, db: usize) -> CMat {
    CMat::from_fn(da, db, |i, j| psi[i * db + j])
}

/// Replace the pair `(a, a')` by the positive/negative split of `R_a − R_a'`
/// on the range of `P_a + P_a'`. Returns the gain, or `None` if not positive.
fn improve_pair(pvm: &mut [CMat], responses: &[CMat], a: usize, a2: usize) -> Option<f64> {
    let dim = pvm[a].nrows();
    let joint = &pvm[a] + &pvm[a2];
    let basis = range_basis(&joint);
    if basis.is_empty() {
        return None;
    }
    let v = CMat::from_columns(&basis);
    let diff = v.adjoint() * (&responses[a] - &responses[a2]) * &v;
    let (values, vectors) = hermitian_eigen(&diff);
    let current = (&pvm[a] * &responses[a]).trace().re + (&pvm[a2] * &responses[a2]).trace().re;

    let mut new_a = CMat::zeros(dim, dim);
    for (k, &lambda) in values.iter().enumerate() {
        if lambda > 0.0 {
            let col = &v * vectors.column(k);
            new_a += &col * col.adjoint();
        }
    }
    let whole = &v * v.adjoint();
    let new_a2 = &whole - &new_a;
    let proposed = (&new_a * &responses[a]).trace().re + (&new_a2 * &responses[a2]).trace().re;
    let gain = proposed - current;
    if gain > 0.0 {
        pvm[a] = new_a;
        pvm[a2] = new_a2;
        Some(gain)
    } else {
        None
    }
}

/// Pairwise coordinate ascent for one question until no pair gains more than `tol`.
fn improve_question(pvm: &mut [CMat], responses: &[CMat], tol: f64) {
    let d = pvm.len();
    for _ in 0..MAX_PAIR_PASSES {
        let mut best_gain = 0.0f64;
        for a in 0..d {
            for a2 in a + 1..d {
                if let Some(g) = improve_pair(pvm, responses, a, a2) {
                    best_gain = best_gain.max(g);
                }
            }
        }
        if best_gain <= tol {
            break;
        }
    }
}

/// One full sweep: state step, Alice step, Bob step. Returns the value after it.
fn sweep(f: &BellFunctional, s: &mut QuantumStrategy, tol: f64) -> Result<f64> {
    let d = f.d();
    let (da, db) = (s.dim_a(), s.dim_b());
    let m = bell_operator_matrix(f, s)?;
    let (_, psi) = principal_eigenvector(&m, DEGENERACY_TOL);
    let (state, alice, bob) = s.parts_mut();
    *state = psi;
    let big_psi = reshape(state, da, db);
    let psi_adj = big_psi.adjoint();

    // Alice: R_{x,a} = Ψ (Σ_{y,b} c B_{y,b}^T) Ψ†
    let bob_t: Vec<Vec<CMat>> = bob.iter().map(|q| q.iter().map(|p| p.transpose()).collect()).collect();
    for (x, pvm) in alice.iter_mut().enumerate() {
        let responses: Vec<CMat> = (0..d)
            .map(|a| {
                let mut k = CMat::zeros(db, db);
                for (y, q) in bob_t.iter().enumerate() {
                    for (b, pt) in q.iter().enumerate() {
                        let c = f.coeff(x, y, a, b);
                        if c != 0.0 {
                            k += pt.scale(c);
                        }
                    }
                }
                &big_psi * k * &psi_adj
            })
            .collect();
        improve_question(pvm, &responses, tol);
    }

    // Bob: S_{y,b} = (Σ_{x,a} c Ψ† A_{x,a} Ψ)^T
    let reduced: Vec<Vec<CMat>> = alice
        .iter()
        .map(|q| q.iter().map(|p| (&psi_adj * p * &big_psi).transpose()).collect())
        .collect();
    for (y, pvm) in bob.iter_mut().enumerate() {
        let responses: Vec<CMat> = (0..d)
            .map(|b| {
                let mut k = CMat::zeros(db, db);
                for (x, q) in reduced.iter().enumerate() {
                    for (a, r) in q.iter().enumerate() {
                        let c = f.coeff(x, y, a, b);
                        if c != 0.0 {
                            k += r.scale(c);
                        }
                    }
                }
                k
            })
            .collect();
        improve_question(pvm, &responses, tol);
    }

    let m = bell_operator_matrix(f, s)?;
    Ok(expectation(&m, s.state()))
}

fn initial_strategy(f: &BellFunctional, cfg: &SeesawConfig, rng: &mut ChaCha8Rng) -> Result<QuantumStrategy> {
    let d = f.d();
    match cfg.init {
        Init::Random => Ok(QuantumStrategy::random(
            d,
            cfg.dim_a,
            cfg.dim_b,
            ALICE_QUESTIONS,
            BOB_QUESTIONS,
            rng,
        )),
        Init::IdealPerturbed { noise } => {
            if cfg.dim_a != d || cfg.dim_b != d {
                return Err(Error::Input(format!(
                    "IdealPerturbed needs dA = dB = d = {d}, got {}x{}",
                    cfg.dim_a, cfg.dim_b
                )));
            }
            let ideal = match (f.variant(), f.tilted_spec()) {
                (Variant::Tilted, Some(spec)) => ideal_tilted_strategy(spec)?,
                _ => ideal_maxent_strategy(d)?,
            };
            let rotate = |pvm: &Vec<CMat>, rng: &mut ChaCha8Rng| -> Vec<CMat> {
                let u = unitary_from_hermitian(&random_hermitian(d, rng), noise);
                pvm.iter().map(|p| &u * p * u.adjoint()).collect()
            };
            let alice = ideal.alice().iter().map(|q| rotate(q, rng)).collect();
            let bob = ideal.bob().iter().map(|q| rotate(q, rng)).collect();
            QuantumStrategy::from_parts_unchecked(d, ideal.state().clone(), alice, bob)
        }
    }
}

struct RestartOutcome {
    value: f64,
    strategy: QuantumStrategy,
    trajectory: Vec<f64>,
    converged: bool,
}

fn run_restart(f: &BellFunctional, cfg: &SeesawConfig, restart: usize) -> Result<RestartOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(restart as u64);
    let mut s = initial_strategy(f, cfg, &mut rng)?;
    let mut trajectory = Vec::new();
    let mut converged = false;
    let mut best = (f64::NEG_INFINITY, s.clone());
    for _ in 0..cfg.max_iters {
        let value = sweep(f, &mut s, cfg.convergence_tol)?;
        let previous = trajectory.last().copied();
        trajectory.push(value);
        if value > best.0 {
            best = (value, s.clone());
        }
        if let Some(prev) = previous {
            if (value - prev).abs() < cfg.convergence_tol {
                converged = true;
                break;
            }
        }
    }
    Ok(RestartOutcome {
        value: best.0,
        strategy: best.1,
        trajectory,
        converged,
    })
}

/// Best value over `cfg.restarts` independent restarts. Restarts run in
/// parallel; restart `r` draws from stream `r` of a ChaCha8 generator seeded
/// with `cfg.seed`, so the result does not depend on scheduling.
pub fn seesaw(f: &BellFunctional, cfg: &SeesawConfig) -> Result<SeesawResult> {
    cfg.validate()?;
    let outcomes = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| run_restart(f, cfg, r))
        .collect::<Result<Vec<_>>>()?;

    let mut best_restart = 0;
    for (r, o) in outcomes.iter().enumerate() {
        if o.value > outcomes[best_restart].value {
            best_restart = r;
        }
    }
    let bound = f.quantum_bound();
    let best_value = outcomes[best_restart].value;
    let bound_is_conjectural = !(f.variant() == Variant::MaxEntangled && f.d().is_multiple_of(2));
    let mut trajectory = Vec::with_capacity(outcomes.len());
    let mut converged = Vec::with_capacity(outcomes.len());
    let mut best_strategy = None;
    for (r, o) in outcomes.into_iter().enumerate() {
        trajectory.push(o.trajectory);
        converged.push(o.converged);
        if r == best_restart {
            best_strategy = Some(o.strategy);
        }
    }
    Ok(SeesawResult {
        best_value,
        best_strategy: best_strategy.expect("at least one restart"),
        best_restart,
        trajectory,
        converged,
        bound,
        bound_is_conjectural,
        exceeds_bound: best_value > bound + EXCESS_TOL,
    })
}
