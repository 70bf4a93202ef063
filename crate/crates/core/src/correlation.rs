//! Correlations, quantum and deterministic strategies, and the maps from
//! strategies to correlations.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json::{CorrelationJson, QuantumStrategyJson};
use crate::linalg::{frobenius, haar_unitary, random_state, CMat, CVec};

/// Number of questions for Alice in the generalized CHSH scenario.
pub const ALICE_QUESTIONS: usize = 3;
/// Number of questions for Bob in the generalized CHSH scenario.
pub const BOB_QUESTIONS: usize = 4;

/// Tolerance used when generating correlations and validating constructed strategies.
pub const GENERATION_TOL: f64 = 1e-9;

/// Conditional probability table `p(a,b|x,y)`, index order x, y, a, b.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CorrelationJson", into = "CorrelationJson")]
pub struct Correlation {
    d: usize,
    nx: usize,
    ny: usize,
    table: Vec<f64>,
    quantum_generated: bool,
}

impl Correlation {
    pub fn new(d: usize, nx: usize, ny: usize, table: Vec<f64>) -> Result<Self> {
        if d == 0 || nx == 0 || ny == 0 {
            return Err(Error::Shape(format!(
                "d, nx, ny must be positive (got d={d}, nx={nx}, ny={ny})"
            )));
        }
        let expected = nx * ny * d * d;
        if table.len() != expected {
            return Err(Error::Shape(format!(
                "table has {} entries, expected {nx}*{ny}*{d}*{d} = {expected}",
                table.len()
            )));
        }
        Ok(Self {
            d,
            nx,
            ny,
            table,
            quantum_generated: false,
        })
    }

    /// All-zero table on the 3×4 question set.
    pub fn zeros(d: usize) -> Self {
        Self {
            d,
            nx: ALICE_QUESTIONS,
            ny: BOB_QUESTIONS,
            table: vec![0.0; ALICE_QUESTIONS * BOB_QUESTIONS * d * d],
            quantum_generated: false,
        }
    }

    /// `p(a,b|x,y) = 1/d²` on the 3×4 question set.
    pub fn uniform(d: usize) -> Self {
        let mut c = Self::zeros(d);
        let v = 1.0 / (d * d) as f64;
        c.table.iter_mut().for_each(|e| *e = v);
        c
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn is_quantum_generated(&self) -> bool {
        self.quantum_generated
    }

    pub fn with_quantum_flag(mut self, flag: bool) -> Self {
        self.quantum_generated = flag;
        self
    }

    /// True when the question set is the 3×4 scenario the Bell functionals act on.
    pub fn is_standard_shape(&self) -> bool {
        self.nx == ALICE_QUESTIONS && self.ny == BOB_QUESTIONS
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, a: usize, b: usize) -> usize {
        debug_assert!(x < self.nx && y < self.ny && a < self.d && b < self.d);
        ((x * self.ny + y) * self.d + a) * self.d + b
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.table[self.index(x, y, a, b)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, a: usize, b: usize, value: f64) {
        let i = self.index(x, y, a, b);
        self.table[i] = value;
    }

    /// `Σ_b p(a,b|x,y)`.
    pub fn alice_marginal(&self, x: usize, y: usize, a: usize) -> f64 {
        (0..self.d).map(|b| self.get(x, y, a, b)).sum()
    }

    /// `Σ_a p(a,b|x,y)`.
    pub fn bob_marginal(&self, x: usize, y: usize, b: usize) -> f64 {
        (0..self.d).map(|a| self.get(x, y, a, b)).sum()
    }

    /// `λ·self + (1−λ)·other`. The quantum flag survives only if both inputs carry it.
    pub fn mix(&self, other: &Correlation, lambda: f64) -> Result<Correlation> {
        if self.d != other.d || self.nx != other.nx || self.ny != other.ny {
            return Err(Error::Shape(format!(
                "cannot mix correlations of shape (d={}, {}x{}) and (d={}, {}x{})",
                self.d, self.nx, self.ny, other.d, other.nx, other.ny
            )));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Input(format!("mixing weight {lambda} not in [0,1]")));
        }
        let table = self
            .table
            .iter()
            .zip(&other.table)
            .map(|(p, q)| lambda * p + (1.0 - lambda) * q)
            .collect();
        Ok(Correlation {
            d: self.d,
            nx: self.nx,
            ny: self.ny,
            table,
            quantum_generated: self.quantum_generated && other.quantum_generated,
        })
    }

    /// Largest entrywise absolute difference. Shapes must match.
    pub fn max_abs_diff(&self, other: &Correlation) -> Result<f64> {
        if self.d != other.d || self.nx != other.nx || self.ny != other.ny {
            return Err(Error::Shape("correlation shapes differ".into()));
        }
        Ok(self
            .table
            .iter()
            .zip(&other.table)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max))
    }
}

/// A single failed invariant of a correlation.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Negative { x: usize, y: usize, a: usize, b: usize, value: f64 },
    AboveOne { x: usize, y: usize, a: usize, b: usize, value: f64 },
    Normalization { x: usize, y: usize, sum: f64 },
    /// Alice's marginal for question `x` differs between Bob's questions `y0` and `y1`.
    AliceSignaling { x: usize, a: usize, y0: usize, y1: usize, diff: f64 },
    /// Bob's marginal for question `y` differs between Alice's questions `x0` and `x1`.
    BobSignaling { y: usize, b: usize, x0: usize, x1: usize, diff: f64 },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check range and normalization of every entry, plus no-signaling when the
/// correlation is flagged as quantum generated.
pub fn validate_correlation(c: &Correlation, tol: f64) -> Result<ValidationReport> {
    if c.table.len() != c.nx * c.ny * c.d * c.d {
        return Err(Error::Shape("table length does not match (d, nx, ny)".into()));
    }
    let mut violations = Vec::new();
    for x in 0..c.nx {
        for y in 0..c.ny {
            let mut sum = 0.0;
            for a in 0..c.d {
                for b in 0..c.d {
                    let value = c.get(x, y, a, b);
                    sum += value;
                    if value < -tol {
                        violations.push(Violation::Negative { x, y, a, b, value });
                    } else if value > 1.0 + tol {
                        violations.push(Violation::AboveOne { x, y, a, b, value });
                    }
                }
            }
            if (sum - 1.0).abs() > tol {
                violations.push(Violation::Normalization { x, y, sum });
            }
        }
    }
    if c.quantum_generated {
        violations.extend(no_signaling_violations(c, tol));
    }
    Ok(ValidationReport { violations })
}

/// Every marginal pair that differs by more than `tol` across the other party's questions.
pub fn no_signaling_violations(c: &Correlation, tol: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    for x in 0..c.nx {
        for a in 0..c.d {
            let reference = c.alice_marginal(x, 0, a);
            for y in 1..c.ny {
                let diff = (c.alice_marginal(x, y, a) - reference).abs();
                if diff > tol {
                    out.push(Violation::AliceSignaling { x, a, y0: 0, y1: y, diff });
                }
            }
        }
    }
    for y in 0..c.ny {
        for b in 0..c.d {
            let reference = c.bob_marginal(0, y, b);
            for x in 1..c.nx {
                let diff = (c.bob_marginal(x, y, b) - reference).abs();
                if diff > tol {
                    out.push(Violation::BobSignaling { y, b, x0: 0, x1: x, diff });
                }
            }
        }
    }
    out
}

/// Pure bipartite state with one projective measurement per question per party.
///
/// The state is stored with Alice's index major: amplitude of `|i⟩_A|j⟩_B` at
/// `i * dim_b + j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuantumStrategyJson", into = "QuantumStrategyJson")]
pub struct QuantumStrategy {
    d: usize,
    dim_a: usize,
    dim_b: usize,
    state: CVec,
    alice: Vec<Vec<CMat>>,
    bob: Vec<Vec<CMat>>,
}

impl QuantumStrategy {
    /// Build and validate at [`GENERATION_TOL`].
    pub fn new(d: usize, state: CVec, alice: Vec<Vec<CMat>>, bob: Vec<Vec<CMat>>) -> Result<Self> {
        let s = Self::from_parts_unchecked(d, state, alice, bob)?;
        s.validate(GENERATION_TOL)?;
        Ok(s)
    }

    /// Build after shape checks only; projector invariants are not verified.
    pub fn from_parts_unchecked(
        d: usize,
        state: CVec,
        alice: Vec<Vec<CMat>>,
        bob: Vec<Vec<CMat>>,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::Shape("answer-set size must be positive".into()));
        }
        if alice.is_empty() || bob.is_empty() {
            return Err(Error::Shape("each party needs at least one question".into()));
        }
        let dim_a = alice[0].first().map(|m| m.nrows()).unwrap_or(0);
        let dim_b = bob[0].first().map(|m| m.nrows()).unwrap_or(0);
        if dim_a == 0 || dim_b == 0 {
            return Err(Error::Shape("local dimensions must be positive".into()));
        }
        if state.len() != dim_a * dim_b {
            return Err(Error::Shape(format!(
                "state has length {}, expected {dim_a}*{dim_b}",
                state.len()
            )));
        }
        for (party, pvms, dim) in [("alice", &alice, dim_a), ("bob", &bob, dim_b)] {
            for (q, pvm) in pvms.iter().enumerate() {
                if pvm.len() != d {
                    return Err(Error::Shape(format!(
                        "{party} question {q} has {} outcomes, expected {d}",
                        pvm.len()
                    )));
                }
                if pvm.iter().any(|m| m.shape() != (dim, dim)) {
                    return Err(Error::Shape(format!(
                        "{party} question {q} has a projector that is not {dim}x{dim}"
                    )));
                }
            }
        }
        Ok(Self {
            d,
            dim_a,
            dim_b,
            state,
            alice,
            bob,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }
    pub fn dim_a(&self) -> usize {
        self.dim_a
    }
    pub fn dim_b(&self) -> usize {
        self.dim_b
    }
    pub fn state(&self) -> &CVec {
        &self.state
    }
    pub fn alice(&self) -> &[Vec<CMat>] {
        &self.alice
    }
    pub fn bob(&self) -> &[Vec<CMat>] {
        &self.bob
    }
    pub fn nx(&self) -> usize {
        self.alice.len()
    }
    pub fn ny(&self) -> usize {
        self.bob.len()
    }

    pub fn with_state(mut self, state: CVec) -> Result<Self> {
        if state.len() != self.dim_a * self.dim_b {
            return Err(Error::Shape("state length does not match dim_a*dim_b".into()));
        }
        self.state = state;
        Ok(self)
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut CVec, &mut Vec<Vec<CMat>>, &mut Vec<Vec<CMat>>) {
        (&mut self.state, &mut self.alice, &mut self.bob)
    }

    /// Largest projector defect over all measurements, and the state norm defect.
    ///
    /// Defects are Frobenius norms of `P² − P`, `P − P†` and `Σ_a P_a − I`.
    pub fn max_defect(&self) -> f64 {
        let mut worst = (self.state.norm() - 1.0).abs();
        for (pvms, dim) in [(&self.alice, self.dim_a), (&self.bob, self.dim_b)] {
            for pvm in pvms.iter() {
                let mut total = CMat::zeros(dim, dim);
                for p in pvm {
                    worst = worst.max(frobenius(&(p * p - p)));
                    worst = worst.max(frobenius(&(p - p.adjoint())));
                    total += p;
                }
                worst = worst.max(frobenius(&(total - CMat::identity(dim, dim))));
            }
        }
        worst
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let norm_defect = (self.state.norm() - 1.0).abs();
        if norm_defect > tol {
            return Err(Error::Strategy(format!("state norm off by {norm_defect:e}")));
        }
        for (party, pvms, dim) in [("alice", &self.alice, self.dim_a), ("bob", &self.bob, self.dim_b)] {
            for (q, pvm) in pvms.iter().enumerate() {
                let mut total = CMat::zeros(dim, dim);
                for (a, p) in pvm.iter().enumerate() {
                    let herm = frobenius(&(p - p.adjoint()));
                    if herm > tol {
                        return Err(Error::Strategy(format!(
                            "{party} question {q} outcome {a}: not Hermitian (defect {herm:e})"
                        )));
                    }
                    let idem = frobenius(&(p * p - p));
                    if idem > tol {
                        return Err(Error::Strategy(format!(
                            "{party} question {q} outcome {a}: not idempotent (defect {idem:e})"
                        )));
                    }
                    total += p;
                }
                let complete = frobenius(&(total - CMat::identity(dim, dim)));
                if complete > tol {
                    return Err(Error::Strategy(format!(
                        "{party} question {q}: projectors do not sum to identity (defect {complete:e})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Haar-random state and Haar-rotated computational-basis measurements.
    ///
    /// Basis vector `i` of each rotated basis is assigned to outcome `i mod d`.
    pub fn random<R: Rng + ?Sized>(
        d: usize,
        dim_a: usize,
        dim_b: usize,
        nx: usize,
        ny: usize,
        rng: &mut R,
    ) -> Self {
        let state = random_state(dim_a * dim_b, rng);
        let alice = (0..nx).map(|_| random_pvm(d, dim_a, rng)).collect();
        let bob = (0..ny).map(|_| random_pvm(d, dim_b, rng)).collect();
        Self {
            d,
            dim_a,
            dim_b,
            state,
            alice,
            bob,
        }
    }
}

/// Rotate the computational basis by a Haar unitary and group basis vector `i` into outcome `i mod d`.
pub fn random_pvm<R: Rng + ?Sized>(d: usize, dim: usize, rng: &mut R) -> Vec<CMat> {
    let u = haar_unitary(dim, rng);
    let mut pvm = vec![CMat::zeros(dim, dim); d];
    for i in 0..dim {
        let v = u.column(i);
        pvm[i % d] += v * v.adjoint();
    }
    pvm
}

/// Born rule: `p(a,b|x,y) = ⟨ψ| Π_{A_x}^a ⊗ Π_{B_y}^b |ψ⟩`.
///
/// With Ψ the `dim_a × dim_b` reshaping of the state, each probability is
/// `Σ_{jl} (Ψ† A Ψ)_{jl} B_{jl}`.
pub fn correlation_from_quantum(s: &QuantumStrategy) -> Result<Correlation> {
    s.validate(GENERATION_TOL)?;
    correlation_from_quantum_unchecked(s, GENERATION_TOL)
}

pub(crate) fn correlation_from_quantum_unchecked(
    s: &QuantumStrategy,
    imag_tol: f64,
) -> Result<Correlation> {
    let psi = CMat::from_fn(s.dim_a, s.dim_b, |i, j| s.state[i * s.dim_b + j]);
    let psi_adj = psi.adjoint();
    let (nx, ny, d) = (s.nx(), s.ny(), s.d);
    let mut table = vec![0.0; nx * ny * d * d];
    for x in 0..nx {
        for a in 0..d {
            let left = &psi_adj * &s.alice[x][a] * &psi;
            for y in 0..ny {
                for b in 0..d {
                    let bmat = &s.bob[y][b];
                    let z: num_complex::Complex64 =
                        left.iter().zip(bmat.iter()).map(|(l, m)| l * m).sum();
                    if z.im.abs() > imag_tol {
                        return Err(Error::Numerical(format!(
                            "p({a},{b}|{x},{y}) has imaginary part {:e}",
                            z.im
                        )));
                    }
                    table[((x * ny + y) * d + a) * d + b] = z.re;
                }
            }
        }
    }
    Ok(Correlation {
        d,
        nx,
        ny,
        table,
        quantum_generated: true,
    })
}

/// Deterministic answer assignment `f_A: {0,1,2} → [d]`, `f_B: {0,..,3} → [d]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    #[serde(rename = "fA")]
    pub fa: [usize; ALICE_QUESTIONS],
    #[serde(rename = "fB")]
    pub fb: [usize; BOB_QUESTIONS],
}

impl DeterministicStrategy {
    pub fn new(fa: [usize; ALICE_QUESTIONS], fb: [usize; BOB_QUESTIONS], d: usize) -> Result<Self> {
        let s = Self { fa, fb };
        s.check_range(d)?;
        Ok(s)
    }

    pub fn check_range(&self, d: usize) -> Result<()> {
        if let Some(v) = self.fa.iter().chain(&self.fb).find(|&&v| v >= d) {
            return Err(Error::Input(format!("answer {v} out of range for d = {d}")));
        }
        Ok(())
    }
}

/// `p(a,b|x,y) = 1` iff `a = f_A(x)` and `b = f_B(y)`.
pub fn correlation_from_deterministic(s: &DeterministicStrategy, d: usize) -> Result<Correlation> {
    s.check_range(d)?;
    let mut c = Correlation::zeros(d);
    for x in 0..ALICE_QUESTIONS {
        for y in 0..BOB_QUESTIONS {
            c.set(x, y, s.fa[x], s.fb[y], 1.0);
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis_projector, ONE};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn computational_pvm(dim: usize) -> Vec<CMat> {
        (0..dim).map(|i| basis_projector(dim, i)).collect()
    }

    #[test]
    fn uniform_is_valid() {
        let report = validate_correlation(&Correlation::uniform(3), 1e-9).unwrap();
        assert!(report.is_valid());
    }

    #[test]
    fn negative_entry_is_flagged_at_its_index() {
        let mut c = Correlation::uniform(3);
        c.set(1, 2, 0, 2, -0.01);
        let report = validate_correlation(&c, 1e-9).unwrap();
        assert!(report.violations.contains(&Violation::Negative {
            x: 1,
            y: 2,
            a: 0,
            b: 2,
            value: -0.01
        }));
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::Normalization { x: 1, y: 2, .. })));
    }

    #[test]
    fn shape_mismatch_is_structural() {
        let err = Correlation::new(2, 3, 4, vec![0.0; 10]).unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
    }

    #[test]
    fn product_state_in_computational_basis() {
        let mut state = CVec::zeros(4);
        state[0] = ONE;
        let s = QuantumStrategy::new(
            2,
            state,
            vec![computational_pvm(2); 3],
            vec![computational_pvm(2); 4],
        )
        .unwrap();
        let p = correlation_from_quantum(&s).unwrap();
        for x in 0..3 {
            for y in 0..4 {
                assert!((p.get(x, y, 0, 0) - 1.0).abs() < 1e-15);
            }
        }
        assert!(p.is_quantum_generated());
    }

    #[test]
    fn epr_pair_in_computational_basis() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut state = CVec::zeros(4);
        state[0] = crate::linalg::c(h);
        state[3] = crate::linalg::c(h);
        let s = QuantumStrategy::new(
            2,
            state,
            vec![computational_pvm(2); 3],
            vec![computational_pvm(2); 4],
        )
        .unwrap();
        let p = correlation_from_quantum(&s).unwrap();
        assert!((p.get(0, 0, 0, 0) - 0.5).abs() < 1e-15);
        assert!((p.get(0, 0, 1, 1) - 0.5).abs() < 1e-15);
        assert!(p.get(0, 0, 0, 1).abs() < 1e-15);
        assert!(p.get(0, 0, 1, 0).abs() < 1e-15);
    }

    #[test]
    fn non_projector_is_rejected() {
        let mut state = CVec::zeros(4);
        state[0] = ONE;
        let mut bad = computational_pvm(2);
        bad[0][(0, 1)] = crate::linalg::c(0.3);
        let err = QuantumStrategy::new(2, state, vec![bad; 3], vec![computational_pvm(2); 4]).unwrap_err();
        assert!(matches!(err, Error::Strategy(_)));
    }

    #[test]
    fn deterministic_strategies() {
        let s = DeterministicStrategy::new([0, 0, 0], [0, 0, 0, 0], 2).unwrap();
        let p = correlation_from_deterministic(&s, 2).unwrap();
        assert!((0..3).all(|x| (0..4).all(|y| p.get(x, y, 0, 0) == 1.0)));

        let s = DeterministicStrategy::new([2, 2, 2], [2, 2, 2, 2], 3).unwrap();
        let p = correlation_from_deterministic(&s, 3).unwrap();
        assert!((0..3).all(|x| (0..4).all(|y| p.get(x, y, 2, 2) == 1.0)));
        assert!(p.table().iter().all(|&v| v == 0.0 || v == 1.0));

        assert!(DeterministicStrategy::new([0, 3, 0], [0; 4], 3).is_err());
    }

    #[test]
    fn random_strategies_are_valid_and_no_signaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in 2..=4 {
            for _ in 0..20 {
                let s = QuantumStrategy::random(d, d, d, 3, 4, &mut rng);
                s.validate(1e-9).unwrap();
                let p = correlation_from_quantum(&s).unwrap();
                assert!(validate_correlation(&p, 1e-9).unwrap().is_valid());
            }
        }
    }

    #[test]
    fn mix_checks_weight_and_shape() {
        let p = Correlation::uniform(2);
        assert!(p.mix(&Correlation::uniform(3), 0.5).is_err());
        assert!(p.mix(&p, 1.5).is_err());
    }
}
