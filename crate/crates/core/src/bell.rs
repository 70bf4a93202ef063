//! Generalized CHSH Bell functionals over questions `{0,1,2} × {0,1,2,3}` and
//! answers `{0,..,d-1}`.
//!
//! The unprimed family acts on questions `x, y ∈ {0,1}` with answer blocks
//! `{2m, 2m+1}`. The primed family acts on `x ∈ {0,2}`, `y ∈ {2,3}` (relabelled
//! to bits by `0→0, 2→1` and `2→0, 3→1`) with answer blocks `{2m+1, 2m+2}`,
//! labels taken mod d. Every functional is stored as a dense coefficient
//! tensor so evaluation is an inner product with the correlation table.

use std::collections::BTreeSet;
use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::correlation::{Correlation, ALICE_QUESTIONS, BOB_QUESTIONS, GENERATION_TOL};
use crate::error::{Error, Result};

/// Default cross-term penalty.
pub const DEFAULT_EPSILON: f64 = 0.1;

/// Unprimed question pairs `(x, y)` with their CHSH bits.
pub const UNPRIMED_QUESTIONS: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

/// Primed question pairs `(x, y)`; their CHSH bits are given by [`primed_bits`].
pub const PRIMED_QUESTIONS: [(usize, usize); 4] = [(0, 2), (0, 3), (2, 2), (2, 3)];

/// Bit relabelling of the primed questions: `x: 0→0, 2→1`, `y: 2→0, 3→1`.
pub fn primed_bits(x: usize, y: usize) -> (usize, usize) {
    (usize::from(x == 2), usize::from(y == 3))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "maxent")]
    MaxEntangled,
    #[serde(rename = "tilted")]
    Tilted,
}

/// Whether the odd-d diagonal leftovers `(d−1, d−1)` in C and `(0, 0)` in C'
/// count as cross terms. Has no effect for even d.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrossDiagonalMode {
    #[default]
    Exclude,
    Include,
}

impl std::str::FromStr for CrossDiagonalMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exclude" => Ok(Self::Exclude),
            "include" => Ok(Self::Include),
            other => Err(Error::Input(format!("unknown cross-diagonal mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossSet {
    Unprimed,
    Primed,
}

pub fn num_blocks(d: usize) -> usize {
    d / 2
}

/// Observed answer labels of unprimed block `m`.
pub fn block_labels(m: usize) -> (usize, usize) {
    (2 * m, 2 * m + 1)
}

/// Observed answer labels of primed block `m` (second label reduced mod d).
pub fn primed_block_labels(d: usize, m: usize) -> (usize, usize) {
    (2 * m + 1, (2 * m + 2) % d)
}

/// `(−1)^{(a + b − xy) mod 2}` on unreduced labels.
#[inline]
pub fn chsh_sign(a: usize, b: usize, xbit: usize, ybit: usize) -> f64 {
    if (a + b + xbit * ybit).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn check_block(d: usize, m: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::Input(format!("d = {d} has no answer blocks")));
    }
    if m >= num_blocks(d) {
        return Err(Error::Input(format!(
            "block index {m} out of range 0..{} for d = {d}",
            num_blocks(d)
        )));
    }
    Ok(())
}

fn check_standard(p: &Correlation) -> Result<()> {
    if !p.is_standard_shape() {
        return Err(Error::Shape(format!(
            "expected a {ALICE_QUESTIONS}x{BOB_QUESTIONS} question set, got {}x{}",
            p.nx(),
            p.ny()
        )));
    }
    Ok(())
}

fn check_unprimed(p: &Correlation) -> Result<()> {
    if p.nx() < 2 || p.ny() < 2 {
        return Err(Error::Shape(format!("questions x, y ∈ {{0,1}} needed, got {}x{}", p.nx(), p.ny())));
    }
    Ok(())
}

/// `[CHSH_m]_p`. Reads only `x, y ∈ {0,1}`, so reduced 2x2 correlations work too.
pub fn chsh_m_value(p: &Correlation, m: usize) -> Result<f64> {
    check_unprimed(p)?;
    check_block(p.d(), m)?;
    let (lo, hi) = block_labels(m);
    let mut total = 0.0;
    for &(x, y) in &UNPRIMED_QUESTIONS {
        for a in [lo, hi] {
            for b in [lo, hi] {
                total += chsh_sign(a, b, x, y) * p.get(x, y, a, b);
            }
        }
    }
    Ok(total)
}

/// `[CHSH'_m]_p`; parity from the unreduced labels `2m+1, 2m+2`, lookup mod d.
pub fn chsh_prime_m_value(p: &Correlation, m: usize) -> Result<f64> {
    check_standard(p)?;
    let d = p.d();
    check_block(d, m)?;
    let labels = [2 * m + 1, 2 * m + 2];
    let mut total = 0.0;
    for &(x, y) in &PRIMED_QUESTIONS {
        let (fx, gy) = primed_bits(x, y);
        for a in labels {
            for b in labels {
                total += chsh_sign(a, b, fx, gy) * p.get(x, y, a % d, b % d);
            }
        }
    }
    Ok(total)
}

/// Standard CHSH value of a correlation on 2×2 questions and 2 answers.
pub fn standard_chsh_value(p: &Correlation) -> Result<f64> {
    if p.d() != 2 || p.nx() < 2 || p.ny() < 2 {
        return Err(Error::Shape("standard CHSH needs at least 2x2 questions and d = 2".into()));
    }
    let mut total = 0.0;
    for &(x, y) in &UNPRIMED_QUESTIONS {
        for a in 0..2 {
            for b in 0..2 {
                total += chsh_sign(a, b, x, y) * p.get(x, y, a, b);
            }
        }
    }
    Ok(total)
}

/// Sorted `(a, b, x, y)` tuples.
pub type CrossTuples = BTreeSet<(usize, usize, usize, usize)>;

/// The cross sets `C` (unprimed questions) and `C'` (primed questions).
pub fn cross_sets(d: usize, mode: CrossDiagonalMode) -> (CrossTuples, CrossTuples) {
    let mut c = BTreeSet::new();
    let mut c_prime = BTreeSet::new();
    for a in 0..d {
        for b in 0..d {
            if is_unprimed_cross(d, a, b, mode) {
                for &(x, y) in &UNPRIMED_QUESTIONS {
                    c.insert((a, b, x, y));
                }
            }
            if is_primed_cross(d, a, b, mode) {
                for &(x, y) in &PRIMED_QUESTIONS {
                    c_prime.insert((a, b, x, y));
                }
            }
        }
    }
    (c, c_prime)
}

/// Whether answer pair `(a, b)` lies in C for the unprimed questions.
pub fn is_unprimed_cross(d: usize, a: usize, b: usize, mode: CrossDiagonalMode) -> bool {
    if let (Some(ma), Some(mb)) = (block_of(d, a), block_of(d, b)) {
        if ma == mb {
            return false;
        }
    }
    let leftover_diagonal = d % 2 == 1 && a == d - 1 && b == d - 1;
    !(leftover_diagonal && mode == CrossDiagonalMode::Exclude)
}

/// Primed block index of answer `a`, or `None` for the odd-d leftover label 0.
pub fn primed_block_of(d: usize, a: usize) -> Option<usize> {
    if a == 0 {
        if d.is_multiple_of(2) {
            Some(num_blocks(d) - 1)
        } else {
            None
        }
    } else {
        Some((a - 1) / 2)
    }
}

/// Unprimed block index of answer `a`, or `None` for the odd-d leftover label d−1.
pub fn block_of(d: usize, a: usize) -> Option<usize> {
    if a / 2 < num_blocks(d) {
        Some(a / 2)
    } else {
        None
    }
}

/// Whether answer pair `(a, b)` lies in C' for the primed questions.
pub fn is_primed_cross(d: usize, a: usize, b: usize, mode: CrossDiagonalMode) -> bool {
    match (primed_block_of(d, a), primed_block_of(d, b)) {
        (Some(ma), Some(mb)) if ma == mb => false,
        _ => {
            let leftover_diagonal = d % 2 == 1 && a == 0 && b == 0;
            !(leftover_diagonal && mode == CrossDiagonalMode::Exclude)
        }
    }
}

/// `[CROSS]_p` or `[CROSS']_p`.
pub fn cross_value(p: &Correlation, which: CrossSet, mode: CrossDiagonalMode) -> Result<f64> {
    check_standard(p)?;
    let d = p.d();
    let mut total = 0.0;
    for a in 0..d {
        for b in 0..d {
            match which {
                CrossSet::Unprimed if is_unprimed_cross(d, a, b, mode) => {
                    total += UNPRIMED_QUESTIONS.iter().map(|&(x, y)| p.get(x, y, a, b)).sum::<f64>();
                }
                CrossSet::Primed if is_primed_cross(d, a, b, mode) => {
                    total += PRIMED_QUESTIONS.iter().map(|&(x, y)| p.get(x, y, a, b)).sum::<f64>();
                }
                _ => {}
            }
        }
    }
    Ok(total)
}

/// Odd-d leftover masses `(Σ_{x,y∈{0,1}} p(d−1,d−1|x,y), Σ_{x∈{0,2},y∈{2,3}} p(0,0|x,y))`.
/// Zero for even d.
pub fn leftover_masses(p: &Correlation) -> Result<(f64, f64)> {
    check_standard(p)?;
    let d = p.d();
    if d.is_multiple_of(2) {
        return Ok((0.0, 0.0));
    }
    let unprimed = UNPRIMED_QUESTIONS.iter().map(|&(x, y)| p.get(x, y, d - 1, d - 1)).sum();
    let primed = PRIMED_QUESTIONS.iter().map(|&(x, y)| p.get(x, y, 0, 0)).sum();
    Ok((unprimed, primed))
}

/// Alice's x = 0 marginal, taken from Bob's question y = 0.
fn alice_x0_marginal(p: &Correlation, a: usize) -> f64 {
    p.alice_marginal(0, 0, a)
}

fn check_x0_no_signaling(p: &Correlation) -> Result<()> {
    let d = p.d();
    for a in 0..d {
        let reference = p.alice_marginal(0, 0, a);
        for y in 1..BOB_QUESTIONS {
            let diff = (p.alice_marginal(0, y, a) - reference).abs();
            if diff > GENERATION_TOL {
                return Err(Error::Input(format!(
                    "tilted evaluation needs a no-signaling input; p(a={a}|x=0) differs by {diff:e} between y=0 and y={y}"
                )));
            }
        }
    }
    Ok(())
}

/// `α[p(a=2m|x=0) − p(a=2m+1|x=0)] + [CHSH_m]_p`.
pub fn tchsh_m_value(p: &Correlation, m: usize, alpha: f64) -> Result<f64> {
    let chsh = chsh_m_value(p, m)?;
    check_x0_no_signaling(p)?;
    let (lo, hi) = block_labels(m);
    Ok(alpha * (alice_x0_marginal(p, lo) - alice_x0_marginal(p, hi)) + chsh)
}

/// `α[p(a=2m+1|x=0) − p(a=2m+2|x=0)] + [CHSH'_m]_p`, labels mod d.
pub fn tchsh_prime_m_value(p: &Correlation, m: usize, alpha: f64) -> Result<f64> {
    let chsh = chsh_prime_m_value(p, m)?;
    check_x0_no_signaling(p)?;
    let (lo, hi) = primed_block_labels(p.d(), m);
    Ok(alpha * (alice_x0_marginal(p, lo) - alice_x0_marginal(p, hi)) + chsh)
}

/// Tilting parameter `α(θ) ∈ [0, 2)` solving `sin 2θ = √((4−α²)/(4+α²))`.
pub fn alpha_of_theta(theta: f64) -> f64 {
    let s = (2.0 * theta).sin();
    let s2 = s * s;
    2.0 * ((1.0 - s2).max(0.0) / (1.0 + s2)).sqrt()
}

/// Maximal quantum value `√(8 + 2α²)` of the tilted CHSH expression.
pub fn i_alpha(alpha: f64) -> f64 {
    (8.0 + 2.0 * alpha * alpha).sqrt()
}

/// Bob's ideal measurement angle `arctan(sin 2θ)`.
pub fn mu_of_theta(theta: f64) -> f64 {
    (2.0 * theta).sin().atan()
}

/// Angles and tilting parameters derived from Schmidt coefficients `c_0..c_{d−1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltedSpec {
    pub c: Vec<f64>,
    pub theta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub theta_prime: Vec<f64>,
    pub alpha_prime: Vec<f64>,
    pub i_alpha: Vec<f64>,
    pub i_alpha_prime: Vec<f64>,
    pub mu: Vec<f64>,
    pub mu_prime: Vec<f64>,
}

impl TiltedSpec {
    pub fn from_coefficients(c: &[f64]) -> Result<Self> {
        let d = c.len();
        if d < 2 {
            return Err(Error::Input(format!("need at least 2 Schmidt coefficients, got {d}")));
        }
        if let Some(v) = c.iter().find(|&&v| !(v > 0.0 && v < 1.0)) {
            return Err(Error::Input(format!("Schmidt coefficient {v} not in (0,1)")));
        }
        let norm2: f64 = c.iter().map(|v| v * v).sum();
        if (norm2 - 1.0).abs() > GENERATION_TOL {
            return Err(Error::Input(format!(
                "Schmidt coefficients are not normalized: sum of squares = {norm2}"
            )));
        }
        let blocks = num_blocks(d);
        let theta: Vec<f64> = (0..blocks).map(|m| (c[2 * m + 1] / c[2 * m]).atan()).collect();
        let theta_prime: Vec<f64> = (0..blocks)
            .map(|m| (c[(2 * m + 2) % d] / c[2 * m + 1]).atan())
            .collect();
        let alpha: Vec<f64> = theta.iter().map(|&t| alpha_of_theta(t)).collect();
        let alpha_prime: Vec<f64> = theta_prime.iter().map(|&t| alpha_of_theta(t)).collect();
        Ok(Self {
            c: c.to_vec(),
            i_alpha: alpha.iter().map(|&a| i_alpha(a)).collect(),
            i_alpha_prime: alpha_prime.iter().map(|&a| i_alpha(a)).collect(),
            mu: theta.iter().map(|&t| mu_of_theta(t)).collect(),
            mu_prime: theta_prime.iter().map(|&t| mu_of_theta(t)).collect(),
            theta,
            alpha,
            theta_prime,
            alpha_prime,
        })
    }

    pub fn d(&self) -> usize {
        self.c.len()
    }
}

/// A Bell functional as a dense coefficient tensor over `(x, y, a, b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BellFunctional {
    d: usize,
    epsilon: f64,
    variant: Variant,
    mode: CrossDiagonalMode,
    coeff: Vec<f64>,
    tilted_spec: Option<TiltedSpec>,
}

fn coeff_index(d: usize, x: usize, y: usize, a: usize, b: usize) -> usize {
    ((x * BOB_QUESTIONS + y) * d + a) * d + b
}

struct CoeffBuilder {
    d: usize,
    coeff: Vec<f64>,
}

impl CoeffBuilder {
    fn new(d: usize) -> Self {
        Self {
            d,
            coeff: vec![0.0; ALICE_QUESTIONS * BOB_QUESTIONS * d * d],
        }
    }

    fn add(&mut self, x: usize, y: usize, a: usize, b: usize, v: f64) {
        let i = coeff_index(self.d, x, y, a, b);
        self.coeff[i] += v;
    }

    fn chsh_block(&mut self, m: usize, scale: f64) {
        let (lo, hi) = block_labels(m);
        for &(x, y) in &UNPRIMED_QUESTIONS {
            for a in [lo, hi] {
                for b in [lo, hi] {
                    self.add(x, y, a, b, scale * chsh_sign(a, b, x, y));
                }
            }
        }
    }

    fn chsh_prime_block(&mut self, m: usize, scale: f64) {
        let d = self.d;
        for &(x, y) in &PRIMED_QUESTIONS {
            let (fx, gy) = primed_bits(x, y);
            for a in [2 * m + 1, 2 * m + 2] {
                for b in [2 * m + 1, 2 * m + 2] {
                    self.add(x, y, a % d, b % d, scale * chsh_sign(a, b, fx, gy));
                }
            }
        }
    }

    /// `weight · [p(a=plus|x=0) − p(a=minus|x=0)]` with marginals read at y = 0.
    fn x0_marginal_difference(&mut self, plus: usize, minus: usize, weight: f64) {
        for b in 0..self.d {
            self.add(0, 0, plus, b, weight);
            self.add(0, 0, minus, b, -weight);
        }
    }

    fn cross(&mut self, epsilon: f64, mode: CrossDiagonalMode) {
        let (c, c_prime) = cross_sets(self.d, mode);
        for (a, b, x, y) in c.into_iter().chain(c_prime) {
            self.add(x, y, a, b, -epsilon);
        }
    }

    fn leftover_bonus(&mut self, weight: f64) {
        let d = self.d;
        for &(x, y) in &UNPRIMED_QUESTIONS {
            self.add(x, y, d - 1, d - 1, weight);
        }
        for &(x, y) in &PRIMED_QUESTIONS {
            self.add(x, y, 0, 0, weight);
        }
    }
}

impl BellFunctional {
    /// The maximally-entangled-case operator with penalty `epsilon > 0`.
    pub fn build_maxent(d: usize, epsilon: f64, mode: CrossDiagonalMode) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::Input(format!("epsilon must be positive, got {epsilon}")));
        }
        Self::build_maxent_allow_zero_epsilon(d, epsilon, mode)
    }

    /// As [`build_maxent`](Self::build_maxent) but also accepts `epsilon = 0`.
    pub fn build_maxent_allow_zero_epsilon(
        d: usize,
        epsilon: f64,
        mode: CrossDiagonalMode,
    ) -> Result<Self> {
        if d < 2 {
            return Err(Error::Input(format!("d must be at least 2, got {d}")));
        }
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(Error::Input(format!("epsilon must be finite and non-negative, got {epsilon}")));
        }
        let mut builder = CoeffBuilder::new(d);
        for m in 0..num_blocks(d) {
            builder.chsh_block(m, 1.0);
            if d > 2 {
                builder.chsh_prime_block(m, 1.0);
            }
        }
        builder.cross(epsilon, mode);
        if d % 2 == 1 {
            builder.leftover_bonus(SQRT_2 / 2.0);
        }
        Ok(Self {
            d,
            epsilon,
            variant: Variant::MaxEntangled,
            mode,
            coeff: builder.coeff,
            tilted_spec: None,
        })
    }

    /// The tilted family for Schmidt coefficients `c`, with penalty `epsilon > 0`.
    pub fn build_tilted(c: &[f64], epsilon: f64, mode: CrossDiagonalMode) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::Input(format!("epsilon must be positive, got {epsilon}")));
        }
        Self::build_tilted_allow_zero_epsilon(c, epsilon, mode)
    }

    pub fn build_tilted_allow_zero_epsilon(
        c: &[f64],
        epsilon: f64,
        mode: CrossDiagonalMode,
    ) -> Result<Self> {
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(Error::Input(format!("epsilon must be finite and non-negative, got {epsilon}")));
        }
        let spec = TiltedSpec::from_coefficients(c)?;
        let d = spec.d();
        let mut builder = CoeffBuilder::new(d);
        for m in 0..num_blocks(d) {
            let w = 1.0 / spec.i_alpha[m];
            let (lo, hi) = block_labels(m);
            builder.chsh_block(m, w);
            builder.x0_marginal_difference(lo, hi, w * spec.alpha[m]);
            if d > 2 {
                let w = 1.0 / spec.i_alpha_prime[m];
                let (lo, hi) = primed_block_labels(d, m);
                builder.chsh_prime_block(m, w);
                builder.x0_marginal_difference(lo, hi, w * spec.alpha_prime[m]);
            }
        }
        builder.cross(epsilon, mode);
        if d % 2 == 1 {
            builder.leftover_bonus(0.25);
        }
        Ok(Self {
            d,
            epsilon,
            variant: Variant::Tilted,
            mode,
            coeff: builder.coeff,
            tilted_spec: Some(spec),
        })
    }

    /// Reassemble from stored parts, checking shape and support.
    pub fn from_parts(
        d: usize,
        epsilon: f64,
        variant: Variant,
        mode: CrossDiagonalMode,
        coeff: Vec<f64>,
        tilted_spec: Option<TiltedSpec>,
    ) -> Result<Self> {
        if d < 2 {
            return Err(Error::Input(format!("d must be at least 2, got {d}")));
        }
        if coeff.len() != ALICE_QUESTIONS * BOB_QUESTIONS * d * d {
            return Err(Error::Shape(format!("coefficient tensor has {} entries", coeff.len())));
        }
        if variant == Variant::Tilted && tilted_spec.as_ref().map(|s| s.d()) != Some(d) {
            return Err(Error::Input("tilted functional needs a matching tilted_spec".into()));
        }
        let f = Self {
            d,
            epsilon,
            variant,
            mode,
            coeff,
            tilted_spec,
        };
        for x in 0..ALICE_QUESTIONS {
            for y in 0..BOB_QUESTIONS {
                if is_supported_pair(x, y) {
                    continue;
                }
                for a in 0..d {
                    for b in 0..d {
                        if f.coeff(x, y, a, b) != 0.0 {
                            return Err(Error::Input(format!(
                                "nonzero coefficient on unsupported question pair ({x},{y})"
                            )));
                        }
                    }
                }
            }
        }
        Ok(f)
    }

    pub fn d(&self) -> usize {
        self.d
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn variant(&self) -> Variant {
        self.variant
    }
    pub fn mode(&self) -> CrossDiagonalMode {
        self.mode
    }
    pub fn tilted_spec(&self) -> Option<&TiltedSpec> {
        self.tilted_spec.as_ref()
    }
    pub fn coefficients(&self) -> &[f64] {
        &self.coeff
    }

    #[inline]
    pub fn coeff(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.coeff[coeff_index(self.d, x, y, a, b)]
    }

    /// The value the construction targets as its quantum maximum:
    /// `2√2(1 + 1_{d>2})` for the max-entangled family, `1 + 1_{d>2}` for the tilted one.
    pub fn quantum_bound(&self) -> f64 {
        let doubled = if self.d > 2 { 2.0 } else { 1.0 };
        match self.variant {
            Variant::MaxEntangled => 2.0 * SQRT_2 * doubled,
            Variant::Tilted => doubled,
        }
    }

    /// Same tensor with every coefficient multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.coeff.iter_mut().for_each(|c| *c *= s);
        out
    }

    /// `Σ coeff · p` without input checks beyond shape.
    pub fn inner_product(&self, p: &Correlation) -> Result<f64> {
        if p.d() != self.d {
            return Err(Error::Shape(format!(
                "functional has d = {}, correlation has d = {}",
                self.d,
                p.d()
            )));
        }
        check_standard(p)?;
        Ok(self.coeff.iter().zip(p.table()).map(|(c, v)| c * v).sum())
    }
}

/// Question pairs on which a functional of this family may be nonzero.
pub fn is_supported_pair(x: usize, y: usize) -> bool {
    (x < 2 && y < 2) || ((x == 0 || x == 2) && (y == 2 || y == 3))
}

/// `Σ_{x,y,a,b} coeff · p`. Tilted functionals reject inputs whose Alice
/// marginal at x = 0 depends on y.
pub fn evaluate(f: &BellFunctional, p: &Correlation) -> Result<f64> {
    let value = f.inner_product(p)?;
    if f.variant == Variant::Tilted {
        check_x0_no_signaling(p)?;
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::{correlation_from_deterministic, DeterministicStrategy};
    use std::f64::consts::PI;

    fn det(fa: [usize; 3], fb: [usize; 4], d: usize) -> Correlation {
        correlation_from_deterministic(&DeterministicStrategy::new(fa, fb, d).unwrap(), d).unwrap()
    }

    #[test]
    fn chsh_m_on_simple_inputs() {
        for d in 2..=6 {
            for m in 0..num_blocks(d) {
                assert!(chsh_m_value(&Correlation::uniform(d), m).unwrap().abs() < 1e-15);
                assert!(chsh_prime_m_value(&Correlation::uniform(d), m).unwrap().abs() < 1e-15);
            }
        }
        assert_eq!(chsh_m_value(&det([0; 3], [0; 4], 2), 0).unwrap(), 2.0);
        assert!(chsh_m_value(&Correlation::uniform(4), 2).is_err());
        assert!(chsh_prime_m_value(&Correlation::uniform(3), 1).is_err());
    }

    #[test]
    fn chsh_prime_sign_count_at_d3() {
        let p = det([2, 0, 2], [0, 0, 2, 2], 3);
        assert_eq!(chsh_prime_m_value(&p, 0).unwrap(), 2.0);
    }

    #[test]
    fn cross_sets_small_cases() {
        let (c, cp) = cross_sets(2, CrossDiagonalMode::Exclude);
        assert!(c.is_empty() && cp.is_empty());
        let (c, cp) = cross_sets(2, CrossDiagonalMode::Include);
        assert!(c.is_empty() && cp.is_empty());

        let (c, _) = cross_sets(4, CrossDiagonalMode::Exclude);
        assert!(c.contains(&(0, 2, 0, 0)));
        assert!(!c.contains(&(0, 1, 0, 0)));

        let (c, cp) = cross_sets(3, CrossDiagonalMode::Exclude);
        assert!(!c.contains(&(2, 2, 0, 0)));
        assert!(!cp.contains(&(0, 0, 0, 2)));
        let (c, cp) = cross_sets(3, CrossDiagonalMode::Include);
        assert!(c.contains(&(2, 2, 0, 0)));
        assert!(cp.contains(&(0, 0, 0, 2)));
    }

    #[test]
    fn cross_value_counts() {
        // 8 of 16 answer pairs are cross for each of 4 question pairs.
        let u = Correlation::uniform(4);
        let c = cross_value(&u, CrossSet::Unprimed, CrossDiagonalMode::Exclude).unwrap();
        let cp = cross_value(&u, CrossSet::Primed, CrossDiagonalMode::Exclude).unwrap();
        assert!((c - 2.0).abs() < 1e-15);
        assert!((cp - 2.0).abs() < 1e-15);

        let p = det([0, 2, 0], [0, 0, 0, 0], 4);
        let c = cross_value(&p, CrossSet::Unprimed, CrossDiagonalMode::Exclude).unwrap();
        assert_eq!(c, 2.0);
    }

    #[test]
    fn maxent_d2_is_standard_chsh() {
        let f = BellFunctional::build_maxent(2, 0.1, CrossDiagonalMode::Exclude).unwrap();
        for x in 0..3 {
            for y in 0..4 {
                for a in 0..2 {
                    for b in 0..2 {
                        let expected = if x < 2 && y < 2 { chsh_sign(a, b, x, y) } else { 0.0 };
                        assert_eq!(f.coeff(x, y, a, b), expected);
                    }
                }
            }
        }
    }

    #[test]
    fn maxent_specific_coefficients() {
        let f = BellFunctional::build_maxent(4, 0.1, CrossDiagonalMode::Exclude).unwrap();
        assert_eq!(f.coeff(0, 0, 0, 2), -0.1);
        let f = BellFunctional::build_maxent(3, 0.1, CrossDiagonalMode::Exclude).unwrap();
        assert!((f.coeff(0, 0, 2, 2) - SQRT_2 / 2.0).abs() < 1e-15);
        let f = BellFunctional::build_maxent(3, 0.1, CrossDiagonalMode::Include).unwrap();
        assert!((f.coeff(0, 0, 2, 2) - (SQRT_2 / 2.0 - 0.1)).abs() < 1e-15);
    }

    #[test]
    fn epsilon_must_be_positive() {
        assert!(BellFunctional::build_maxent(3, 0.0, CrossDiagonalMode::Exclude).is_err());
        assert!(BellFunctional::build_maxent(3, -1.0, CrossDiagonalMode::Exclude).is_err());
        assert!(BellFunctional::build_maxent_allow_zero_epsilon(3, 0.0, CrossDiagonalMode::Exclude).is_ok());
        assert!(BellFunctional::build_tilted(&[0.6, 0.8], 0.0, CrossDiagonalMode::Exclude).is_err());
    }

    #[test]
    fn alpha_matches_tangent_form() {
        // α(θ) = 2/√(1 + 2 tan² 2θ)
        let theta = PI / 8.0;
        let expected = 2.0 / (1.0 + 2.0 * (2.0 * theta).tan().powi(2)).sqrt();
        assert!((alpha_of_theta(theta) - expected).abs() < 1e-15);
        assert!((alpha_of_theta(theta) - 2.0 / 3f64.sqrt()).abs() < 1e-12);
        assert!(alpha_of_theta(PI / 4.0).abs() < 1e-7);
    }

    #[test]
    fn tilted_d2_uniform_is_scaled_maxent() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let t = BellFunctional::build_tilted(&[h, h], 0.1, CrossDiagonalMode::Exclude).unwrap();
        let m = BellFunctional::build_maxent(2, 0.1, CrossDiagonalMode::Exclude).unwrap();
        let scaled = m.scaled(1.0 / (2.0 * SQRT_2));
        for (a, b) in t.coefficients().iter().zip(scaled.coefficients()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn tilted_rejects_bad_coefficients() {
        assert!(TiltedSpec::from_coefficients(&[1.0, 0.0]).is_err());
        assert!(TiltedSpec::from_coefficients(&[0.5, 0.5]).is_err());
        assert!(TiltedSpec::from_coefficients(&[0.6]).is_err());
    }

    #[test]
    fn tchsh_deterministic_example() {
        let p = det([0, 0, 0], [0, 0, 0, 0], 2);
        assert!((tchsh_m_value(&p, 0, 1.0).unwrap() - 3.0).abs() < 1e-15);
        assert!((tchsh_m_value(&p, 0, 0.0).unwrap() - chsh_m_value(&p, 0).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn tilted_evaluation_rejects_signaling_input() {
        let mut p = Correlation::uniform(2);
        // move Alice's x=0 mass at y=1 only
        p.set(0, 1, 0, 0, 0.5);
        p.set(0, 1, 1, 0, 0.0);
        let f = BellFunctional::build_tilted(&[0.8, 0.6], 0.1, CrossDiagonalMode::Exclude).unwrap();
        assert!(evaluate(&f, &p).is_err());
        assert!(tchsh_m_value(&p, 0, 0.5).is_err());
    }

    #[test]
    fn unsupported_coefficients_are_rejected_on_load() {
        let f = BellFunctional::build_maxent(2, 0.1, CrossDiagonalMode::Exclude).unwrap();
        let mut coeff = f.coefficients().to_vec();
        coeff[coeff_index(2, 1, 2, 0, 0)] = 1.0;
        assert!(BellFunctional::from_parts(2, 0.1, Variant::MaxEntangled, CrossDiagonalMode::Exclude, coeff, None).is_err());
    }
}
