//! Coarse-graining a d-outcome strategy into a qubit CHSH strategy.
//!
//! Answer pairs `(2m, 2m+1)` with `m ≥ 1` are mapped to `(0, 1)` or `(1, 0)`
//! according to a sign vector `o`. Since CHSH only depends on the XOR of the
//! answers, in-block terms keep their sign and only the cross terms between
//! different blocks change. For odd d the leftover answer `d−1` is replaced by
//! an ideal CHSH measurement on an extra shared EPR pair.

use std::f64::consts::SQRT_2;

use crate::bell::{block_of, chsh_m_value, chsh_sign, num_blocks, UNPRIMED_QUESTIONS};
use crate::correlation::{correlation_from_quantum, Correlation, QuantumStrategy};
use crate::error::{Error, Result};
use crate::ideal::ideal_maxent_strategy;
use crate::linalg::{kron, CMat, CVec};

/// One bit per block `m = 1, .., ⌊d/2⌋−1`; block 0 is never flipped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignVector {
    bits: Vec<bool>,
}

impl SignVector {
    pub fn new(d: usize, bits: Vec<bool>) -> Result<Self> {
        let expected = num_blocks(d).saturating_sub(1);
        if bits.len() != expected {
            return Err(Error::Input(format!(
                "sign vector for d = {d} needs {expected} bits, got {}",
                bits.len()
            )));
        }
        Ok(Self { bits })
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            bits: vec![false; num_blocks(d).saturating_sub(1)],
        }
    }

    /// All `2^(⌊d/2⌋−1)` sign vectors in binary counting order.
    pub fn all(d: usize) -> Vec<Self> {
        let n = num_blocks(d).saturating_sub(1);
        (0..1usize << n)
            .map(|k| Self {
                bits: (0..n).map(|i| (k >> i) & 1 == 1).collect(),
            })
            .collect()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// `o[m]` with `o[0] = 0`.
    pub fn bit(&self, m: usize) -> usize {
        if m == 0 {
            0
        } else {
            usize::from(self.bits[m - 1])
        }
    }

    pub fn flipped(&self, m: usize) -> Self {
        let mut out = self.clone();
        out.bits[m - 1] = !out.bits[m - 1];
        out
    }

    /// Qubit answer assigned to a block label `a`.
    pub fn relabel(&self, a: usize) -> usize {
        (a % 2) ^ self.bit(a / 2)
    }
}

/// `Π̃^0 = Σ_{a: relabel(a)=0} Π^a`, `Π̃^1 = Σ_{a: relabel(a)=1} Π^a` over block labels.
fn coarse_grain(pvm: &[CMat], d: usize, o: &SignVector) -> [CMat; 2] {
    let dim = pvm[0].nrows();
    let mut out = [CMat::zeros(dim, dim), CMat::zeros(dim, dim)];
    for a in 0..2 * num_blocks(d) {
        out[o.relabel(a)] += &pvm[a];
    }
    out
}

fn check_reducible(s: &QuantumStrategy, o: &SignVector) -> Result<()> {
    if s.nx() < 2 || s.ny() < 2 {
        return Err(Error::Shape("reduction needs questions x, y ∈ {0,1}".into()));
    }
    SignVector::new(s.d(), o.bits.clone())?;
    Ok(())
}

/// Qubit CHSH strategy on the same state for even d.
pub fn chsh_reduction_even(s: &QuantumStrategy, o: &SignVector) -> Result<QuantumStrategy> {
    let d = s.d();
    if !d.is_multiple_of(2) {
        return Err(Error::Input(format!("d = {d} is odd; use the odd reduction")));
    }
    check_reducible(s, o)?;
    let alice = (0..2).map(|x| coarse_grain(&s.alice()[x], d, o).to_vec()).collect();
    let bob = (0..2).map(|y| coarse_grain(&s.bob()[y], d, o).to_vec()).collect();
    QuantumStrategy::from_parts_unchecked(2, s.state().clone(), alice, bob)
}

/// Qubit CHSH strategy on `ψ ⊗ EPR` for odd d: the leftover outcome `d−1`
/// triggers an ideal CHSH measurement of the EPR half.
///
/// Each party's new space is `H ⊗ C²` with index `2i + α`.
pub fn chsh_reduction_odd(s: &QuantumStrategy, o: &SignVector) -> Result<QuantumStrategy> {
    let d = s.d();
    if d.is_multiple_of(2) {
        return Err(Error::Input(format!("d = {d} is even; use the even reduction")));
    }
    check_reducible(s, o)?;
    let qubit = ideal_maxent_strategy(2)?;
    let id2 = CMat::identity(2, 2);
    let lift = |pvm: &[CMat], ideal: &[CMat]| -> Vec<CMat> {
        let [zero, one] = coarse_grain(pvm, d, o);
        let leftover = &pvm[d - 1];
        vec![
            kron(&zero, &id2) + kron(leftover, &ideal[0]),
            kron(&one, &id2) + kron(leftover, &ideal[1]),
        ]
    };
    let alice = (0..2).map(|x| lift(&s.alice()[x], &qubit.alice()[x])).collect();
    let bob = (0..2).map(|y| lift(&s.bob()[y], &qubit.bob()[y])).collect();

    let (da, db) = (s.dim_a(), s.dim_b());
    let amp = 1.0 / SQRT_2;
    let mut state = CVec::zeros(4 * da * db);
    for i in 0..da {
        for j in 0..db {
            let psi = s.state()[i * db + j];
            for alpha in 0..2 {
                state[(2 * i + alpha) * (2 * db) + 2 * j + alpha] = psi * amp;
            }
        }
    }
    QuantumStrategy::from_parts_unchecked(2, state, alice, bob)
}

/// Dispatch on the parity of d.
pub fn chsh_reduction(s: &QuantumStrategy, o: &SignVector) -> Result<QuantumStrategy> {
    if s.d().is_multiple_of(2) {
        chsh_reduction_even(s, o)
    } else {
        chsh_reduction_odd(s, o)
    }
}

/// Signed cross contribution `C(o)` on the unprimed questions: terms with `a`
/// and `b` in different blocks, signed by the CHSH parity of their relabelled
/// bits. Terms involving the odd-d leftover label contribute nothing.
pub fn cross_contribution(p: &Correlation, o: &SignVector) -> Result<f64> {
    let d = p.d();
    if o.bits.len() != num_blocks(d).saturating_sub(1) {
        return Err(Error::Input(format!("sign vector length does not match d = {d}")));
    }
    let mut total = 0.0;
    for &(x, y) in &UNPRIMED_QUESTIONS {
        for a in 0..d {
            for b in 0..d {
                if let (Some(ma), Some(mb)) = (block_of(d, a), block_of(d, b)) {
                    if ma != mb {
                        total += chsh_sign(o.relabel(a), o.relabel(b), x, y) * p.get(x, y, a, b);
                    }
                }
            }
        }
    }
    Ok(total)
}

/// Right-hand side of the reduction identity computed from the d-outcome
/// correlation: `Σ_m [CHSH_m]_p + C(o)`, plus `(√2/2) Σ_{x,y} p(d−1,d−1|x,y)`
/// for odd d.
pub fn reduction_prediction(p: &Correlation, o: &SignVector) -> Result<f64> {
    let d = p.d();
    let mut total = cross_contribution(p, o)?;
    for m in 0..num_blocks(d) {
        total += chsh_m_value(p, m)?;
    }
    if d % 2 == 1 {
        total += SQRT_2 / 2.0
            * UNPRIMED_QUESTIONS
                .iter()
                .map(|&(x, y)| p.get(x, y, d - 1, d - 1))
                .sum::<f64>();
    }
    Ok(total)
}

/// Cross contribution between block `m` and all lower blocks for the given `o`.
fn contribution_with_lower_blocks(p: &Correlation, o: &SignVector, m: usize) -> f64 {
    let d = p.d();
    let mut total = 0.0;
    for &(x, y) in &UNPRIMED_QUESTIONS {
        for a in 0..d {
            for b in 0..d {
                let (Some(ma), Some(mb)) = (block_of(d, a), block_of(d, b)) else {
                    continue;
                };
                let pair = (ma == m && mb < m) || (mb == m && ma < m);
                if pair {
                    total += chsh_sign(o.relabel(a), o.relabel(b), x, y) * p.get(x, y, a, b);
                }
            }
        }
    }
    total
}

/// Choose `o[1], o[2], ..` in order so each block's cross contribution with
/// the lower blocks is non-negative; ties keep `o[m] = 0`. Guarantees `C(o) ≥ 0`.
pub fn greedy_sign_selection_for(p: &Correlation) -> SignVector {
    let d = p.d();
    let mut o = SignVector::zeros(d);
    for m in 1..num_blocks(d) {
        if contribution_with_lower_blocks(p, &o, m) < 0.0 {
            o.bits[m - 1] = true;
        }
    }
    o
}

pub fn greedy_sign_selection(s: &QuantumStrategy) -> Result<SignVector> {
    let p = correlation_from_quantum(s)?;
    Ok(greedy_sign_selection_for(&p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::standard_chsh_value;
    use crate::correlation::correlation_from_quantum;
    use crate::linalg::{basis_projector, ONE};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn reduced_value(s: &QuantumStrategy, o: &SignVector) -> f64 {
        let r = chsh_reduction(s, o).unwrap();
        r.validate(1e-9).unwrap();
        standard_chsh_value(&correlation_from_quantum(&r).unwrap()).unwrap()
    }

    #[test]
    fn sign_vector_length_is_checked() {
        assert!(SignVector::new(4, vec![true]).is_ok());
        assert!(SignVector::new(4, vec![]).is_err());
        assert!(SignVector::new(2, vec![]).is_ok());
        assert_eq!(SignVector::all(6).len(), 4);
    }

    #[test]
    fn ideal_d4_reduces_to_tsirelson() {
        let s = ideal_maxent_strategy(4).unwrap();
        let p = correlation_from_quantum(&s).unwrap();
        for o in SignVector::all(4) {
            assert!((reduced_value(&s, &o) - 2.0 * SQRT_2).abs() < 1e-12);
            assert!(cross_contribution(&p, &o).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn ideal_odd_reduces_to_tsirelson() {
        for d in [3, 5, 7] {
            let s = ideal_maxent_strategy(d).unwrap();
            let o = greedy_sign_selection(&s).unwrap();
            assert!((reduced_value(&s, &o) - 2.0 * SQRT_2).abs() < 1e-9, "d={d}");
        }
    }

    #[test]
    fn wrong_parity_is_rejected() {
        let s = ideal_maxent_strategy(3).unwrap();
        assert!(chsh_reduction_even(&s, &SignVector::zeros(3)).is_err());
        let s = ideal_maxent_strategy(4).unwrap();
        assert!(chsh_reduction_odd(&s, &SignVector::zeros(4)).is_err());
    }

    #[test]
    fn block0_only_strategy_ignores_signs() {
        // qubit ideal strategy embedded in block 0 of d = 4, state supported on |00⟩,|11⟩
        let qubit = ideal_maxent_strategy(2).unwrap();
        let d = 4;
        let embed = |pvm: &[CMat]| -> Vec<CMat> {
            let mut out = vec![CMat::zeros(d, d); d];
            for a in 0..2 {
                out[a].view_mut((0, 0), (2, 2)).copy_from(&pvm[a]);
            }
            out[2] = basis_projector(d, 2);
            out[3] = basis_projector(d, 3);
            out
        };
        let mut state = CVec::zeros(d * d);
        state[0] = ONE.unscale(SQRT_2);
        state[d + 1] = ONE.unscale(SQRT_2);
        let alice = (0..3).map(|x| embed(&qubit.alice()[x.min(1)])).collect();
        let bob = (0..4).map(|y| embed(&qubit.bob()[y.min(1)])).collect();
        let s = QuantumStrategy::new(d, state, alice, bob).unwrap();
        let p = correlation_from_quantum(&s).unwrap();
        let block0 = chsh_m_value(&p, 0).unwrap();
        for o in SignVector::all(d) {
            assert!((reduced_value(&s, &o) - block0).abs() < 1e-12);
        }
    }

    #[test]
    fn epr_ancilla_play() {
        // all mass on |d−1, d−1⟩ and every question answered d−1
        let d = 3;
        let mut state = CVec::zeros(d * d);
        state[(d - 1) * d + d - 1] = ONE;
        let constant = |_: usize| {
            let mut pvm = vec![CMat::zeros(d, d); d];
            pvm[d - 1] = CMat::identity(d, d);
            pvm
        };
        let s = QuantumStrategy::new(d, state, (0..3).map(constant).collect(), (0..4).map(constant).collect()).unwrap();
        assert!((reduced_value(&s, &SignVector::zeros(d)) - 2.0 * SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn single_cross_term_gets_positive_sign() {
        // put mass on a single cross pair (a=0 in block 0, b=2 in block 1) at (x,y)=(0,0)
        let mut p = Correlation::zeros(4);
        p.set(0, 0, 0, 2, 0.3);
        let zero = SignVector::zeros(4);
        // relabel(0)=0, relabel(2)=o[1]; with o[1]=0 the sign is +, so keep 0
        assert_eq!(greedy_sign_selection_for(&p), zero);
        let mut q = Correlation::zeros(4);
        q.set(0, 0, 0, 3, 0.3);
        // relabel(3) = 1 with o[1]=0 gives −; flipping makes it +
        let o = greedy_sign_selection_for(&q);
        assert_eq!(o.bits(), &[true]);
        assert!(cross_contribution(&q, &o).unwrap() > 0.0);
    }

    #[test]
    fn random_strategies_satisfy_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in [3, 4, 5, 6] {
            for _ in 0..10 {
                let s = QuantumStrategy::random(d, d, d, 3, 4, &mut rng);
                let p = correlation_from_quantum(&s).unwrap();
                for o in SignVector::all(d) {
                    let lhs = reduced_value(&s, &o);
                    let rhs = reduction_prediction(&p, &o).unwrap();
                    assert!((lhs - rhs).abs() < 1e-9, "d={d}: {lhs} vs {rhs}");
                }
                let g = greedy_sign_selection_for(&p);
                assert!(cross_contribution(&p, &g).unwrap() >= -1e-12);
            }
        }
    }
}
