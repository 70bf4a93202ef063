#![allow(dead_code)]

use chshd_core::bell::{block_labels, num_blocks, primed_block_labels};
use chshd_core::linalg::{basis_projector, CMat, CVec};
use chshd_core::QuantumStrategy;
use num_complex::Complex64;
use proptest::test_runner::{Config, RngSeed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Fixed-seed proptest configuration with `cases` instances.
pub fn config(cases: u32) -> Config {
    Config {
        cases,
        rng_seed: RngSeed::Fixed(0x5eed_c45d),
        failure_persistence: None,
        ..Config::default()
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random two-outcome split `(|v⟩⟨v|, |w⟩⟨w|)` of the span of `|i⟩, |j⟩`.
fn random_split(dim: usize, (i, j): (usize, usize), rng: &mut ChaCha8Rng) -> (CMat, CMat) {
    let angle: f64 = rng.random_range(0.0..std::f64::consts::PI);
    let phase = Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
    let mut v = CVec::zeros(dim);
    let mut w = CVec::zeros(dim);
    v[i] = Complex64::new(angle.cos(), 0.0);
    v[j] = phase * angle.sin();
    w[i] = -phase.conj() * angle.sin();
    w[j] = Complex64::new(angle.cos(), 0.0);
    (&v * v.adjoint(), &w * w.adjoint())
}

fn random_block_pvm(d: usize, primed: bool, rng: &mut ChaCha8Rng) -> Vec<CMat> {
    let mut pvm = vec![CMat::zeros(d, d); d];
    for m in 0..num_blocks(d) {
        let labels = if primed { primed_block_labels(d, m) } else { block_labels(m) };
        let (p, q) = random_split(d, labels, rng);
        pvm[labels.0] = p;
        pvm[labels.1] = q;
    }
    if d % 2 == 1 {
        let leftover = if primed { 0 } else { d - 1 };
        pvm[leftover] = basis_projector(d, leftover);
    }
    pvm
}

/// Strategy on `Σ_i c_i e^{iφ_i} |ii⟩` whose measurements act inside the
/// answer blocks, so every cross term has zero probability.
pub fn block_diagonal_strategy(d: usize, rng: &mut ChaCha8Rng) -> QuantumStrategy {
    let amps: Vec<f64> = (0..d).map(|_| rng.random_range(0.05..1.0)).collect();
    let norm = amps.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut state = CVec::zeros(d * d);
    for (i, a) in amps.iter().enumerate() {
        state[i * d + i] = Complex64::from_polar(a / norm, rng.random_range(0.0..std::f64::consts::TAU));
    }
    let computational = (0..d).map(|a| basis_projector(d, a)).collect();
    let alice = vec![
        computational,
        random_block_pvm(d, false, rng),
        random_block_pvm(d, true, rng),
    ];
    let bob = vec![
        random_block_pvm(d, false, rng),
        random_block_pvm(d, false, rng),
        random_block_pvm(d, true, rng),
        random_block_pvm(d, true, rng),
    ];
    QuantumStrategy::new(d, state, alice, bob).expect("block-diagonal strategy is valid")
}
