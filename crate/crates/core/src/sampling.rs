//! Seeded generators for randomized curvature inputs.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::tensor::{kn_product, AlgCurv, Sym2};

/// Symmetric matrix with i.i.d. standard normal upper triangle.
pub fn random_sym<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Sym2 {
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v: f64 = StandardNormal.sample(rng);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    Sym2::symmetrized(a)
}

/// Random symmetric matrix with zero (Euclidean) trace.
pub fn random_traceless<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Sym2 {
    let mut h = random_sym(n, rng);
    let tr = h.matrix().trace() / n as f64;
    h = h.sub(&Sym2::identity(n).scaled(tr)).expect("same dimension");
    h
}

/// Random algebraic curvature tensor `Σ ±(h_a ∘ h_a)`.
///
/// The products `h∘h` span the space of algebraic curvature tensors, so the
/// result has generic scalar, traceless-Ricci and Weyl parts.
pub fn random_alg_curv<R: Rng + ?Sized>(n: usize, terms: usize, rng: &mut R) -> AlgCurv {
    let mut t = AlgCurv::zeros(n);
    for _ in 0..terms {
        let h = random_sym(n, rng);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let p = kn_product(&h, &h).expect("same dimension");
        t = t.add(&p.scaled(sign * 0.5)).expect("same dimension");
    }
    t
}

/// Uniform sample on the unit sphere of `R^n`.
pub fn random_unit<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Derives an independent shard seed from a base seed (SplitMix64 step).
pub fn shard_seed(seed: u64, shard: u64) -> u64 {
    let mut z = seed ^ shard.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
