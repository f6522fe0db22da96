#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use uqcm_core::numkit::{c, CMatrix, C64};
use uqcm_core::protocol::InputState;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(r: &mut impl Rng) -> C64 {
    c(r.sample(StandardNormal), r.sample(StandardNormal))
}

/// Haar-random single-qubit input.
pub fn haar_input(r: &mut impl Rng) -> InputState {
    let (a, b) = (gaussian(r), gaussian(r));
    let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
    InputState::new(a / n, b / n).unwrap()
}

/// Haar-random pure state of dimension `d`.
pub fn haar_vector(r: &mut impl Rng, d: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..d).map(|_| gaussian(r)).collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

/// Full-rank random density matrix `GG†/Tr`.
pub fn random_density(r: &mut impl Rng, d: usize) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| gaussian(r));
    let m = g.matmul(&g.dagger());
    let t = m.trace().re;
    m.scale_real(1.0 / t)
}

/// Haar-random unitary via QR of a Ginibre matrix.
pub fn haar_unitary(r: &mut impl Rng, d: usize) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| gaussian(r)).to_nalgebra();
    let qr = g.qr();
    let (q, rr) = (qr.q(), qr.r());
    let mut q = CMatrix::from_nalgebra(&q);
    for j in 0..d {
        let ph = rr[(j, j)] / rr[(j, j)].norm();
        for i in 0..d {
            q[(i, j)] *= ph;
        }
    }
    q
}
