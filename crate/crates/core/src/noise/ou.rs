use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Stationary Ornstein–Uhlenbeck frequency noise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OuProcess {
    /// Stationary standard deviation, rad/ns.
    pub sigma: f64,
    /// Correlation time, ns.
    pub tc: f64,
}

impl OuProcess {
    pub fn new(sigma: f64, tc: f64) -> Result<Self> {
        if !(sigma >= 0.0) || !(tc > 0.0) {
            return Err(Error::InvalidParameter(format!("σ = {sigma}, T_c = {tc}")));
        }
        Ok(Self { sigma, tc })
    }

    /// `n` samples spaced by `dt`, starting from the stationary distribution.
    pub fn sample<R: Rng>(&self, rng: &mut R, n: usize, dt: f64) -> Vec<f64> {
        let mut x = UnitOu::start(rng);
        let decay = (-dt / self.tc).exp();
        let kick = (1.0 - decay * decay).sqrt();
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            if k > 0 {
                x = decay * x + kick * rng.sample::<f64, _>(StandardNormal);
            }
            out.push(self.sigma * x);
        }
        out
    }
}

/// Unit-variance OU state advanced over arbitrary steps.
#[derive(Clone, Copy, Debug)]
pub struct UnitOu {
    pub x: f64,
}

impl UnitOu {
    pub fn start<R: Rng>(rng: &mut R) -> f64 {
        rng.sample(StandardNormal)
    }

    pub fn new<R: Rng>(rng: &mut R) -> Self {
        Self {
            x: Self::start(rng),
        }
    }

    /// Exact update over `dt` for correlation time `tc`.
    pub fn advance<R: Rng>(&mut self, rng: &mut R, dt: f64, tc: f64) -> f64 {
        let decay = (-dt / tc).exp();
        self.x =
            decay * self.x + (1.0 - decay * decay).sqrt() * rng.sample::<f64, _>(StandardNormal);
        self.x
    }
}

/// Generator for trajectory `index` of an ensemble with master `seed`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Samples `K(t)` on `[0, duration]` at spacing `dt`; requires `dt < T_c/5`.
pub fn ou_trajectory(process: &OuProcess, duration: f64, dt: f64, seed: u64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || dt >= process.tc / 5.0 {
        return Err(Error::InvalidParameter(format!(
            "dt = {dt} must be below T_c/5 = {}",
            process.tc / 5.0
        )));
    }
    let n = (duration / dt).floor() as usize + 1;
    Ok(process.sample(&mut trajectory_rng(seed, 0), n, dt))
}

/// Variance of the accumulated phase `∫₀ᵗ K dt` for unit σ.
pub fn phase_variance_unit(t: f64, tc: f64) -> f64 {
    let r = t / tc;
    let core = if r < 0.05 {
        r * r / 2.0 - r.powi(3) / 6.0 + r.powi(4) / 24.0 - r.powi(5) / 120.0
    } else {
        r - 1.0 + (-r).exp()
    };
    2.0 * tc * tc * core
}

/// σ such that the Ramsey coherence `exp(−Var/2)` reaches `e^{−1}` at `t2_star`.
pub fn sigma_for_t2_star(t2_star: f64, tc: f64) -> Result<f64> {
    if !(t2_star > 0.0) || !(tc > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "T2* = {t2_star}, T_c = {tc}"
        )));
    }
    Ok((2.0 / phase_variance_unit(t2_star, tc)).sqrt())
}
