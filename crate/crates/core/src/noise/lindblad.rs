use crate::error::{Error, Result};
use crate::metrics::validate_density;
use crate::numkit::{c, CMatrix};

/// Local error bound accepted by [`lindblad_evolve`].
pub const STEP_ERROR_TOL: f64 = 1e-6;

/// Collapse operator with its rate in 1/ns.
#[derive(Clone, Debug)]
pub struct Collapse {
    pub op: CMatrix,
    pub rate: f64,
}

impl Collapse {
    pub fn new(op: CMatrix, rate: f64) -> Self {
        Self { op, rate }
    }
}

struct Generator {
    h: CMatrix,
    ops: Vec<(CMatrix, CMatrix, CMatrix, f64)>,
}

impl Generator {
    fn new(h: &CMatrix, collapse: &[Collapse]) -> Self {
        let ops = collapse
            .iter()
            .map(|cl| {
                let d = cl.op.dagger();
                let ldl = d.matmul(&cl.op);
                (cl.op.clone(), d, ldl, cl.rate)
            })
            .collect();
        Self { h: h.clone(), ops }
    }

    /// `−i[H, ρ] + Σ γ (L ρ L† − ½{L†L, ρ})`.
    fn apply(&self, rho: &CMatrix) -> CMatrix {
        let mut out = self.h.commutator(rho).scale(c(0.0, -1.0));
        for (l, ld, ldl, rate) in &self.ops {
            let jump = l.matmul(rho).matmul(ld);
            let anti = &ldl.matmul(rho) + &rho.matmul(ldl);
            out += &(&jump - &anti.scale_real(0.5)).scale_real(*rate);
        }
        out
    }
}

fn rk4(gen: &Generator, rho: &CMatrix, t: f64, steps: usize) -> CMatrix {
    let h = t / steps as f64;
    let mut r = rho.clone();
    for _ in 0..steps {
        let k1 = gen.apply(&r);
        let k2 = gen.apply(&(&r + &k1.scale_real(h / 2.0)));
        let k3 = gen.apply(&(&r + &k2.scale_real(h / 2.0)));
        let k4 = gen.apply(&(&r + &k3.scale_real(h)));
        let mut inc = k1;
        inc += &k2.scale_real(2.0);
        inc += &k3.scale_real(2.0);
        inc += &k4;
        r += &inc.scale_real(h / 6.0);
    }
    r.hermitian_part()
}

/// Integrates the Lindblad master equation for `t` ns with fourth-order Runge–Kutta at step `dt`.
///
/// The same interval is repeated at `dt/2`; the finer result is returned and the difference
/// serves as the error estimate.
pub fn lindblad_evolve(
    rho: &CMatrix,
    h: &CMatrix,
    collapse: &[Collapse],
    t: f64,
    dt: f64,
) -> Result<CMatrix> {
    validate_density(rho)?;
    if !h.is_hermitian(crate::numkit::HERMITIAN_TOL) {
        return Err(Error::NonHermitianInput(h.hermiticity_error()));
    }
    if h.rows() != rho.rows() || collapse.iter().any(|cl| cl.op.rows() != rho.rows()) {
        return Err(Error::ShapeMismatch(
            "operator dimensions differ from the state".into(),
        ));
    }
    if !(dt > 0.0) || !(t >= 0.0) || dt > t.max(dt) {
        return Err(Error::InvalidParameter(format!(
            "invalid times t = {t}, dt = {dt}"
        )));
    }
    if t == 0.0 {
        return Ok(rho.clone());
    }
    if dt > t {
        return Err(Error::InvalidParameter(format!(
            "dt = {dt} exceeds t = {t}"
        )));
    }
    let gen = Generator::new(h, collapse);
    let steps = (t / dt).ceil() as usize;
    let coarse = rk4(&gen, rho, t, steps);
    let fine = rk4(&gen, rho, t, 2 * steps);
    let err = coarse.max_abs_diff(&fine);
    if err > STEP_ERROR_TOL || !fine.is_finite() {
        return Err(Error::StepTooLarge(err));
    }
    Ok(fine)
}
