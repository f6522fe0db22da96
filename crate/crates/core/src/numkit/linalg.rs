use nalgebra::{DMatrix, DVector};

use super::matrix::{c, CMatrix, C64, ZERO};
use crate::error::{Error, Result};

/// Hermiticity tolerance shared across the crate.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Unitarity tolerance shared across the crate.
pub const UNITARY_TOL: f64 = 1e-9;
/// Trace-preservation tolerance shared across the crate.
pub const TRACE_TOL: f64 = 1e-12;

/// Spectral decomposition `H = V diag(values) V†` with eigenvalues in descending order.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    /// Eigenvectors as columns.
    pub vectors: CMatrix,
}

impl Eigh {
    /// `f(H) = V diag(f(λ)) V†`.
    pub fn apply_fn(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let n = self.values.len();
        let fv: Vec<C64> = self.values.iter().map(|&l| f(l)).collect();
        let v = &self.vectors;
        let mut out = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = ZERO;
                for k in 0..n {
                    acc += v[(i, k)] * fv[k] * v[(j, k)].conj();
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    /// `exp(-i H t)`.
    pub fn propagator(&self, t: f64) -> CMatrix {
        self.apply_fn(|l| C64::from_polar(1.0, -l * t))
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.apply_fn(|l| c(l, 0.0))
    }
}

fn require_hermitian(h: &CMatrix) -> Result<()> {
    let err = h.hermiticity_error();
    if err > HERMITIAN_TOL {
        return Err(Error::NonHermitianInput(err));
    }
    Ok(())
}

/// Hermitian eigendecomposition with eigenvalues sorted descending.
///
/// Solved through the real symmetric embedding `[[A, -B], [B, A]]` of `H = A + iB`, whose
/// spectrum is that of `H` with every eigenvalue doubled. One complex vector is kept per
/// pair by greedy Gram–Schmidt over the `2n` candidates `x + iy`.
pub fn eigh(h: &CMatrix) -> Result<Eigh> {
    require_hermitian(h)?;
    let h = h.hermitian_part();
    let n = h.rows();
    let real = DMatrix::<f64>::from_fn(2 * n, 2 * n, |i, j| {
        let z = h[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let sym = nalgebra::SymmetricEigen::new(real);
    let mut cand: Vec<Vec<C64>> = (0..2 * n)
        .map(|k| {
            (0..n)
                .map(|i| c(sym.eigenvectors[(i, k)], sym.eigenvectors[(i + n, k)]))
                .collect()
        })
        .collect();
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(n);
    while basis.len() < n {
        let (best, norm) = cand
            .iter()
            .enumerate()
            .map(|(k, v)| (k, v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or(Error::ConvergenceFailure)?;
        if !(norm > 1e-3) {
            return Err(Error::ConvergenceFailure);
        }
        let a: Vec<C64> = cand
            .swap_remove(best)
            .into_iter()
            .map(|z| z / norm)
            .collect();
        for v in &mut cand {
            let p: C64 = a.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum();
            for (y, x) in v.iter_mut().zip(&a) {
                *y -= p * x;
            }
        }
        basis.push(a);
    }
    let rayleigh = |v: &[C64]| {
        let hv = h.apply(v);
        v.iter().zip(&hv).map(|(x, y)| x.conj() * y).sum::<C64>().re
    };
    let mut pairs: Vec<(f64, Vec<C64>)> = basis.into_iter().map(|v| (rayleigh(&v), v)).collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let values = pairs.iter().map(|p| p.0).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| pairs[j].1[i]);
    Ok(Eigh { values, vectors })
}

/// `exp(-i h t)` for hermitian `h` in rad/ns and `t` in ns, via spectral decomposition.
pub fn expm_scaled(h: &CMatrix, t: f64) -> Result<CMatrix> {
    Ok(eigh(h)?.propagator(t))
}

/// Real eigenvalues of a hermitian matrix, descending.
pub fn eigvals_hermitian(h: &CMatrix) -> Result<Vec<f64>> {
    let e = eigh(h)?;
    let residual = e.reconstruct().max_abs_diff(h);
    if residual > UNITARY_TOL * h.max_abs().max(1.0) {
        return Err(Error::ConvergenceFailure);
    }
    Ok(e.values)
}

/// Eigenvalues of a general 4×4 complex matrix via a Schur reduction, sorted by descending real part.
///
/// Imaginary parts below 1e-10 are dropped and real parts in (-1e-10, 0) are clamped to zero.
pub fn eigvals_general_4x4(m: &CMatrix) -> Result<Vec<C64>> {
    if m.rows() != 4 || m.cols() != 4 {
        return Err(Error::ShapeMismatch(format!(
            "expected 4x4, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let schur = nalgebra::Schur::try_new(m.to_nalgebra(), 1e-15, 10_000)
        .ok_or(Error::ConvergenceFailure)?;
    let (_, t) = schur.unpack();
    let mut vals: Vec<C64> = (0..4)
        .map(|i| {
            let mut z = t[(i, i)];
            if z.im.abs() < 1e-10 {
                z.im = 0.0;
                if z.re < 0.0 && z.re > -1e-10 {
                    z.re = 0.0;
                }
            }
            z
        })
        .collect();
    vals.sort_by(|a, b| b.re.total_cmp(&a.re));
    Ok(vals)
}

/// Singular values, descending.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let svd = m.to_nalgebra().svd(false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Unitary factor of the polar decomposition `M = U P`.
pub fn polar_unitary(m: &CMatrix) -> CMatrix {
    let svd = m.to_nalgebra().svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    CMatrix::from_nalgebra(&(u * vt))
}

/// Square root of a positive semidefinite matrix; eigenvalues below the numerical floor are zeroed.
pub fn sqrt_psd(rho: &CMatrix) -> Result<CMatrix> {
    let e = eigh(rho)?;
    let floor = 64.0 * f64::EPSILON * e.values.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
    Ok(e.apply_fn(|l| c(if l > floor { l.sqrt() } else { 0.0 }, 0.0)))
}

/// Minimum-norm least-squares solution of `A x = b`; fails if `A` has deficient column rank.
pub fn lstsq(a: &CMatrix, b: &[C64]) -> Result<Vec<C64>> {
    if a.rows() != b.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} rows vs rhs of {}",
            a.rows(),
            b.len()
        )));
    }
    let svd = a.to_nalgebra().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let tol = smax * 1e-10;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    if rank < a.cols() {
        return Err(Error::RankDeficient);
    }
    let rhs = DVector::from_column_slice(b);
    let x = svd
        .solve(&DMatrix::from_columns(&[rhs]), tol)
        .map_err(|_| Error::ConvergenceFailure)?;
    Ok(x.column(0).iter().copied().collect())
}

/// Euclidean projection of a real vector onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cum += uk;
        let t = (cum - 1.0) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Closest unit-trace positive semidefinite matrix in Frobenius norm.
pub fn nearest_density_matrix(m: &CMatrix) -> Result<CMatrix> {
    let e = eigh(&m.hermitian_part())?;
    let p = project_simplex(&e.values);
    let projected = Eigh {
        values: p,
        vectors: e.vectors,
    };
    Ok(projected.reconstruct())
}
