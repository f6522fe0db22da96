use serde::{Deserialize, Serialize};

use super::matrix::{CMatrix, C64, ZERO};
use crate::error::{Error, Result};

/// Ordered subsystem dimensions of a composite space; subsystem 0 is the most significant index.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsystemShape {
    dims: Vec<usize>,
}

impl SubsystemShape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::ShapeMismatch(format!(
                "invalid subsystem dims {dims:?}"
            )));
        }
        Ok(Self { dims })
    }

    pub fn qubits(n: usize) -> Self {
        Self { dims: vec![2; n] }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    /// Stride of subsystem `k` in the flat index.
    pub fn stride(&self, k: usize) -> usize {
        self.dims[k + 1..].iter().product()
    }

    /// Splits a flat index into per-subsystem digits.
    pub fn digits(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for k in (0..self.dims.len()).rev() {
            out[k] = idx % self.dims[k];
            idx /= self.dims[k];
        }
        out
    }

    pub fn flat(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&d, &n)| acc * n + d)
    }

    fn check(&self, rho: &CMatrix) -> Result<()> {
        if !rho.is_square() || rho.rows() != self.total() {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} matrix vs subsystem dims {:?}",
                rho.rows(),
                rho.cols(),
                self.dims
            )));
        }
        Ok(())
    }
}

/// Kronecker product; the left factor is the most significant index.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (br, bc) = (b.rows(), b.cols());
    CMatrix::from_fn(a.rows() * br, a.cols() * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// Kronecker product of a list of factors, left to right.
pub fn kron_all(factors: &[CMatrix]) -> CMatrix {
    factors
        .iter()
        .skip(1)
        .fold(factors[0].clone(), |acc, f| kron(&acc, f))
}

/// Kronecker product of state vectors.
pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| x * y))
        .collect()
}

/// Embeds `op` acting on subsystem `k` into the full space.
pub fn embed(shape: &SubsystemShape, k: usize, op: &CMatrix) -> CMatrix {
    let factors: Vec<CMatrix> = shape
        .dims()
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            if i == k {
                op.clone()
            } else {
                CMatrix::identity(d)
            }
        })
        .collect();
    kron_all(&factors)
}

/// Traces out every subsystem not listed in `keep`; kept subsystems retain their relative order.
pub fn partial_trace(rho: &CMatrix, shape: &SubsystemShape, keep: &[usize]) -> Result<CMatrix> {
    shape.check(rho)?;
    let n = shape.dims().len();
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.iter().any(|&k| k >= n) {
        return Err(Error::ShapeMismatch(format!(
            "keep set {keep:?} outside {n} subsystems"
        )));
    }
    let traced: Vec<usize> = (0..n).filter(|k| !keep.contains(k)).collect();
    let kept_dims: Vec<usize> = keep.iter().map(|&k| shape.dims()[k]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| shape.dims()[k]).collect();
    let dk: usize = kept_dims.iter().product();
    let dt: usize = traced_dims.iter().product();
    let kept_shape = SubsystemShape {
        dims: kept_dims.clone(),
    };
    let traced_shape = SubsystemShape {
        dims: if traced_dims.is_empty() {
            vec![1]
        } else {
            traced_dims
        },
    };

    let full_index = |kd: &[usize], td: &[usize]| {
        let mut digits = vec![0; n];
        for (slot, &k) in keep.iter().enumerate() {
            digits[k] = kd[slot];
        }
        for (slot, &k) in traced.iter().enumerate() {
            digits[k] = td[slot];
        }
        shape.flat(&digits)
    };

    let mut out = CMatrix::zeros(dk, dk);
    for i in 0..dk {
        let di = kept_shape.digits(i);
        for j in 0..dk {
            let dj = kept_shape.digits(j);
            let mut acc = ZERO;
            for t in 0..dt {
                let td = if traced.is_empty() {
                    vec![]
                } else {
                    traced_shape.digits(t)
                };
                acc += rho[(full_index(&di, &td), full_index(&dj, &td))];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Reduced density matrix of a pure state on the `keep` subsystems.
pub fn reduce_pure(psi: &[C64], shape: &SubsystemShape, keep: &[usize]) -> Result<CMatrix> {
    if psi.len() != shape.total() {
        return Err(Error::ShapeMismatch(format!(
            "state of length {} vs dims {:?}",
            psi.len(),
            shape.dims()
        )));
    }
    partial_trace(&CMatrix::outer(psi), shape, keep)
}

/// Reorders subsystems of a state vector: output subsystem `i` is input subsystem `order[i]`.
pub fn permute_state(psi: &[C64], shape: &SubsystemShape, order: &[usize]) -> Vec<C64> {
    let new_dims: Vec<usize> = order.iter().map(|&k| shape.dims()[k]).collect();
    let new_shape = SubsystemShape { dims: new_dims };
    let mut out = vec![ZERO; psi.len()];
    for (idx, &amp) in psi.iter().enumerate() {
        let d = shape.digits(idx);
        let nd: Vec<usize> = order.iter().map(|&k| d[k]).collect();
        out[new_shape.flat(&nd)] = amp;
    }
    out
}
