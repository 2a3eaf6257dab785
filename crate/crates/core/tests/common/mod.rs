//! Reference implementations shared by the integration tests.
#![allow(dead_code)]

use cpns_core::operator::{c64, ComplexMatrix};
use nalgebra::DMatrix;
use num_complex::Complex64;

pub type Super = DMatrix<Complex64>;

/// Column-major `vec`.
pub fn vec_of(m: &ComplexMatrix) -> Vec<Complex64> {
    m.iter().copied().collect()
}

pub fn unvec(v: &[Complex64], d: usize) -> ComplexMatrix {
    ComplexMatrix::from_column_slice(d, d, v)
}

fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Super {
    a.kronecker(b)
}

/// Superoperator of `-i[H, .] + sum_k (L_k^† . L_k - 1/2 {L_k L_k^†, .})`
/// using `vec(A X B) = (B^T kron A) vec(X)`.
pub fn liouvillian(h: &ComplexMatrix, ls: &[ComplexMatrix]) -> Super {
    let d = h.nrows();
    let id = ComplexMatrix::identity(d, d);
    let mi = c64(0.0, -1.0);
    let mut s = (kron(&id, h) - kron(&h.transpose(), &id)) * mi;
    for l in ls {
        let ld = l.adjoint();
        let llt = l * &ld;
        s += kron(&l.transpose(), &ld);
        s -= (kron(&id, &llt) + kron(&llt.transpose(), &id)) * c64(0.5, 0.0);
    }
    s
}

/// `exp(S t)` by scaling and squaring with a Taylor core.
pub fn expm(s: &Super, t: f64) -> Super {
    let n = s.nrows();
    let a = s * c64(t, 0.0);
    let norm: f64 = a.iter().map(|z| z.norm()).fold(0.0, f64::max) * n as f64;
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let a = a * c64(0.5f64.powi(squarings as i32), 0.0);
    let mut term = Super::identity(n, n);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &a * c64(1.0 / k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

pub fn apply_super(s: &Super, m: &ComplexMatrix) -> ComplexMatrix {
    let v = nalgebra::DVector::from_vec(vec_of(m));
    let out = s * v;
    unvec(out.as_slice(), m.nrows())
}
