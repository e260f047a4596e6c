//! Dense matrix helpers. Storage is nalgebra; SVD and Hermitian
//! eigendecompositions go through faer in double precision.

use faer::{c64, Mat, Side};
use nalgebra::{ComplexField, DMatrix, DVector};

use crate::scalar::{c0, cr, phase_of, Real, C};

pub type CMat<T> = DMatrix<C<T>>;
pub type CVec<T> = DVector<C<T>>;

/// Thin SVD `m = u * diag(s) * v_h` with `s` sorted in nonincreasing order.
#[derive(Clone, Debug)]
pub struct Svd<T: Real> {
    pub u: CMat<T>,
    pub s: Vec<T>,
    pub v_h: CMat<T>,
}

impl<T: Real> Svd<T> {
    /// Column `i` of `u`.
    pub fn left(&self, i: usize) -> CVec<T> {
        self.u.column(i).into_owned()
    }

    /// Right singular vector `i`, i.e. the conjugate of row `i` of `v_h`.
    pub fn right(&self, i: usize) -> CVec<T> {
        self.v_h.row(i).transpose().map(|z| z.conj())
    }

    /// Row `i` of `v_h` as a column vector (no conjugation).
    pub fn right_conj(&self, i: usize) -> CVec<T> {
        self.v_h.row(i).transpose()
    }
}

fn to_faer<T: Real>(m: &CMat<T>) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
        let z = m[(i, j)];
        c64::new(z.re.as_f64(), z.im.as_f64())
    })
}

fn from_faer<T: Real>(z: c64) -> C<T> {
    C::new(T::lit(z.re), T::lit(z.im))
}

/// Thin SVD, computed in double precision.
pub fn svd<T: Real>(m: &CMat<T>) -> Svd<T> {
    let (r, c) = (m.nrows(), m.ncols());
    let k = r.min(c);
    if k == 0 {
        return Svd {
            u: CMat::zeros(r, 0),
            s: Vec::new(),
            v_h: CMat::zeros(0, c),
        };
    }
    let dec = to_faer(m).thin_svd().expect("svd converges");
    let (fu, fs, fv) = (dec.U(), dec.S().column_vector(), dec.V());
    let raw: Vec<f64> = (0..k).map(|i| fs[i].re).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| raw[b].partial_cmp(&raw[a]).unwrap_or(std::cmp::Ordering::Equal));
    let s = order.iter().map(|&i| T::lit(raw[i])).collect();
    let u = CMat::from_fn(r, k, |i, j| from_faer(fu[(i, order[j])]));
    let v_h = CMat::from_fn(k, c, |i, j| from_faer::<T>(fv[(j, order[i])]).conj());
    Svd { u, s, v_h }
}

pub fn singular_values<T: Real>(m: &CMat<T>) -> Vec<T> {
    if m.nrows().min(m.ncols()) == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = to_faer(m)
        .singular_values()
        .expect("svd converges")
        .into_iter()
        .collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    s.into_iter().map(T::lit).collect()
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues nonincreasing.
/// Column `i` of the returned matrix is the eigenvector of eigenvalue `i`.
pub fn hermitian_eigen<T: Real>(m: &CMat<T>) -> (Vec<T>, CMat<T>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let herm = (m + m.adjoint()) * cr(T::lit(0.5));
    let dec = to_faer(&herm).self_adjoint_eigen(Side::Lower).expect("eigensolver converges");
    let (fs, fv) = (dec.S().column_vector(), dec.U());
    let raw: Vec<f64> = (0..n).map(|i| fs[i].re).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| raw[b].partial_cmp(&raw[a]).unwrap_or(std::cmp::Ordering::Equal));
    let vals = order.iter().map(|&i| T::lit(raw[i])).collect();
    let vecs = CMat::from_fn(n, n, |r, c| from_faer(fv[(r, order[c])]));
    (vals, vecs)
}

/// Ratio of extreme singular values; infinite for singular input.
pub fn condition_number<T: Real>(m: &CMat<T>) -> f64 {
    let s = singular_values(m);
    let (Some(&hi), Some(&lo)) = (s.first(), s.last()) else {
        return f64::INFINITY;
    };
    if lo <= T::zero() {
        f64::INFINITY
    } else {
        (hi / lo).as_f64()
    }
}

/// Number of singular values strictly above `tol * s[0]`.
pub fn relative_rank<T: Real>(s: &[T], tol: f64) -> usize {
    match s.first() {
        Some(&top) if top > T::zero() => {
            let cut = top * T::lit(tol);
            s.iter().filter(|&&x| x > cut).count()
        }
        _ => 0,
    }
}

pub fn frobenius<T: Real>(m: &CMat<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

pub fn vec_norm<T: Real>(v: &CVec<T>) -> T {
    v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

/// `<a|b>`, conjugate-linear in the first argument.
pub fn inner<T: Real>(a: &CVec<T>, b: &CVec<T>) -> C<T> {
    a.iter().zip(b.iter()).fold(c0(), |acc, (x, y)| acc + x.conj() * y)
}

/// `||m^* m - I||_F`.
pub fn unitarity_defect<T: Real>(m: &CMat<T>) -> T {
    let g = m.adjoint() * m;
    let id = CMat::<T>::identity(g.nrows(), g.ncols());
    frobenius(&(g - id))
}

/// Multiplies `m` by the conjugate phase of its first entry with modulus above
/// `1e-12 * max|m|`, so that entry becomes real positive. Returns the phase
/// that was removed.
pub fn fix_phase<T: Real>(m: &mut CMat<T>) -> C<T> {
    let big = m.iter().fold(T::zero(), |acc, z| acc.max(z.modulus()));
    let floor = big * T::lit(1e-12);
    // row-major scan
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            if z.modulus() > floor {
                let ph = phase_of(z);
                let inv = ph.conj();
                m.iter_mut().for_each(|x| *x *= inv);
                return ph;
            }
        }
    }
    crate::scalar::c1()
}

pub fn vec_fix_phase<T: Real>(v: &mut CVec<T>) -> C<T> {
    let big = v.iter().fold(T::zero(), |acc, z| acc.max(z.modulus()));
    let floor = big * T::lit(1e-12);
    for i in 0..v.len() {
        if v[i].modulus() > floor {
            let ph = phase_of(v[i]);
            let inv = ph.conj();
            v.iter_mut().for_each(|x| *x *= inv);
            return ph;
        }
    }
    crate::scalar::c1()
}

/// Kronecker product of dense matrices (row index of `a` is the slow one).
pub fn kron<T: Real>(a: &CMat<T>, b: &CMat<T>) -> CMat<T> {
    a.kronecker(b)
}

pub fn kron_vec<T: Real>(a: &CVec<T>, b: &CVec<T>) -> CVec<T> {
    let mut out = CVec::zeros(a.len() * b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i * b.len() + j] = x * y;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Complex;

    #[test]
    fn svd_is_sorted_and_reconstructs() {
        let m = CMat::<f64>::from_fn(3, 4, |i, j| {
            Complex::new((i as f64 + 1.0) * (j as f64 - 1.5), (i * j) as f64 * 0.25 - 0.4)
        });
        let d = svd(&m);
        assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
        let mut rec = CMat::zeros(3, 4);
        for i in 0..d.s.len() {
            rec += d.left(i) * d.right(i).adjoint() * cr(d.s[i]);
        }
        assert!(frobenius(&(rec - &m)) < 1e-12);
    }

    #[test]
    fn hermitian_eigen_descending() {
        let a = CMat::<f64>::from_fn(4, 4, |i, j| Complex::new((i + 2 * j) as f64, i as f64 - j as f64));
        let h = &a * a.adjoint();
        let (vals, vecs) = hermitian_eigen(&h);
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        let top = vecs.column(0).into_owned();
        let hv = &h * &top;
        assert!(vec_norm(&(hv - top * cr(vals[0]))) < 1e-9 * vals[0]);
    }

    #[test]
    fn fix_phase_makes_leading_entry_positive() {
        let mut m = CMat::<f64>::from_fn(2, 2, |i, j| Complex::new(0.0, 1.0 + (i + j) as f64));
        fix_phase(&mut m);
        assert!(m[(0, 0)].im.abs() < 1e-15 && m[(0, 0)].re > 0.0);
    }
}
