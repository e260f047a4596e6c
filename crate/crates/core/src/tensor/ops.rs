use super::{Cut, Ket, Opr, Permutation, Shape};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::scalar::{c1, Real};

/// Either a ket or an operator, for callers that only learn the kind at run time.
#[derive(Clone, Debug, PartialEq)]
pub enum TensorItem<T: Real> {
    Ket(Ket<T>),
    Opr(Opr<T>),
}

/// Kronecker product with concatenated shapes.
pub fn tensor_product<T: Real>(a: &TensorItem<T>, b: &TensorItem<T>) -> Result<TensorItem<T>> {
    match (a, b) {
        (TensorItem::Ket(x), TensorItem::Ket(y)) => Ok(TensorItem::Ket(x.kron(y))),
        (TensorItem::Opr(x), TensorItem::Opr(y)) => Ok(TensorItem::Opr(x.kron(y))),
        _ => Err(Error::KindMismatch),
    }
}

/// Reshapes `v` into the operator `A_v` across `cut`:
/// `A_v[i, j] = v[i * n + j]` after grouping the left factors first.
pub fn vec_to_op<T: Real>(v: &Ket<T>, cut: &Cut) -> Result<Opr<T>> {
    cut.check(v.shape())?;
    let grouped = v.permute_factors(&cut.grouping())?;
    let left = cut.left_shape(v.shape());
    let right = cut.right_shape(v.shape());
    let (m, n) = (left.total(), right.total());
    let amps = grouped.amps();
    let mat = CMat::from_fn(m, n, |i, j| amps[i * n + j]);
    Opr::new(mat, left, right)
}

/// Inverse of [`vec_to_op`]: flattens `a` row-major and restores the factor
/// order of `shape`.
pub fn op_to_vec<T: Real>(a: &Opr<T>, cut: &Cut, shape: &Shape) -> Result<Ket<T>> {
    cut.check(shape)?;
    let left = cut.left_shape(shape);
    let right = cut.right_shape(shape);
    if a.mat().nrows() != left.total() || a.mat().ncols() != right.total() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} matrix does not match cut of {}",
            a.mat().nrows(),
            a.mat().ncols(),
            shape
        )));
    }
    let n = right.total();
    let mat = a.mat();
    let amps = crate::linalg::CVec::from_fn(left.total() * n, |k, _| mat[(k / n, k % n)]);
    let grouped = Ket::new(left.concat(&right), amps)?;
    grouped.permute_factors(&cut.grouping().inverse())
}

/// Permutation matrix `S_sigma` on `shape`; maps into `shape.permuted(sigma)`.
pub fn swap_operator<T: Real>(sigma: &Permutation, shape: &Shape) -> Result<Opr<T>> {
    if sigma.len() != shape.factors() {
        return Err(Error::InvalidPermutation(format!(
            "permutation of {} factors applied to shape {}",
            sigma.len(),
            shape
        )));
    }
    let out_shape = shape.permuted(sigma)?;
    let n = shape.total();
    let mut mat = CMat::zeros(n, n);
    for col in 0..n {
        let multi = shape.unravel(col);
        let o: Vec<usize> = (0..sigma.len()).map(|s| multi[sigma.get(s)]).collect();
        mat[(out_shape.ravel(&o), col)] = c1();
    }
    Opr::new(mat, out_shape, shape.clone())
}

/// Transposes `x` on exactly the factors listed in `subset` (0-based).
pub fn axis_transpose<T: Real>(x: &Opr<T>, subset: &[usize]) -> Result<Opr<T>> {
    let (rs, cs) = (x.row_shape(), x.col_shape());
    if rs.factors() != cs.factors() {
        return Err(Error::ShapeMismatch(format!(
            "row shape {rs} and column shape {cs} have different factor counts"
        )));
    }
    for &f in subset {
        if f >= rs.factors() {
            return Err(Error::ShapeMismatch(format!("factor {} out of range", f + 1)));
        }
        if rs.dim(f) != cs.dim(f) {
            return Err(Error::NonSquareFactor {
                factor: f + 1,
                rows: rs.dim(f),
                cols: cs.dim(f),
            });
        }
    }
    let src = x.mat();
    let mut out = CMat::zeros(src.nrows(), src.ncols());
    for r in 0..src.nrows() {
        let ri = rs.unravel(r);
        for c in 0..src.ncols() {
            let ci = cs.unravel(c);
            let (mut r2, mut c2) = (ri.clone(), ci);
            for &f in subset {
                std::mem::swap(&mut r2[f], &mut c2[f]);
            }
            out[(r, c)] = src[(rs.ravel(&r2), cs.ravel(&c2))];
        }
    }
    Opr::new(out, rs.clone(), cs.clone())
}
