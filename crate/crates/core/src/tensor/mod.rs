//! Tensor-product Hilbert spaces: shapes, kets, operators, swap operators,
//! partial transposes and the vector-operator isomorphism.
//!
//! Factor indices are 0-based in code and 1-based in every user-facing string
//! (`|1>, ..., |n>` and "factor 1" match the usual notation).
//!
//! # Vector-operator isomorphism
//!
//! `|a> (x) |b>` is identified with `|a> b^T`, which equals `|a> conj(<b|)`.
//! [`vec_to_op`] is therefore a plain row-major reshape without conjugation.
//! A consequence is that the right Schmidt vectors are the *conjugated*
//! right singular vectors of the reshaped matrix.

pub mod io;
mod ops;
pub mod sample;

pub use ops::{axis_transpose, op_to_vec, swap_operator, tensor_product, vec_to_op, TensorItem};

use nalgebra::ComplexField;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::scalar::{c0, c1, cr, Real, C};

/// Ordered factor dimensions `(n_1, ..., n_p)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape {
    dims: Vec<usize>,
}

impl Shape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidShape("shape needs at least one factor".into()));
        }
        if let Some(pos) = dims.iter().position(|&d| d == 0) {
            return Err(Error::InvalidShape(format!("factor {} has dimension 0", pos + 1)));
        }
        Ok(Shape { dims })
    }

    /// Single-factor shape of dimension `n`.
    pub fn flat(n: usize) -> Result<Self> {
        Self::new(vec![n])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of tensor factors `p`.
    pub fn factors(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self, f: usize) -> usize {
        self.dims[f]
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dims.len()];
        for f in (0..self.dims.len().saturating_sub(1)).rev() {
            s[f] = s[f + 1] * self.dims[f + 1];
        }
        s
    }

    /// Row-major multi-index of a flat index.
    pub fn unravel(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for f in (0..self.dims.len()).rev() {
            out[f] = idx % self.dims[f];
            idx /= self.dims[f];
        }
        out
    }

    pub fn ravel(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.dims).fold(0, |acc, (&i, &d)| acc * d + i)
    }

    pub fn concat(&self, other: &Shape) -> Shape {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Shape { dims }
    }

    /// Shape whose factor `s` is factor `sigma(s)` of `self`.
    pub fn permuted(&self, sigma: &Permutation) -> Result<Shape> {
        if sigma.len() != self.factors() {
            return Err(Error::InvalidPermutation(format!(
                "permutation acts on {} factors but shape has {}",
                sigma.len(),
                self.factors()
            )));
        }
        Ok(Shape {
            dims: (0..sigma.len()).map(|s| self.dims[sigma.get(s)]).collect(),
        })
    }

    pub fn is_bipartite(&self) -> bool {
        self.dims.len() == 2
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Bijection on `{0, ..., p-1}`.
///
/// For the swap operator, `S_sigma (v_1 (x) ... (x) v_p) = v_sigma(1) (x) ... (x) v_sigma(p)`:
/// output factor `s` carries input factor `sigma(s)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; map.len()];
        for &x in &map {
            if x >= map.len() || seen[x] {
                return Err(Error::InvalidPermutation(format!("{map:?} is not a bijection")));
            }
            seen[x] = true;
        }
        Ok(Permutation { map })
    }

    /// Builds from 1-based images, e.g. `[2, 3, 1]` for `1 -> 2 -> 3 -> 1`.
    pub fn from_one_based(images: &[usize]) -> Result<Self> {
        if images.iter().any(|&x| x == 0) {
            return Err(Error::InvalidPermutation("1-based images must be >= 1".into()));
        }
        Self::new(images.iter().map(|&x| x - 1).collect())
    }

    pub fn identity(p: usize) -> Self {
        Permutation { map: (0..p).collect() }
    }

    /// Transposition of factors `a` and `b` (0-based).
    pub fn transposition(p: usize, a: usize, b: usize) -> Self {
        let mut map: Vec<usize> = (0..p).collect();
        map.swap(a, b);
        Permutation { map }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.map.iter().map(|x| x + 1).collect()
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (i, &x) in self.map.iter().enumerate() {
            inv[x] = i;
        }
        Permutation { map: inv }
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &x)| i == x)
    }

    /// The permutation `rho` with `S_rho = S_self * S_rhs`, namely
    /// `rho(i) = rhs(self(i))`.
    pub fn swap_product(&self, rhs: &Permutation) -> Result<Self> {
        if self.len() != rhs.len() {
            return Err(Error::InvalidPermutation("size mismatch in composition".into()));
        }
        Ok(Permutation {
            map: self.map.iter().map(|&i| rhs.map[i]).collect(),
        })
    }
}

/// Bipartition of the factors of a shape. `left` lists the factors grouped on
/// the row side of the isomorphism, in increasing order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cut {
    left: Vec<usize>,
    right: Vec<usize>,
}

impl Cut {
    pub fn new(p: usize, left: &[usize]) -> Result<Self> {
        let mut l: Vec<usize> = left.to_vec();
        l.sort_unstable();
        l.dedup();
        if l.len() != left.len() {
            return Err(Error::InvalidCut("repeated factor in cut".into()));
        }
        if let Some(&bad) = l.iter().find(|&&f| f >= p) {
            return Err(Error::InvalidCut(format!("factor {} out of range 1..={p}", bad + 1)));
        }
        if l.is_empty() || l.len() == p {
            return Err(Error::InvalidCut("both sides of a cut must be nonempty".into()));
        }
        let right = (0..p).filter(|f| !l.contains(f)).collect();
        Ok(Cut { left: l, right })
    }

    /// The cut `{1} | {2}` of a bipartite shape.
    pub fn bipartite() -> Self {
        Cut {
            left: vec![0],
            right: vec![1],
        }
    }

    /// Single factor `f` against the rest.
    pub fn single(p: usize, f: usize) -> Result<Self> {
        Self::new(p, &[f])
    }

    pub fn left(&self) -> &[usize] {
        &self.left
    }

    pub fn right(&self) -> &[usize] {
        &self.right
    }

    pub fn factors(&self) -> usize {
        self.left.len() + self.right.len()
    }

    /// Permutation bringing the left group to the front.
    pub(crate) fn grouping(&self) -> Permutation {
        let mut map = self.left.clone();
        map.extend_from_slice(&self.right);
        Permutation { map }
    }

    pub fn left_shape(&self, shape: &Shape) -> Shape {
        Shape {
            dims: self.left.iter().map(|&f| shape.dim(f)).collect(),
        }
    }

    pub fn right_shape(&self, shape: &Shape) -> Shape {
        Shape {
            dims: self.right.iter().map(|&f| shape.dim(f)).collect(),
        }
    }

    pub(crate) fn check(&self, shape: &Shape) -> Result<()> {
        if self.factors() != shape.factors() {
            return Err(Error::InvalidCut(format!(
                "cut covers {} factors but shape {} has {}",
                self.factors(),
                shape,
                shape.factors()
            )));
        }
        Ok(())
    }
}

/// Complex amplitude vector over a factored space. Need not be normalized.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket<T: Real> {
    amps: CVec<T>,
    shape: Shape,
}

impl<T: Real> Ket<T> {
    pub fn new(shape: Shape, amps: CVec<T>) -> Result<Self> {
        if amps.len() != shape.total() {
            return Err(Error::ShapeMismatch(format!(
                "{} amplitudes for shape {} (expected {})",
                amps.len(),
                shape,
                shape.total()
            )));
        }
        Ok(Ket { amps, shape })
    }

    pub fn from_slice(dims: &[usize], amps: &[C<T>]) -> Result<Self> {
        Self::new(Shape::new(dims.to_vec())?, CVec::from_column_slice(amps))
    }

    pub fn zeros(shape: Shape) -> Self {
        let n = shape.total();
        Ket {
            amps: CVec::zeros(n),
            shape,
        }
    }

    /// Product basis state; `index` is 0-based per factor.
    pub fn basis(shape: Shape, index: &[usize]) -> Result<Self> {
        if index.len() != shape.factors() || index.iter().zip(shape.dims()).any(|(&i, &d)| i >= d) {
            return Err(Error::ShapeMismatch(format!("basis index {index:?} outside {shape}")));
        }
        let mut k = Self::zeros(shape);
        let pos = k.shape.ravel(index);
        k.amps[pos] = c1();
        Ok(k)
    }

    /// Unit vector in a single-factor space of dimension `n`.
    pub fn unit(n: usize, i: usize) -> Result<Self> {
        Self::basis(Shape::flat(n)?, &[i])
    }

    pub fn amps(&self) -> &CVec<T> {
        &self.amps
    }

    pub fn into_amps(self) -> CVec<T> {
        self.amps
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn norm(&self) -> T {
        linalg::vec_norm(&self.amps)
    }

    /// Unit vector in the same direction; `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        (n > T::zero()).then(|| self.scale(cr(T::one() / n)))
    }

    pub fn scale(&self, c: C<T>) -> Self {
        Ket {
            amps: &self.amps * c,
            shape: self.shape.clone(),
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Ket<T>) -> C<T> {
        linalg::inner(&self.amps, &other.amps)
    }

    pub fn add(&self, other: &Ket<T>) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(format!("{} + {}", self.shape, other.shape)));
        }
        Ok(Ket {
            amps: &self.amps + &other.amps,
            shape: self.shape.clone(),
        })
    }

    pub fn kron(&self, other: &Ket<T>) -> Self {
        Ket {
            amps: linalg::kron_vec(&self.amps, &other.amps),
            shape: self.shape.concat(&other.shape),
        }
    }

    /// Relabels the factor grouping without touching amplitudes.
    pub fn reshaped(&self, shape: Shape) -> Result<Self> {
        Self::new(shape, self.amps.clone())
    }

    /// `S_sigma |self>`: output factor `s` carries input factor `sigma(s)`.
    pub fn permute_factors(&self, sigma: &Permutation) -> Result<Self> {
        let out_shape = self.shape.permuted(sigma)?;
        let mut out = CVec::zeros(self.amps.len());
        for (idx, z) in self.amps.iter().enumerate() {
            let multi = self.shape.unravel(idx);
            let o: Vec<usize> = (0..sigma.len()).map(|s| multi[sigma.get(s)]).collect();
            out[out_shape.ravel(&o)] = *z;
        }
        Ok(Ket {
            amps: out,
            shape: out_shape,
        })
    }

    /// Conjugate (entrywise) in the same basis.
    pub fn conj(&self) -> Self {
        Ket {
            amps: self.amps.map(|z| z.conj()),
            shape: self.shape.clone(),
        }
    }

    /// `|self><other|` as an operator.
    pub fn outer(&self, other: &Ket<T>) -> Opr<T> {
        Opr {
            mat: &self.amps * other.amps.adjoint(),
            row_shape: self.shape.clone(),
            col_shape: other.shape.clone(),
        }
    }
}

/// Dense operator between factored spaces.
#[derive(Clone, Debug, PartialEq)]
pub struct Opr<T: Real> {
    mat: CMat<T>,
    row_shape: Shape,
    col_shape: Shape,
}

impl<T: Real> Opr<T> {
    pub fn new(mat: CMat<T>, row_shape: Shape, col_shape: Shape) -> Result<Self> {
        if mat.nrows() != row_shape.total() || mat.ncols() != col_shape.total() {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} matrix for shapes {} x {}",
                mat.nrows(),
                mat.ncols(),
                row_shape,
                col_shape
            )));
        }
        Ok(Opr {
            mat,
            row_shape,
            col_shape,
        })
    }

    /// Square operator on `shape`.
    pub fn square(mat: CMat<T>, shape: Shape) -> Result<Self> {
        Self::new(mat, shape.clone(), shape)
    }

    /// Square operator on a single factor of dimension `mat.nrows()`.
    pub fn flat(mat: CMat<T>) -> Result<Self> {
        let (r, c) = mat.shape();
        Self::new(mat, Shape::flat(r)?, Shape::flat(c)?)
    }

    pub fn identity(shape: Shape) -> Self {
        let n = shape.total();
        Opr {
            mat: CMat::identity(n, n),
            row_shape: shape.clone(),
            col_shape: shape,
        }
    }

    pub fn zeros(row_shape: Shape, col_shape: Shape) -> Self {
        Opr {
            mat: CMat::zeros(row_shape.total(), col_shape.total()),
            row_shape,
            col_shape,
        }
    }

    pub fn mat(&self) -> &CMat<T> {
        &self.mat
    }

    pub fn into_mat(self) -> CMat<T> {
        self.mat
    }

    pub fn row_shape(&self) -> &Shape {
        &self.row_shape
    }

    pub fn col_shape(&self) -> &Shape {
        &self.col_shape
    }

    pub fn is_square_shaped(&self) -> bool {
        self.row_shape == self.col_shape
    }

    pub fn apply(&self, v: &Ket<T>) -> Result<Ket<T>> {
        if v.shape().total() != self.col_shape.total() {
            return Err(Error::ShapeMismatch(format!(
                "operator on {} applied to ket of shape {}",
                self.col_shape,
                v.shape()
            )));
        }
        Ket::new(self.row_shape.clone(), &self.mat * v.amps())
    }

    /// `self * rhs`.
    pub fn compose(&self, rhs: &Opr<T>) -> Result<Self> {
        if self.col_shape.total() != rhs.row_shape.total() {
            return Err(Error::ShapeMismatch(format!(
                "cannot compose operator on {} with operator into {}",
                self.col_shape, rhs.row_shape
            )));
        }
        Ok(Opr {
            mat: &self.mat * &rhs.mat,
            row_shape: self.row_shape.clone(),
            col_shape: rhs.col_shape.clone(),
        })
    }

    pub fn adjoint(&self) -> Self {
        Opr {
            mat: self.mat.adjoint(),
            row_shape: self.col_shape.clone(),
            col_shape: self.row_shape.clone(),
        }
    }

    pub fn kron(&self, other: &Opr<T>) -> Self {
        Opr {
            mat: linalg::kron(&self.mat, &other.mat),
            row_shape: self.row_shape.concat(&other.row_shape),
            col_shape: self.col_shape.concat(&other.col_shape),
        }
    }

    pub fn scale(&self, c: C<T>) -> Self {
        Opr {
            mat: &self.mat * c,
            row_shape: self.row_shape.clone(),
            col_shape: self.col_shape.clone(),
        }
    }

    pub fn add(&self, other: &Opr<T>) -> Result<Self> {
        if self.row_shape != other.row_shape || self.col_shape != other.col_shape {
            return Err(Error::ShapeMismatch("operator sum with different shapes".into()));
        }
        Ok(Opr {
            mat: &self.mat + &other.mat,
            row_shape: self.row_shape.clone(),
            col_shape: self.col_shape.clone(),
        })
    }

    pub fn sub(&self, other: &Opr<T>) -> Result<Self> {
        self.add(&other.scale(cr(-T::one())))
    }

    pub fn frobenius_norm(&self) -> T {
        linalg::frobenius(&self.mat)
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> T {
        linalg::singular_values(&self.mat).first().copied().unwrap_or_else(T::zero)
    }

    pub fn trace(&self) -> C<T> {
        (0..self.mat.nrows().min(self.mat.ncols())).fold(c0(), |acc, i| acc + self.mat[(i, i)])
    }

    pub fn condition_number(&self) -> f64 {
        linalg::condition_number(&self.mat)
    }

    /// `||self^* self - I||_F`.
    pub fn unitarity_defect(&self) -> T {
        linalg::unitarity_defect(&self.mat)
    }

    /// Relabels the row and column factorizations.
    pub fn reshaped(&self, row_shape: Shape, col_shape: Shape) -> Result<Self> {
        Self::new(self.mat.clone(), row_shape, col_shape)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Opr<T>) -> T {
        self.mat
            .iter()
            .zip(other.mat.iter())
            .fold(T::zero(), |acc, (a, b)| acc.max((a - b).modulus()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_validation() {
        assert!(Shape::new(vec![]).is_err());
        assert!(Shape::new(vec![2, 0]).is_err());
        let s = Shape::new(vec![2, 3, 4]).unwrap();
        assert_eq!(s.total(), 24);
        assert_eq!(s.strides(), vec![12, 4, 1]);
        for i in 0..24 {
            assert_eq!(s.ravel(&s.unravel(i)), i);
        }
    }

    #[test]
    fn permutation_rejects_non_bijection() {
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![0, 2]).is_err());
        assert!(Permutation::from_one_based(&[2, 3, 1]).is_ok());
        let p = Permutation::from_one_based(&[2, 3, 1]).unwrap();
        assert_eq!(p.swap_product(&p.inverse()).unwrap(), Permutation::identity(3));
    }

    #[test]
    fn cut_validation() {
        assert!(Cut::new(2, &[]).is_err());
        assert!(Cut::new(2, &[0, 1]).is_err());
        assert!(Cut::new(2, &[2]).is_err());
        let c = Cut::new(3, &[2, 0]).unwrap();
        assert_eq!(c.left(), &[0, 2]);
        assert_eq!(c.right(), &[1]);
    }

    #[test]
    fn permute_factors_of_product_state() {
        // |1> (x) |2> (x) |1> on (2,2,2), sigma = 1->2->3->1
        let v = Ket::<f64>::basis(Shape::new(vec![2, 3, 2]).unwrap(), &[0, 1, 1]).unwrap();
        let sigma = Permutation::from_one_based(&[2, 3, 1]).unwrap();
        let w = v.permute_factors(&sigma).unwrap();
        assert_eq!(w.shape().dims(), &[3, 2, 2]);
        let expected = Ket::basis(Shape::new(vec![3, 2, 2]).unwrap(), &[1, 1, 0]).unwrap();
        assert_eq!(w, expected);
    }
}
