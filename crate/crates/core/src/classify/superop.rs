//! Linear maps on operators, stored as matrices on row-major vectorizations.
//!
//! With `vec(X)[i * D + j] = X[i, j]` the map `X -> A X B` has matrix
//! `A (x) B^T`, and the Choi matrix is `C = sum_ij E_ij (x) Phi(E_ij)`.

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::scalar::{c1, Real};
use crate::tensor::io::{RawSuper, SuperKind};
use crate::tensor::{Opr, Shape};

/// A linear map on operators over the bipartite space `(m, n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperOp<T: Real> {
    mat: CMat<T>,
    shape: Shape,
}

/// Flat dimension `D = m n`.
fn side(shape: &Shape) -> usize {
    shape.total()
}

impl<T: Real> SuperOp<T> {
    /// Wraps a `D^2 x D^2` matrix acting on `vec(X)`.
    pub fn new(mat: CMat<T>, shape: Shape) -> Result<Self> {
        let d2 = side(&shape).pow(2);
        if mat.nrows() != d2 || mat.ncols() != d2 {
            return Err(Error::ShapeMismatch(format!(
                "superoperator on {shape} needs a {d2}x{d2} matrix, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        Ok(SuperOp { mat, shape })
    }

    /// Tabulates `f` on the matrix units `E_ij`.
    pub fn from_fn(shape: Shape, f: impl Fn(&Opr<T>) -> Opr<T>) -> Result<Self> {
        let d = side(&shape);
        let mut mat = CMat::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                let mut m = CMat::zeros(d, d);
                m[(i, j)] = c1();
                let e = Opr::square(m, shape.clone())?;
                let img = f(&e);
                if img.mat().nrows() != d || img.mat().ncols() != d {
                    return Err(Error::ShapeMismatch("map changes the operator size".into()));
                }
                for a in 0..d {
                    for b in 0..d {
                        mat[(a * d + b, i * d + j)] = img.mat()[(a, b)];
                    }
                }
            }
        }
        Ok(SuperOp { mat, shape })
    }

    pub fn identity(shape: Shape) -> Self {
        let d = side(&shape);
        SuperOp {
            mat: CMat::identity(d * d, d * d),
            shape,
        }
    }

    /// `X -> A X B`.
    pub fn sandwich(a: &Opr<T>, b: &Opr<T>) -> Result<Self> {
        let shape = a.row_shape().clone();
        for o in [a, b] {
            if o.row_shape() != &shape || o.col_shape() != &shape {
                return Err(Error::ShapeMismatch("sandwich factors must act on one common space".into()));
            }
        }
        Ok(SuperOp {
            mat: linalg::kron(a.mat(), &b.mat().transpose()),
            shape,
        })
    }

    /// `X -> L X L^*`.
    pub fn conjugation(l: &Opr<T>) -> Result<Self> {
        Self::sandwich(l, &l.adjoint())
    }

    /// `X -> sum_i A_i X A_i^*`.
    pub fn from_kraus(ops: &[Opr<T>]) -> Result<Self> {
        let first = ops.first().ok_or_else(|| Error::InvalidShape("empty Kraus set".into()))?;
        let mut acc = Self::conjugation(first)?;
        for a in &ops[1..] {
            acc.mat += Self::conjugation(a)?.mat;
        }
        Ok(acc)
    }

    /// Permutes the four index slots `[r1, c1, r2, c2]` of `X` viewed as a
    /// tensor: slot `s` of the output takes slot `perm[s]` of the input.
    /// Valid when every moved slot keeps its dimension.
    pub fn slot_permutation(shape: Shape, perm: [usize; 4]) -> Result<Self> {
        if !shape.is_bipartite() {
            return Err(Error::InvalidShape(format!("expected (m,n), got {shape}")));
        }
        let (m, n) = (shape.dim(0), shape.dim(1));
        let dims = [m, m, n, n];
        let mut seen = [false; 4];
        for s in 0..4 {
            if perm[s] > 3 || seen[perm[s]] || dims[perm[s]] != dims[s] {
                return Err(Error::InvalidPermutation(format!("slot map {perm:?} invalid for {shape}")));
            }
            seen[perm[s]] = true;
        }
        let d = m * n;
        let mut mat = CMat::zeros(d * d, d * d);
        // input multi-index x = [r1, c1, r2, c2]; X[(r1 r2), (c1 c2)]
        for ra in 0..m {
            for ca in 0..m {
                for rb in 0..n {
                    for cb in 0..n {
                        let x = [ra, ca, rb, cb];
                        let y: Vec<usize> = (0..4).map(|s| x[perm[s]]).collect();
                        let src = (ra * n + rb) * d + (ca * n + cb);
                        let dst = (y[0] * n + y[2]) * d + (y[1] * n + y[3]);
                        mat[(dst, src)] = c1();
                    }
                }
            }
        }
        Ok(SuperOp { mat, shape })
    }

    /// Full transpose `X -> X^T`.
    pub fn transpose(shape: Shape) -> Result<Self> {
        Self::slot_permutation(shape, TRANSPOSE)
    }

    /// Partial transpose on the second factor.
    pub fn partial_transpose(shape: Shape) -> Result<Self> {
        Self::slot_permutation(shape, PARTIAL_TRANSPOSE)
    }

    /// `X -> tr(X) I / D`.
    pub fn completely_depolarizing(shape: Shape) -> Self {
        let d = side(&shape);
        let mut mat = CMat::zeros(d * d, d * d);
        let w = crate::scalar::cr(T::one() / T::lit(d as f64));
        for a in 0..d {
            for i in 0..d {
                mat[(a * d + a, i * d + i)] = w;
            }
        }
        SuperOp { mat, shape }
    }

    pub fn mat(&self) -> &CMat<T> {
        &self.mat
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// `D = m n`.
    pub fn dim(&self) -> usize {
        side(&self.shape)
    }

    pub fn apply(&self, x: &Opr<T>) -> Result<Opr<T>> {
        let d = self.dim();
        if x.mat().nrows() != d || x.mat().ncols() != d {
            return Err(Error::ShapeMismatch(format!("operator must be {d}x{d}")));
        }
        let v = crate::linalg::CVec::from_fn(d * d, |r, _| x.mat()[(r / d, r % d)]);
        let w = &self.mat * v;
        Opr::square(CMat::from_fn(d, d, |i, j| w[i * d + j]), self.shape.clone())
    }

    /// `self` after `rhs`.
    pub fn compose(&self, rhs: &SuperOp<T>) -> Result<Self> {
        if self.shape != rhs.shape {
            return Err(Error::ShapeMismatch("superoperators on different spaces".into()));
        }
        Ok(SuperOp {
            mat: &self.mat * &rhs.mat,
            shape: self.shape.clone(),
        })
    }

    /// The superoperator matrix as an operator on `(D, D) -> (D, D)`, whose
    /// operator Schmidt decomposition splits `Phi = sum_i (X -> A_i X B_i)`.
    pub fn as_opr(&self) -> Opr<T> {
        let d = self.dim();
        let s = Shape::new(vec![d, d]).expect("d >= 1");
        Opr::square(self.mat.clone(), s).expect("square")
    }

    /// Choi matrix `C[(i, a), (j, b)] = Phi(E_ij)[a, b]`.
    pub fn choi(&self) -> CMat<T> {
        let d = self.dim();
        let mut c = CMat::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                for a in 0..d {
                    for b in 0..d {
                        c[(i * d + a, j * d + b)] = self.mat[(a * d + b, i * d + j)];
                    }
                }
            }
        }
        c
    }

    pub fn from_choi(choi: &CMat<T>, shape: Shape) -> Result<Self> {
        let d = side(&shape);
        if choi.nrows() != d * d || choi.ncols() != d * d {
            return Err(Error::ShapeMismatch(format!("Choi matrix on {shape} must be {0}x{0}", d * d)));
        }
        let mut mat = CMat::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                for a in 0..d {
                    for b in 0..d {
                        mat[(a * d + b, i * d + j)] = choi[(i * d + a, j * d + b)];
                    }
                }
            }
        }
        Ok(SuperOp { mat, shape })
    }

    /// Builds from a file payload of either kind.
    pub fn from_raw(raw: &RawSuper<T>) -> Result<Self> {
        let shape = Shape::new(raw.dims.to_vec())?;
        match raw.kind {
            SuperKind::Superop => Self::new(raw.mat.clone(), shape),
            SuperKind::Choi => Self::from_choi(&raw.mat, shape),
        }
    }

    pub fn to_raw(&self, kind: SuperKind) -> RawSuper<T> {
        RawSuper {
            kind,
            dims: [self.shape.dim(0), self.shape.dim(1)],
            mat: match kind {
                SuperKind::Superop => self.mat.clone(),
                SuperKind::Choi => self.choi(),
            },
        }
    }

    /// `||[tr Phi(E_ij)] - I||_F`, which equals `||sum A_i^* A_i - I||_F` for any Kraus form.
    pub fn trace_preservation_defect(&self) -> T {
        let d = self.dim();
        let mut g = CMat::<T>::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let mut t = crate::scalar::c0();
                for a in 0..d {
                    t += self.mat[(a * d + a, i * d + j)];
                }
                g[(i, j)] = t;
            }
        }
        linalg::frobenius(&(g - CMat::identity(d, d)))
    }

    /// `||M^* M - I||_F`: zero iff the map preserves the Frobenius norm.
    pub fn frobenius_isometry_defect(&self) -> T {
        linalg::unitarity_defect(&self.mat)
    }

    pub fn condition_number(&self) -> f64 {
        linalg::condition_number(&self.mat)
    }
}

/// Slot maps on `[r1, c1, r2, c2]`.
pub const IDENTITY_SLOTS: [usize; 4] = [0, 1, 2, 3];
pub const TRANSPOSE: [usize; 4] = [1, 0, 3, 2];
pub const PARTIAL_TRANSPOSE: [usize; 4] = [0, 1, 3, 2];
pub const TRANSPOSE_THEN_PARTIAL: [usize; 4] = [1, 0, 2, 3];
