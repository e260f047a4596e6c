//! Seeded random kets and operators.
//!
//! Every sampler is deterministic in its seed. The generator is ChaCha8, whose
//! stream is specified independently of platform, so outputs are bit-identical
//! across runs.

use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Ket, Opr, Shape};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::scalar::{cr, phase_of, Real, C};

pub type SeededRng = ChaCha8Rng;

/// Default rejection bound on the condition number of random invertible operators.
pub const DEFAULT_COND_BOUND: f64 = 1e6;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Complex number with independent standard normal parts.
pub fn gaussian<T: Real, R: Rng + ?Sized>(rng: &mut R) -> C<T> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(T::lit(re), T::lit(im))
}

pub fn gaussian_vec<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVec<T> {
    CVec::from_fn(n, |_, _| gaussian(rng))
}

pub fn gaussian_mat<T: Real, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat<T> {
    // fill row-major so the stream order does not depend on storage layout
    let mut m = CMat::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            m[(r, c)] = gaussian(rng);
        }
    }
    m
}

/// Unit vector with a unitarily invariant distribution.
pub fn haar_ket<T: Real, R: Rng + ?Sized>(shape: &Shape, rng: &mut R) -> Ket<T> {
    loop {
        let v = Ket::new(shape.clone(), gaussian_vec(shape.total(), rng)).expect("length matches");
        if let Some(u) = v.normalized() {
            return u;
        }
    }
}

/// Haar-distributed unitary matrix of size `n`.
pub fn haar_unitary_mat<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat<T> {
    let z: CMat<T> = gaussian_mat(n, n, rng);
    let qr = z.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut out = q;
    for j in 0..n {
        let ph = phase_of(r[(j, j)]);
        for i in 0..n {
            out[(i, j)] *= ph;
        }
    }
    out
}

pub fn haar_unitary<T: Real, R: Rng + ?Sized>(shape: &Shape, rng: &mut R) -> Opr<T> {
    Opr::square(haar_unitary_mat(shape.total(), rng), shape.clone()).expect("square")
}

pub fn gaussian_opr<T: Real, R: Rng + ?Sized>(rows: &Shape, cols: &Shape, rng: &mut R) -> Opr<T> {
    Opr::new(gaussian_mat(rows.total(), cols.total(), rng), rows.clone(), cols.clone()).expect("dims")
}

/// Normalized `sum_{i<k} a_i (x) b_i` with Gaussian factors; Schmidt rank is
/// exactly `k` almost surely.
pub fn sr_k_ket<T: Real, R: Rng + ?Sized>(shape: &Shape, k: usize, rng: &mut R) -> Result<Ket<T>> {
    if !shape.is_bipartite() {
        return Err(Error::InvalidShape(format!("sr_k_ket needs a bipartite shape, got {shape}")));
    }
    let (m, n) = (shape.dim(0), shape.dim(1));
    if k == 0 || k > m.min(n) {
        return Err(Error::KOutOfRange { k, min: 1, max: m.min(n) });
    }
    loop {
        let mut amps = CVec::zeros(m * n);
        for _ in 0..k {
            let a: CVec<T> = gaussian_vec(m, rng);
            let b: CVec<T> = gaussian_vec(n, rng);
            amps += linalg::kron_vec(&a, &b);
        }
        if let Some(v) = Ket::new(shape.clone(), amps)?.normalized() {
            return Ok(v);
        }
    }
}

/// Unit product state `v_1 (x) ... (x) v_p` with Haar factors.
pub fn product_ket<T: Real, R: Rng + ?Sized>(shape: &Shape, rng: &mut R) -> Ket<T> {
    product_factors(shape, rng)
        .into_iter()
        .reduce(|acc, f| acc.kron(&f))
        .expect("shape has at least one factor")
}

pub fn product_factors<T: Real, R: Rng + ?Sized>(shape: &Shape, rng: &mut R) -> Vec<Ket<T>> {
    shape
        .dims()
        .iter()
        .map(|&d| haar_ket(&Shape::flat(d).expect("d >= 1"), rng))
        .collect()
}

/// Gaussian square operator, resampled until its condition number is at most `bound`.
pub fn invertible_opr<T: Real, R: Rng + ?Sized>(shape: &Shape, bound: f64, rng: &mut R) -> Result<Opr<T>> {
    if !(bound >= 1.0) {
        return Err(Error::InvalidShape(format!("condition bound {bound} must be >= 1")));
    }
    for _ in 0..10_000 {
        let m = gaussian_mat(shape.total(), shape.total(), rng);
        if linalg::condition_number(&m) <= bound {
            return Opr::square(m, shape.clone());
        }
    }
    Err(Error::Inconclusive(format!(
        "no sample of size {} met condition bound {bound:e}",
        shape.total()
    )))
}

/// Haar local unitary `U_1 (x) ... (x) U_p` on `shape`.
pub fn local_unitary<T: Real, R: Rng + ?Sized>(shape: &Shape, rng: &mut R) -> Opr<T> {
    shape
        .dims()
        .iter()
        .map(|&d| haar_unitary::<T, R>(&Shape::flat(d).expect("d >= 1"), rng))
        .reduce(|acc, u| acc.kron(&u))
        .expect("nonempty")
}

/// What to draw in [`sample`].
#[derive(Clone, Debug, PartialEq)]
pub enum SampleKind {
    HaarKet { shape: Shape },
    HaarUnitary { shape: Shape },
    GaussianOpr { rows: Shape, cols: Shape },
    SrKKet { shape: Shape, k: usize },
    ProductMultipartiteKet { shape: Shape },
    InvertibleOpr { shape: Shape, cond_bound: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Sample<T: Real> {
    Ket(Ket<T>),
    Opr(Opr<T>),
}

impl<T: Real> Sample<T> {
    pub fn into_ket(self) -> Option<Ket<T>> {
        match self {
            Sample::Ket(k) => Some(k),
            Sample::Opr(_) => None,
        }
    }

    pub fn into_opr(self) -> Option<Opr<T>> {
        match self {
            Sample::Opr(o) => Some(o),
            Sample::Ket(_) => None,
        }
    }
}

pub fn sample<T: Real>(kind: &SampleKind, seed: u64) -> Result<Sample<T>> {
    let mut r = rng(seed);
    Ok(match kind {
        SampleKind::HaarKet { shape } => Sample::Ket(haar_ket(shape, &mut r)),
        SampleKind::HaarUnitary { shape } => Sample::Opr(haar_unitary(shape, &mut r)),
        SampleKind::GaussianOpr { rows, cols } => Sample::Opr(gaussian_opr(rows, cols, &mut r)),
        SampleKind::SrKKet { shape, k } => Sample::Ket(sr_k_ket(shape, *k, &mut r)?),
        SampleKind::ProductMultipartiteKet { shape } => Sample::Ket(product_ket(shape, &mut r)),
        SampleKind::InvertibleOpr { shape, cond_bound } => Sample::Opr(invertible_opr(shape, *cond_bound, &mut r)?),
    })
}

/// Haar-random unit vector without shape information.
pub fn random_unit_vec<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVec<T> {
    loop {
        let v: CVec<T> = gaussian_vec(n, rng);
        let nv = linalg::vec_norm(&v);
        if nv > T::zero() {
            return v * cr(T::one() / nv);
        }
    }
}
