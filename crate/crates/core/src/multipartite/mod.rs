//! Multipartite product states, the separable-sum test, the geometric measure
//! of entanglement and recovery of `S_sigma (P_1 (x) ... (x) P_p)` forms.

mod gme;
mod recover;

pub use gme::{gme, gme_invariance_check, GmeInvarianceRecord, GmeOptions, GmeResult};
pub use recover::{
    find_entangling_input, multipartite_probes, recover_local_form_multipartite, EntanglingInput, RecoverOptions,
    RecoverStatus, RecoveredForm,
};

use nalgebra::ComplexField;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CVec};
use crate::norms::schmidt_decompose;
use crate::scalar::{c0, c1, cr, Real};
use crate::tensor::{Cut, Ket, Shape};

/// Default relative threshold for product tests and the parallel relation.
pub const DEFAULT_PRODUCT_TOL: f64 = 1e-8;

/// One ket per party; their tensor product is a multipartite ket.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorList<T: Real> {
    factors: Vec<CVec<T>>,
}

impl<T: Real> FactorList<T> {
    pub fn new(factors: Vec<CVec<T>>) -> Result<Self> {
        if factors.is_empty() || factors.iter().any(|f| f.is_empty()) {
            return Err(Error::InvalidShape("factor list needs nonempty factors".into()));
        }
        Ok(FactorList { factors })
    }

    pub fn from_kets(kets: &[Ket<T>]) -> Result<Self> {
        Self::new(kets.iter().map(|k| k.amps().clone()).collect())
    }

    pub fn factors(&self) -> &[CVec<T>] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn shape(&self) -> Shape {
        Shape::new(self.factors.iter().map(|f| f.len()).collect()).expect("nonempty factors")
    }

    /// `|f_1> (x) ... (x) |f_p>` on [`FactorList::shape`].
    pub fn product(&self) -> Ket<T> {
        let amps = self.factors[1..]
            .iter()
            .fold(self.factors[0].clone(), |acc, f| linalg::kron_vec(&acc, f));
        Ket::new(self.shape(), amps).expect("length matches")
    }
}

/// `1 - |<a|b>| / (||a|| ||b||)`; zero when either side vanishes.
pub fn parallel_defect<T: Real>(a: &CVec<T>, b: &CVec<T>) -> T {
    let (na, nb) = (linalg::vec_norm(a), linalg::vec_norm(b));
    if na <= T::zero() || nb <= T::zero() {
        return T::zero();
    }
    (T::one() - linalg::inner(a, b).modulus() / (na * nb)).max(T::zero())
}

/// `sum_idx v[idx] prod_{j != skip} conj(f_j[idx_j])`, a vector on party `skip`.
pub(crate) fn contract_except<T: Real>(v: &Ket<T>, factors: &[CVec<T>], skip: usize) -> CVec<T> {
    let shape = v.shape();
    let mut out = CVec::zeros(shape.dim(skip));
    for (flat, amp) in v.amps().iter().enumerate() {
        if *amp == c0() {
            continue;
        }
        let multi = shape.unravel(flat);
        let mut w = c1::<T>();
        for (j, f) in factors.iter().enumerate() {
            if j != skip {
                w *= f[multi[j]].conj();
            }
        }
        out[multi[skip]] += *amp * w;
    }
    out
}

/// Largest relative second Schmidt coefficient over the single-party cuts.
pub fn product_leak<T: Real>(v: &Ket<T>) -> Result<T> {
    let p = v.shape().factors();
    let mut worst = T::zero();
    for i in 0..p {
        let dec = schmidt_decompose(v, &Cut::single(p, i)?)?;
        if let (Some(&a), Some(&b)) = (dec.coeffs.first(), dec.coeffs.get(1)) {
            if a > T::zero() {
                worst = worst.max(b / a);
            }
        }
    }
    Ok(worst)
}

/// Whether `v` is a product state across all parties, with the dominant
/// single-party factors when it is. The global scalar is attached to the
/// first factor, so the factors reconstruct `v` exactly.
pub fn is_product_state<T: Real>(v: &Ket<T>, tol: f64) -> Result<(bool, Option<FactorList<T>>)> {
    if v.norm() <= T::zero() {
        return Err(Error::ZeroVector);
    }
    let p = v.shape().factors();
    let mut factors = Vec::with_capacity(p);
    let mut product = true;
    for i in 0..p {
        let dec = schmidt_decompose(v, &Cut::single(p, i)?)?;
        let c = &dec.coeffs;
        if c.len() > 1 && c[1] > T::lit(tol) * c[0] {
            product = false;
        }
        let mut f = dec.left[0].amps().clone();
        linalg::vec_fix_phase(&mut f);
        factors.push(f);
    }
    if !product {
        return Ok((false, None));
    }
    let unit = FactorList::new(factors.clone())?;
    let scalar = unit.product().inner(v);
    factors[0] *= scalar;
    Ok((true, Some(FactorList::new(factors)?)))
}

/// Outcome of comparing two product states and their sum.
#[derive(Clone, Debug, Serialize)]
pub struct SeparableSumRecord {
    /// Parties whose factors are not parallel.
    pub differ_count: usize,
    pub sum_is_separable: bool,
    /// `sum_is_separable == (differ_count <= 1)`.
    pub lemma_holds: bool,
    /// Largest relative second Schmidt coefficient of `a + b` over single-party cuts.
    pub sum_leak: f64,
}

/// Counts non-parallel parties of `a` and `b` and tests `a + b` for
/// separability independently.
pub fn separable_sum_test<T: Real>(a: &FactorList<T>, b: &FactorList<T>, tol: f64) -> Result<SeparableSumRecord> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch(format!("factor lists on {} and {}", a.shape(), b.shape())));
    }
    if a.factors.iter().chain(&b.factors).any(|f| linalg::vec_norm(f) <= T::zero()) {
        return Err(Error::ZeroVector);
    }
    let differ_count = a
        .factors
        .iter()
        .zip(&b.factors)
        .filter(|(x, y)| parallel_defect(x, y) > T::lit(tol))
        .count();
    let (va, vb) = (a.product(), b.product());
    let sum = va.add(&vb)?;
    let scale = va.norm() + vb.norm();
    if sum.norm() <= scale * T::default_epsilon() * T::lit(100.0) {
        return Err(Error::SumVanishes);
    }
    let sum_leak = product_leak(&sum)?;
    let (sum_is_separable, _) = is_product_state(&sum, tol)?;
    Ok(SeparableSumRecord {
        differ_count,
        sum_is_separable,
        lemma_holds: sum_is_separable == (differ_count <= 1),
        sum_leak: sum_leak.as_f64(),
    })
}

/// Normalizes `v` to a unit column, or `None` at zero.
pub(crate) fn unit_vec<T: Real>(v: &CVec<T>) -> Option<CVec<T>> {
    let n = linalg::vec_norm(v);
    (n > T::zero()).then(|| v * cr(T::one() / n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::sample::{product_factors, random_unit_vec, rng};
    use nalgebra::Complex;

    fn sh(d: &[usize]) -> Shape {
        Shape::new(d.to_vec()).unwrap()
    }

    fn ket(dims: &[usize], amps: &[f64]) -> Ket<f64> {
        let a: Vec<Complex<f64>> = amps.iter().map(|&x| Complex::new(x, 0.0)).collect();
        Ket::from_slice(dims, &a).unwrap()
    }

    #[test]
    fn random_product_state_is_recovered() {
        let shape = sh(&[2, 2, 3]);
        let f: Vec<Ket<f64>> = product_factors(&shape, &mut rng(1));
        let list = FactorList::from_kets(&f).unwrap();
        let v = list.product().scale(Complex::new(0.3, -1.2));
        let (ok, got) = is_product_state(&v, 1e-8).unwrap();
        assert!(ok);
        let got = got.unwrap();
        assert!((got.product().amps() - v.amps()).norm() < 1e-12);
        for (a, b) in got.factors().iter().zip(list.factors()) {
            assert!(parallel_defect(a, b) < 1e-12);
        }
    }

    #[test]
    fn ghz_and_bell_are_entangled() {
        let h = 0.5f64.sqrt();
        let mut ghz = vec![0.0; 8];
        ghz[0] = h;
        ghz[7] = h;
        assert!(!is_product_state(&ket(&[2, 2, 2], &ghz), 1e-8).unwrap().0);
        // Bell (x) |1>
        let mut bell = vec![0.0; 8];
        bell[0] = h;
        bell[6] = h;
        let v = ket(&[2, 2, 2], &bell);
        assert!(!is_product_state(&v, 1e-8).unwrap().0);
        let dec = schmidt_decompose(&v, &Cut::single(3, 0).unwrap()).unwrap();
        assert_eq!(dec.rank(1e-8), 2);
        let dec = schmidt_decompose(&v, &Cut::single(3, 2).unwrap()).unwrap();
        assert_eq!(dec.rank(1e-8), 1);
    }

    #[test]
    fn zero_vector_rejected() {
        assert!(matches!(is_product_state(&Ket::<f64>::zeros(sh(&[2, 2])), 1e-8), Err(Error::ZeroVector)));
    }

    fn orth(v: &CVec<f64>, g: &mut crate::tensor::sample::SeededRng) -> CVec<f64> {
        let r: CVec<f64> = random_unit_vec(v.len(), g);
        let w = &r - v * linalg::inner(v, &r);
        unit_vec(&w).unwrap()
    }

    #[test]
    fn separable_sum_examples() {
        let shape = sh(&[2, 2, 3]);
        let mut g = rng(9);
        let f: Vec<Ket<f64>> = product_factors(&shape, &mut g);
        let a = FactorList::from_kets(&f).unwrap();
        let (x, y, z) = (a.factors()[0].clone(), a.factors()[1].clone(), a.factors()[2].clone());
        let y2 = orth(&y, &mut g);
        let x2 = orth(&x, &mut g);

        let b = FactorList::new(vec![x.clone(), y2.clone(), z.clone()]).unwrap();
        let r = separable_sum_test(&a, &b, 1e-8).unwrap();
        assert_eq!(r.differ_count, 1);
        assert!(r.sum_is_separable && r.lemma_holds);

        let b = FactorList::new(vec![x2, y2, z]).unwrap();
        let r = separable_sum_test(&a, &b, 1e-8).unwrap();
        assert_eq!(r.differ_count, 2);
        assert!(!r.sum_is_separable && r.lemma_holds);

        let r = separable_sum_test(&a, &a, 1e-8).unwrap();
        assert_eq!(r.differ_count, 0);
        assert!(r.sum_is_separable && r.lemma_holds);
    }

    #[test]
    fn vanishing_sum_signalled() {
        let a = FactorList::new(vec![CVec::from_element(2, c1::<f64>()), CVec::from_element(2, c1())]).unwrap();
        let b = FactorList::new(vec![CVec::from_element(2, -c1::<f64>()), CVec::from_element(2, c1())]).unwrap();
        assert!(matches!(separable_sum_test(&a, &b, 1e-8), Err(Error::SumVanishes)));
    }

    #[test]
    fn contraction_matches_overlap() {
        let shape = sh(&[2, 3, 2]);
        let mut g = rng(4);
        let v: Ket<f64> = crate::tensor::sample::haar_ket(&shape, &mut g);
        let f: Vec<CVec<f64>> = shape.dims().iter().map(|&d| random_unit_vec(d, &mut g)).collect();
        let w = FactorList::new(f.clone()).unwrap().product();
        for skip in 0..3 {
            let c = contract_except(&v, &f, skip);
            let full = linalg::inner(&f[skip], &c);
            assert!((full - w.inner(&v)).norm() < 1e-14);
        }
    }
}
