use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::scalar::{cr, Real};
use crate::tensor::{swap_operator, Opr, Permutation, Shape};

/// `L = sum_i coeffs[i] * left[i] (x) right[i]` with Frobenius-orthonormal factors.
#[derive(Clone, Debug)]
pub struct OperatorSchmidt<T: Real> {
    pub coeffs: Vec<T>,
    pub left: Vec<Opr<T>>,
    pub right: Vec<Opr<T>>,
}

impl<T: Real> OperatorSchmidt<T> {
    /// `c_2 / c_1`, or 0 with fewer than two terms.
    pub fn second_ratio(&self) -> T {
        match (self.coeffs.first(), self.coeffs.get(1)) {
            (Some(&a), Some(&b)) if a > T::zero() => b / a,
            _ => T::zero(),
        }
    }
}

/// Operator Schmidt decomposition via the SVD of the realigned matrix
/// `R[(i1, j1), (i2, j2)] = L[(i1, i2), (j1, j2)]`.
pub fn operator_schmidt_split<T: Real>(l: &Opr<T>) -> Result<OperatorSchmidt<T>> {
    let (rs, cs) = (l.row_shape(), l.col_shape());
    if !rs.is_bipartite() || !cs.is_bipartite() {
        return Err(Error::ShapeMismatch(format!(
            "operator Schmidt split needs bipartite row and column shapes, got {rs} -> {cs}"
        )));
    }
    let (r1, r2, c1, c2) = (rs.dim(0), rs.dim(1), cs.dim(0), cs.dim(1));
    let x = l.mat();
    let realigned = CMat::from_fn(r1 * c1, r2 * c2, |a, b| {
        let (i1, j1) = (a / c1, a % c1);
        let (i2, j2) = (b / c2, b % c2);
        x[(i1 * r2 + i2, j1 * c2 + j2)]
    });
    let d = linalg::svd(&realigned);
    let floor = d.s.first().copied().unwrap_or(T::zero())
        * T::default_epsilon()
        * T::lit((r1 * c1).max(r2 * c2) as f64);
    let keep = d.s.iter().take_while(|&&s| s > floor && s > T::zero()).count();
    let (s1, s2) = (Shape::flat(r1)?, Shape::flat(r2)?);
    let (t1, t2) = (Shape::flat(c1)?, Shape::flat(c2)?);
    let mut left = Vec::with_capacity(keep);
    let mut right = Vec::with_capacity(keep);
    for i in 0..keep {
        let u = d.left(i);
        let v = d.right_conj(i);
        left.push(Opr::new(CMat::from_fn(r1, c1, |a, b| u[a * c1 + b]), s1.clone(), t1.clone())?);
        right.push(Opr::new(CMat::from_fn(r2, c2, |a, b| v[a * c2 + b]), s2.clone(), t2.clone())?);
    }
    Ok(OperatorSchmidt {
        coeffs: d.s[..keep].to_vec(),
        left,
        right,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LocalVerdict {
    /// `L = P (x) Q`.
    Product,
    /// `L = S (P (x) Q)` with `S` the swap (requires `m = n`).
    SwapTimesProduct,
    Neither,
}

#[derive(Clone, Debug)]
pub struct LocalFormReport<T: Real> {
    pub verdict: LocalVerdict,
    /// Unit Frobenius norm, first nonzero entry real positive.
    pub p: Option<Opr<T>>,
    /// Carries the scale and phase of `L`.
    pub q: Option<Opr<T>>,
    /// `||L - reconstruction||_F / ||L||_F` for the claimed form.
    pub residual: T,
    pub operator_schmidt_coeffs: Vec<T>,
    /// Coefficients of `S L`, when `m = n`.
    pub swapped_coeffs: Option<Vec<T>>,
    /// Unitary factors `W, Y` with `L = W (x) Y` or `S (W (x) Y)`, when both are unitary.
    pub unitary_factors: Option<(Opr<T>, Opr<T>)>,
}

impl<T: Real> LocalFormReport<T> {
    pub fn is_local(&self) -> bool {
        self.verdict != LocalVerdict::Neither
    }

    pub fn is_local_unitary(&self) -> bool {
        self.unitary_factors.is_some()
    }

    /// Rebuilds `P (x) Q` or `S (P (x) Q)`.
    pub fn reconstruct(&self) -> Option<Opr<T>> {
        let (p, q) = (self.p.as_ref()?, self.q.as_ref()?);
        let pq = p.kron(q);
        let shape = Shape::new(vec![p.mat().nrows(), q.mat().nrows()]).ok()?;
        let pq = pq.reshaped(shape.clone(), shape.clone()).ok()?;
        match self.verdict {
            LocalVerdict::Product => Some(pq),
            LocalVerdict::SwapTimesProduct => swap(&shape).ok()?.compose(&pq).ok(),
            LocalVerdict::Neither => None,
        }
    }
}

fn swap<T: Real>(shape: &Shape) -> Result<Opr<T>> {
    swap_operator(&Permutation::transposition(2, 0, 1), shape)
}

/// Splits a rank-one operator Schmidt term into normalized `P` and scaled `Q`.
fn factors<T: Real>(split: &OperatorSchmidt<T>) -> (Opr<T>, Opr<T>) {
    let mut p = split.left[0].clone().into_mat();
    let ph = linalg::fix_phase(&mut p);
    let q = split.right[0].scale(ph * cr(split.coeffs[0]));
    let p = Opr::flat(p).expect("square factor");
    (p, q)
}

/// Decides whether `L` on `(m, n)` is `P (x) Q`, or `S (P (x) Q)` when `m = n`,
/// using the realignment rank with relative threshold `tol`.
pub fn classify_local_form<T: Real>(l: &Opr<T>, tol: f64) -> Result<LocalFormReport<T>> {
    let shape = crate::norms::bipartite_square(l)?;
    let split = operator_schmidt_split(l)?;
    let norm = l.frobenius_norm();
    let coeffs = split.coeffs.clone();
    let tol_t = T::lit(tol);
    let mut report = LocalFormReport {
        verdict: LocalVerdict::Neither,
        p: None,
        q: None,
        residual: T::one(),
        operator_schmidt_coeffs: coeffs,
        swapped_coeffs: None,
        unitary_factors: None,
    };
    if norm <= T::zero() {
        return Ok(report);
    }
    let mut found = None;
    if split.second_ratio() <= tol_t {
        found = Some((LocalVerdict::Product, factors(&split)));
    } else if shape.dim(0) == shape.dim(1) {
        let sl = swap::<T>(&shape)?.compose(l)?;
        let ssplit = operator_schmidt_split(&sl)?;
        report.swapped_coeffs = Some(ssplit.coeffs.clone());
        if ssplit.second_ratio() <= tol_t {
            found = Some((LocalVerdict::SwapTimesProduct, factors(&ssplit)));
        }
    }
    let Some((verdict, (p, q))) = found else {
        return Ok(report);
    };
    report.verdict = verdict;
    report.p = Some(p.clone());
    report.q = Some(q.clone());
    let rec = report.reconstruct().expect("factors present");
    report.residual = linalg::frobenius(&(l.mat() - rec.mat())) / norm;
    let sm = T::lit((shape.dim(0) as f64).sqrt());
    let w = p.scale(cr(sm));
    let y = q.scale(cr(T::one() / sm));
    if w.unitarity_defect() <= tol_t && y.unitarity_defect() <= tol_t {
        report.unitary_factors = Some((w, y));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::sample::{gaussian_opr, haar_unitary, invertible_opr, rng};
    use nalgebra::Complex;

    fn sh(d: &[usize]) -> Shape {
        Shape::new(d.to_vec()).unwrap()
    }

    fn mat2(e: [f64; 4]) -> Opr<f64> {
        Opr::flat(CMat::from_fn(2, 2, |i, j| Complex::new(e[i * 2 + j], 0.0))).unwrap()
    }

    fn local(a: &Opr<f64>, b: &Opr<f64>) -> Opr<f64> {
        let s = sh(&[a.mat().nrows(), b.mat().nrows()]);
        a.kron(b).reshaped(s.clone(), s).unwrap()
    }

    fn cnot() -> Opr<f64> {
        let id = mat2([1.0, 0.0, 0.0, 1.0]);
        let x = mat2([0.0, 1.0, 1.0, 0.0]);
        local(&mat2([1.0, 0.0, 0.0, 0.0]), &id)
            .add(&local(&mat2([0.0, 0.0, 0.0, 1.0]), &x))
            .unwrap()
    }

    /// Direct realignment: entries of the 4x4 matrix rearranged by hand.
    fn realign_oracle(l: &Opr<f64>) -> Vec<f64> {
        let mut r = CMat::<f64>::zeros(4, 4);
        for i1 in 0..2 {
            for i2 in 0..2 {
                for j1 in 0..2 {
                    for j2 in 0..2 {
                        r[(2 * i1 + j1, 2 * i2 + j2)] = l.mat()[(2 * i1 + i2, 2 * j1 + j2)];
                    }
                }
            }
        }
        let mut s: Vec<f64> = r.singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap());
        s
    }

    #[test]
    fn elementary_tensor_has_one_coefficient() {
        let mut g = rng(1);
        let a = gaussian_opr::<f64, _>(&sh(&[2]), &sh(&[2]), &mut g);
        let b = gaussian_opr::<f64, _>(&sh(&[3]), &sh(&[3]), &mut g);
        let split = operator_schmidt_split(&local(&a, &b)).unwrap();
        assert!(split.second_ratio() < 1e-14);
        assert!((split.coeffs[0] - a.frobenius_norm() * b.frobenius_norm()).abs() < 1e-12);
    }

    #[test]
    fn cnot_and_swap_coefficients_match_oracle() {
        let c = cnot();
        let split = operator_schmidt_split(&c).unwrap();
        assert_eq!(split.coeffs.len(), 2);
        for x in &split.coeffs {
            assert!((x - 2f64.sqrt()).abs() < 1e-12);
        }
        let oracle = realign_oracle(&c);
        assert!((oracle[0] - 2f64.sqrt()).abs() < 1e-12 && oracle[2] < 1e-12);

        let s = swap::<f64>(&sh(&[2, 2])).unwrap();
        let split = operator_schmidt_split(&s).unwrap();
        assert_eq!(split.coeffs.len(), 4);
        for (x, o) in split.coeffs.iter().zip(realign_oracle(&s)) {
            assert!((x - 1.0).abs() < 1e-12 && (o - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn split_reconstructs() {
        let s = sh(&[2, 3]);
        let l = gaussian_opr::<f64, _>(&s, &s, &mut rng(2));
        let split = operator_schmidt_split(&l).unwrap();
        let mut acc = CMat::zeros(6, 6);
        for i in 0..split.coeffs.len() {
            acc += linalg::kron(split.left[i].mat(), split.right[i].mat()) * cr(split.coeffs[i]);
        }
        assert!(linalg::frobenius(&(acc - l.mat())) < 1e-10);
    }

    #[test]
    fn hadamard_times_z_is_product() {
        let h = mat2([1.0, 1.0, 1.0, -1.0]).scale(cr(0.5f64.sqrt()));
        let z = mat2([1.0, 0.0, 0.0, -1.0]);
        let r = classify_local_form(&local(&h, &z), 1e-7).unwrap();
        assert_eq!(r.verdict, LocalVerdict::Product);
        assert!(r.residual <= 1e-12);
        assert!(r.is_local_unitary());
        let p = r.p.unwrap();
        assert!((p.frobenius_norm() - 1.0).abs() < 1e-14);
        assert!(p.mat()[(0, 0)].im.abs() < 1e-15 && p.mat()[(0, 0)].re > 0.0);
    }

    #[test]
    fn swap_times_product_recovers_factors() {
        let s = sh(&[3]);
        let mut g = rng(3);
        let a = invertible_opr::<f64, _>(&s, 1e3, &mut g).unwrap();
        let b = invertible_opr::<f64, _>(&s, 1e3, &mut g).unwrap();
        let l = swap::<f64>(&sh(&[3, 3])).unwrap().compose(&local(&a, &b)).unwrap();
        let r = classify_local_form(&l, 1e-7).unwrap();
        assert_eq!(r.verdict, LocalVerdict::SwapTimesProduct);
        assert!(r.residual <= 1e-12);
        // P is A up to a scalar
        let p = r.p.unwrap();
        let ratio = a.mat()[(0, 0)] / p.mat()[(0, 0)];
        assert!((a.mat() - p.mat() * ratio).norm() < 1e-10);
        assert!(!r.unitary_factors.is_some());
    }

    #[test]
    fn cnot_is_neither() {
        let r = classify_local_form(&cnot(), 1e-7).unwrap();
        assert_eq!(r.verdict, LocalVerdict::Neither);
        // SWAP CNOT = E11 (x) E11 + E21 (x) E12 + E12 (x) E22 + E22 (x) E21
        let swapped = r.swapped_coeffs.unwrap();
        assert_eq!(swapped.len(), 4);
        assert!(swapped.iter().all(|c| (c - 1.0).abs() < 1e-12));
    }

    #[test]
    fn local_unitary_factors_are_unitary() {
        let mut g = rng(4);
        let u = haar_unitary::<f64, _>(&sh(&[2]), &mut g);
        let v = haar_unitary::<f64, _>(&sh(&[3]), &mut g);
        let l = local(&u, &v).scale(Complex::new(0.0, 1.0));
        let r = classify_local_form(&l, 1e-7).unwrap();
        let (w, y) = r.unitary_factors.clone().unwrap();
        assert!(w.unitarity_defect() < 1e-12 && y.unitarity_defect() < 1e-12);
        assert!(local(&w, &y).max_abs_diff(&l) < 1e-12);
    }
}
