//! Schmidt decomposition, Schmidt rank, and the Schmidt-rank-`k` norms.
//!
//! For a bipartite ket `v` with Schmidt coefficients `a_1 >= a_2 >= ...` the
//! vector norm is `||v||_{s(k)} = sqrt(a_1^2 + ... + a_k^2)`. Its dual on
//! operators is
//!
//! ```text
//! ||X||_{S(k)} = sup { |<w|X|y>| : ||w|| = ||y|| = 1, SR(w), SR(y) <= k }
//! ```
//!
//! which has no closed form and is estimated from below by a multistart
//! see-saw ([`operator_s_norm`]).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::scalar::{cr, Real};
use crate::tensor::sample::{self, rng};
use crate::tensor::{op_to_vec, vec_to_op, Cut, Ket, Opr, Shape};

/// Relative threshold on Schmidt coefficients used when none is given.
pub const DEFAULT_SCHMIDT_TOL: f64 = 1e-8;

/// `v = sum_i coeffs[i] * left[i] (x) right[i]` across a cut.
#[derive(Clone, Debug)]
pub struct SchmidtDecomposition<T: Real> {
    pub coeffs: Vec<T>,
    pub left: Vec<Ket<T>>,
    pub right: Vec<Ket<T>>,
    pub cut: Cut,
}

impl<T: Real> SchmidtDecomposition<T> {
    /// Number of coefficients above `tol * coeffs[0]`.
    pub fn rank(&self, tol: f64) -> usize {
        linalg::relative_rank(&self.coeffs, tol)
    }

    /// Rebuilds the ket in the original factor order.
    pub fn reconstruct(&self, shape: &Shape) -> Result<Ket<T>> {
        let (ls, rs) = (self.cut.left_shape(shape), self.cut.right_shape(shape));
        let mut m = CMat::zeros(ls.total(), rs.total());
        for ((c, a), b) in self.coeffs.iter().zip(&self.left).zip(&self.right) {
            m += a.amps() * b.amps().transpose() * cr(*c);
        }
        op_to_vec(&Opr::new(m, ls, rs)?, &self.cut, shape)
    }
}

/// Schmidt decomposition of `v` across `cut`.
///
/// Terms whose coefficient is at the roundoff floor (`n * eps * a_1`) are
/// dropped, so a product state yields a single term.
pub fn schmidt_decompose<T: Real>(v: &Ket<T>, cut: &Cut) -> Result<SchmidtDecomposition<T>> {
    if v.norm() <= T::zero() {
        return Err(Error::ZeroVector);
    }
    let a = vec_to_op(v, cut)?;
    let (ls, rs) = (a.row_shape().clone(), a.col_shape().clone());
    let d = linalg::svd(a.mat());
    let floor = d.s[0] * T::default_epsilon() * T::lit((ls.total().max(rs.total())) as f64);
    let keep = d.s.iter().take_while(|&&s| s > floor).count().max(1);
    let mut left = Vec::with_capacity(keep);
    let mut right = Vec::with_capacity(keep);
    for i in 0..keep {
        left.push(Ket::new(ls.clone(), d.left(i))?);
        // conjugated right singular vector: u s v^H = sum s_i u_i (x) conj(v_i)
        right.push(Ket::new(rs.clone(), d.right_conj(i))?);
    }
    Ok(SchmidtDecomposition {
        coeffs: d.s[..keep].to_vec(),
        left,
        right,
        cut: cut.clone(),
    })
}

/// Number of Schmidt coefficients above `tol` times the largest.
pub fn schmidt_rank<T: Real>(v: &Ket<T>, cut: &Cut, tol: f64) -> Result<usize> {
    if v.norm() <= T::zero() {
        return Err(Error::ZeroVector);
    }
    let a = vec_to_op(v, cut)?;
    Ok(linalg::relative_rank(&linalg::singular_values(a.mat()), tol).max(1))
}

fn k_range(k: usize, m: usize, n: usize) -> Result<()> {
    let max = m.min(n);
    if k == 0 || k > max {
        Err(Error::KOutOfRange { k, min: 1, max })
    } else {
        Ok(())
    }
}

/// Top-`k` Schmidt truncation of `v` (not renormalized).
pub fn truncate_k<T: Real>(v: &Ket<T>, k: usize, cut: &Cut) -> Result<Ket<T>> {
    let a = vec_to_op(v, cut)?;
    let (m, n) = (a.row_shape().total(), a.col_shape().total());
    k_range(k, m, n)?;
    let t = truncate_mat(a.mat(), k);
    op_to_vec(&Opr::new(t, a.row_shape().clone(), a.col_shape().clone())?, cut, v.shape())
}

fn truncate_mat<T: Real>(a: &CMat<T>, k: usize) -> CMat<T> {
    let d = linalg::svd(a);
    let mut out = CMat::zeros(a.nrows(), a.ncols());
    for i in 0..k.min(d.s.len()) {
        out += d.left(i) * d.right_conj(i).transpose() * cr(d.s[i]);
    }
    out
}

/// `||v||_{s(k)}` and a unit Schmidt-rank-`k` ket attaining `|<w|v>|`.
#[derive(Clone, Debug)]
pub struct SNorm<T: Real> {
    pub value: T,
    pub witness: Ket<T>,
}

/// Closed-form s(k) norm across `cut`, with the normalized truncation as witness.
pub fn s_norm<T: Real>(v: &Ket<T>, k: usize, cut: &Cut) -> Result<SNorm<T>> {
    let a = vec_to_op(v, cut)?;
    k_range(k, a.row_shape().total(), a.col_shape().total())?;
    if v.norm() <= T::zero() {
        return Ok(SNorm {
            value: T::zero(),
            witness: Ket::basis(v.shape().clone(), &vec![0; v.shape().factors()])?,
        });
    }
    let s = linalg::singular_values(a.mat());
    let value = s.iter().take(k).fold(T::zero(), |acc, &x| acc + x * x).sqrt();
    let witness = truncate_k(v, k, cut)?
        .normalized()
        .ok_or(Error::ZeroVector)?;
    Ok(SNorm { value, witness })
}

/// Options for the see-saw estimate of `||X||_{S(k)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeesawOptions {
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for SeesawOptions {
    fn default() -> Self {
        SeesawOptions {
            restarts: 50,
            max_iters: 500,
            tol: 1e-12,
            seed: 0,
        }
    }
}

/// Best see-saw run: a certified lower bound on `||X||_{S(k)}`.
#[derive(Clone, Debug)]
pub struct NormResult<T: Real> {
    pub value: T,
    pub witness_left: Ket<T>,
    pub witness_right: Ket<T>,
    pub restarts_used: usize,
    /// Iterations of the winning run.
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each iteration of the winning run, nondecreasing.
    pub objective_trace: Vec<T>,
    /// Worst final value over all restarts.
    pub worst_restart: T,
    /// Index of the winning restart.
    pub best_restart: usize,
    /// Whether every restart produced a nondecreasing trace.
    pub all_monotone: bool,
}

impl<T: Real> NormResult<T> {
    /// Difference between the best and worst restart.
    pub fn spread(&self) -> T {
        self.value - self.worst_restart
    }
}

struct Run<T: Real> {
    value: T,
    w: CVec<T>,
    y: CVec<T>,
    trace: Vec<T>,
    iterations: usize,
    converged: bool,
    monotone: bool,
}

/// Normalized top-`k` truncation of `z` viewed as an `m x n` matrix.
fn trunc_unit<T: Real>(z: &CVec<T>, m: usize, n: usize, k: usize) -> Option<CVec<T>> {
    let a = CMat::from_fn(m, n, |i, j| z[i * n + j]);
    let t = truncate_mat(&a, k);
    let v = CVec::from_fn(m * n, |r, _| t[(r / n, r % n)]);
    let nv = linalg::vec_norm(&v);
    (nv > T::zero()).then(|| v * cr(T::one() / nv))
}

fn objective<T: Real>(x: &CMat<T>, w: &CVec<T>, y: &CVec<T>) -> T {
    use nalgebra::ComplexField;
    linalg::inner(w, &(x * y)).modulus()
}

fn seesaw_run<T: Real>(
    x: &CMat<T>,
    xh: &CMat<T>,
    (m, n, k): (usize, usize, usize),
    start: CVec<T>,
    opts: &SeesawOptions,
) -> Run<T> {
    let mut y = start;
    let mut w = trunc_unit(&(x * &y), m, n, k).unwrap_or_else(|| y.clone());
    let mut obj = objective(x, &w, &y);
    let mut trace = vec![obj];
    let mut converged = false;
    let mut iterations = 0;
    let tol = T::lit(opts.tol);
    for _ in 0..opts.max_iters {
        iterations += 1;
        let before = obj;
        if let Some(y2) = trunc_unit(&(xh * &w), m, n, k) {
            let o = objective(x, &w, &y2);
            if o >= obj {
                y = y2;
                obj = o;
            }
        }
        if let Some(w2) = trunc_unit(&(x * &y), m, n, k) {
            let o = objective(x, &w2, &y);
            if o >= obj {
                w = w2;
                obj = o;
            }
        }
        trace.push(obj);
        if obj - before < tol {
            converged = true;
            break;
        }
    }
    let monotone = trace.windows(2).all(|p| p[1] >= p[0]);
    Run {
        value: obj,
        w,
        y,
        trace,
        iterations,
        converged,
        monotone,
    }
}

/// Starting ket for restart `r`: even restarts are random Schmidt-rank-`k`
/// kets, odd restarts cycle through the truncated right singular vectors of
/// `X`, perturbed after the first pass.
fn start_vector<T: Real>(
    x_svd: &linalg::Svd<T>,
    shape: &Shape,
    k: usize,
    r: usize,
    seed: u64,
) -> CVec<T> {
    let (m, n) = (shape.dim(0), shape.dim(1));
    let mut g = rng(seed.wrapping_add(r as u64));
    if r % 2 == 0 {
        return sample::sr_k_ket(shape, k, &mut g).expect("k validated").into_amps();
    }
    let j = r / 2;
    let idx = j % x_svd.s.len();
    let mut v = x_svd.right(idx);
    if j >= x_svd.s.len() {
        let eps = T::lit(0.1);
        v += sample::random_unit_vec::<T, _>(m * n, &mut g) * cr(eps);
    }
    trunc_unit(&v, m, n, k).unwrap_or_else(|| sample::random_unit_vec(m * n, &mut g))
}

/// Multistart see-saw lower bound on `||X||_{S(k)}` for `X` acting on a
/// bipartite space `(m, n)`.
///
/// Each iteration sets `y <- trunc_k(X^* w)` then `w <- trunc_k(X y)`, both
/// exact maximizers with the other argument fixed, so the objective never
/// decreases. Restarts run in parallel with seeds `seed + r`.
pub fn operator_s_norm<T: Real>(x: &Opr<T>, k: usize, opts: &SeesawOptions) -> Result<NormResult<T>> {
    let shape = bipartite_square(x)?;
    let (m, n) = (shape.dim(0), shape.dim(1));
    k_range(k, m, n)?;
    if opts.restarts == 0 {
        return Err(Error::InvalidShape("restarts must be positive".into()));
    }
    if x.frobenius_norm() <= T::zero() {
        let e = Ket::basis(shape.clone(), &[0, 0])?;
        return Ok(NormResult {
            value: T::zero(),
            witness_left: e.clone(),
            witness_right: e,
            restarts_used: 0,
            iterations: 0,
            converged: true,
            objective_trace: vec![T::zero()],
            worst_restart: T::zero(),
            best_restart: 0,
            all_monotone: true,
        });
    }
    let xm = x.mat();
    let xh = xm.adjoint();
    let x_svd = linalg::svd(xm);
    let runs: Vec<Run<T>> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let start = start_vector(&x_svd, &shape, k, r, opts.seed);
            seesaw_run(xm, &xh, (m, n, k), start, opts)
        })
        .collect();
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.value > runs[best].value {
            best = i;
        }
    }
    let worst = runs.iter().map(|r| r.value).fold(runs[best].value, |a, b| a.min(b));
    let all_monotone = runs.iter().all(|r| r.monotone);
    let restarts_used = runs.len();
    let win = runs.into_iter().nth(best).expect("nonempty");
    Ok(NormResult {
        value: win.value,
        witness_left: Ket::new(shape.clone(), win.w)?,
        witness_right: Ket::new(shape, win.y)?,
        restarts_used,
        iterations: win.iterations,
        converged: win.converged,
        objective_trace: win.trace,
        worst_restart: worst,
        best_restart: best,
        all_monotone,
    })
}

/// The common bipartite factor shape of a square operator, or an error.
pub(crate) fn bipartite_square<T: Real>(x: &Opr<T>) -> Result<Shape> {
    if x.row_shape() != x.col_shape() {
        return Err(Error::ShapeMismatch(format!(
            "operator must act on one space, got rows {} and cols {}",
            x.row_shape(),
            x.col_shape()
        )));
    }
    if !x.row_shape().is_bipartite() {
        return Err(Error::InvalidShape(format!(
            "expected a bipartite shape (m,n), got {}",
            x.row_shape()
        )));
    }
    Ok(x.row_shape().clone())
}

/// `|<w|X|y>|` evaluated directly.
pub fn bilinear_value<T: Real>(x: &Opr<T>, w: &Ket<T>, y: &Ket<T>) -> Result<T> {
    use nalgebra::ComplexField;
    let xy = x.apply(y)?;
    Ok(w.inner(&xy).modulus())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::sample::{gaussian_opr, haar_ket, sr_k_ket};
    use nalgebra::Complex;

    fn sh(d: &[usize]) -> Shape {
        Shape::new(d.to_vec()).unwrap()
    }

    fn phi(d: usize) -> Ket<f64> {
        let mut amps = CVec::zeros(d * d);
        for i in 0..d {
            amps[i * d + i] = Complex::new(1.0 / (d as f64).sqrt(), 0.0);
        }
        Ket::new(sh(&[d, d]), amps).unwrap()
    }

    fn max_rank(w: &Ket<f64>) -> usize {
        schmidt_rank(w, &Cut::bipartite(), DEFAULT_SCHMIDT_TOL).unwrap()
    }

    #[test]
    fn bell_coefficients() {
        let d = schmidt_decompose(&phi(2), &Cut::bipartite()).unwrap();
        assert_eq!(d.coeffs.len(), 2);
        for c in &d.coeffs {
            assert!((c - 0.5f64.sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn product_state_single_term() {
        let mut g = rng(3);
        let a = haar_ket::<f64, _>(&sh(&[3]), &mut g).scale(Complex::new(2.0, 0.0));
        let b = haar_ket::<f64, _>(&sh(&[2]), &mut g).scale(Complex::new(0.0, 1.5));
        let v = a.kron(&b);
        let d = schmidt_decompose(&v, &Cut::bipartite()).unwrap();
        assert_eq!(d.coeffs.len(), 1);
        assert!((d.coeffs[0] - 3.0).abs() < 1e-12);
        assert_eq!(max_rank(&v), 1);
    }

    #[test]
    fn unequal_schmidt_form() {
        let s3 = 3f64.sqrt() / 2.0;
        let v = Ket::from_slice(
            &[2, 2],
            &[Complex::new(s3, 0.0), Complex::new(0.0, 0.0), Complex::new(0.0, 0.0), Complex::new(0.5, 0.0)],
        )
        .unwrap();
        let d = schmidt_decompose(&v, &Cut::bipartite()).unwrap();
        assert!((d.coeffs[0] - s3).abs() < 1e-14 && (d.coeffs[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn decomposition_invariants_on_grouped_cut() {
        let s = sh(&[2, 3, 2]);
        let v: Ket<f64> = haar_ket(&s, &mut rng(8));
        let cut = Cut::new(3, &[0, 2]).unwrap();
        let d = schmidt_decompose(&v, &cut).unwrap();
        let sq: f64 = d.coeffs.iter().map(|c| c * c).sum();
        assert!((sq - 1.0).abs() < 1e-12);
        for i in 0..d.left.len() {
            for j in 0..d.left.len() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d.left[i].inner(&d.left[j]) - Complex::new(want, 0.0)).norm() < 1e-10);
                assert!((d.right[i].inner(&d.right[j]) - Complex::new(want, 0.0)).norm() < 1e-10);
            }
        }
        let rec = d.reconstruct(&s).unwrap();
        assert!((rec.amps() - v.amps()).norm() < 1e-10);
    }

    #[test]
    fn sr_k_rank_matches_construction_oracle() {
        let v: Ket<f64> = sr_k_ket(&sh(&[4, 4]), 3, &mut rng(21)).unwrap();
        assert_eq!(max_rank(&v), 3);
        // oracle: eigenvalues of the reduced density matrix A A^*
        let a = CMat::from_fn(4, 4, |i, j| v.amps()[i * 4 + j]);
        let (ev, _) = linalg::hermitian_eigen(&(&a * a.adjoint()));
        assert_eq!(ev.iter().filter(|&&e| e > 1e-12).count(), 3);
    }

    #[test]
    fn zero_vector_rejected() {
        let z = Ket::<f64>::zeros(sh(&[2, 2]));
        assert_eq!(schmidt_rank(&z, &Cut::bipartite(), 1e-8), Err(Error::ZeroVector));
        assert!(schmidt_decompose(&z, &Cut::bipartite()).is_err());
    }

    #[test]
    fn s_norm_anchors() {
        let b = s_norm(&phi(2), 1, &Cut::bipartite()).unwrap();
        assert!((b.value - 0.5f64.sqrt()).abs() < 1e-14);
        for d in 2..=4 {
            for k in 1..=d {
                let r = s_norm(&phi(d), k, &Cut::bipartite()).unwrap();
                assert!((r.value - (k as f64 / d as f64).sqrt()).abs() < 1e-14);
                assert!(max_rank(&r.witness) <= k);
            }
        }
        assert!(matches!(
            s_norm(&phi(3), 4, &Cut::bipartite()),
            Err(Error::KOutOfRange { k: 4, .. })
        ));
    }

    #[test]
    fn s_norm_witness_attains_value() {
        let v: Ket<f64> = haar_ket(&sh(&[3, 4]), &mut rng(2));
        for k in 1..=3 {
            let r = s_norm(&v, k, &Cut::bipartite()).unwrap();
            assert!((r.witness.inner(&v).norm() - r.value).abs() < 1e-12);
        }
    }

    #[test]
    fn seesaw_identity_and_swap() {
        let id = Opr::<f64>::identity(sh(&[2, 2]));
        let r = operator_s_norm(&id, 1, &SeesawOptions::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
        let swap = crate::tensor::swap_operator::<f64>(
            &crate::tensor::Permutation::transposition(2, 0, 1),
            &sh(&[2, 2]),
        )
        .unwrap();
        let r = operator_s_norm(&swap, 1, &SeesawOptions::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
        assert!(max_rank(&r.witness_left) == 1 && max_rank(&r.witness_right) == 1);
    }

    #[test]
    fn seesaw_projector_on_phi3() {
        let p = phi(3).outer(&phi(3));
        for k in 1..=3 {
            let r = operator_s_norm(&p, k, &SeesawOptions::default()).unwrap();
            assert!((r.value - k as f64 / 3.0).abs() < 1e-8, "k={k} got {}", r.value);
        }
    }

    #[test]
    fn seesaw_top_k_reproduces_operator_norm() {
        let x: Opr<f64> = gaussian_opr(&sh(&[2, 3]), &sh(&[2, 3]), &mut rng(5));
        let r = operator_s_norm(&x, 2, &SeesawOptions::default()).unwrap();
        assert!((r.value - x.operator_norm()).abs() < 1e-9);
    }

    #[test]
    fn seesaw_reports_are_consistent() {
        let x: Opr<f64> = gaussian_opr(&sh(&[3, 3]), &sh(&[3, 3]), &mut rng(6));
        let opts = SeesawOptions { restarts: 12, ..Default::default() };
        let r = operator_s_norm(&x, 1, &opts).unwrap();
        assert!(r.all_monotone);
        assert!(r.objective_trace.windows(2).all(|p| p[1] >= p[0]));
        assert_eq!(*r.objective_trace.last().unwrap(), r.value);
        let direct = bilinear_value(&x, &r.witness_left, &r.witness_right).unwrap();
        assert!((direct - r.value).abs() < 1e-10);
        assert!(max_rank(&r.witness_left) == 1 && max_rank(&r.witness_right) == 1);
        assert!(r.spread() >= 0.0);
        let again = operator_s_norm(&x, 1, &opts).unwrap();
        assert_eq!(again.value, r.value);
    }

    #[test]
    fn seesaw_zero_operator() {
        let z = Opr::<f64>::zeros(sh(&[2, 2]), sh(&[2, 2]));
        let r = operator_s_norm(&z, 1, &SeesawOptions::default()).unwrap();
        assert_eq!(r.value, 0.0);
        assert!((r.witness_left.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn seesaw_rejects_bad_k_and_shape() {
        let x = Opr::<f64>::identity(sh(&[2, 3]));
        assert!(matches!(
            operator_s_norm(&x, 3, &SeesawOptions::default()),
            Err(Error::KOutOfRange { .. })
        ));
        let y = Opr::<f64>::identity(sh(&[2, 2, 2]));
        assert!(operator_s_norm(&y, 1, &SeesawOptions::default()).is_err());
    }
}
