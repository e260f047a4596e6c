use nalgebra::ComplexField;
use rayon::prelude::*;
use serde::Serialize;

use super::{contract_except, is_product_state, parallel_defect, product_leak, FactorList, DEFAULT_PRODUCT_TOL};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::scalar::{c1, cr, phase_of, Real};
use crate::tensor::sample::{product_ket, random_unit_vec, rng};
use crate::tensor::{swap_operator, Ket, Opr, Permutation, Shape};

#[derive(Clone, Debug, PartialEq)]
pub struct RecoverOptions {
    /// Relative threshold for product tests and the parallel relation.
    pub tol: f64,
    /// Largest accepted relative reconstruction error.
    pub residual_tol: f64,
    pub cond_bound: f64,
    pub seed: u64,
    /// Random product inputs tried when hunting for an entangling input.
    pub random_probes: usize,
}

impl Default for RecoverOptions {
    fn default() -> Self {
        RecoverOptions {
            tol: DEFAULT_PRODUCT_TOL,
            residual_tol: 1e-8,
            cond_bound: crate::classify::DEFAULT_COND_BOUND,
            seed: 0,
            random_probes: 64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoverStatus {
    Recovered,
    NotSeparabilityPreserving,
    InvertibilityUnknown,
}

/// A product input whose image is entangled.
#[derive(Clone, Debug)]
pub struct EntanglingInput<T: Real> {
    pub input: Ket<T>,
    /// Largest relative second Schmidt coefficient of the image over single-party cuts.
    pub leak: T,
}

/// `L = S_sigma (P_1 (x) ... (x) P_p)` when recovered.
#[derive(Clone, Debug)]
pub struct RecoveredForm<T: Real> {
    pub status: RecoverStatus,
    pub sigma: Option<Permutation>,
    /// `P_1, ..., P_p`; factors after the first have a unit first column with
    /// real positive leading entry, and the global scalar sits on `P_1`.
    pub factors: Vec<Opr<T>>,
    pub residual: T,
    pub condition_number: f64,
    pub witness: Option<EntanglingInput<T>>,
    /// Reference choices tried (the all-`|1>` one first).
    pub attempts: usize,
}

impl<T: Real> RecoveredForm<T> {
    /// `S_sigma (P_1 (x) ... (x) P_p)` on `shape`.
    pub fn rebuild(&self, shape: &Shape) -> Option<Opr<T>> {
        let sigma = self.sigma.as_ref()?;
        let kron = self.factors.iter().skip(1).fold(self.factors.first()?.mat().clone(), |acc, p| {
            linalg::kron(&acc, p.mat())
        });
        let prod = Opr::square(kron, shape.clone()).ok()?;
        swap_operator(sigma, shape).ok()?.compose(&prod).ok()
    }
}

/// Basis product states, then `(|j> + |r>)/sqrt 2` in one party with basis
/// states elsewhere.
pub fn multipartite_probes<T: Real>(shape: &Shape) -> Vec<Ket<T>> {
    let p = shape.factors();
    let dims = shape.dims();
    let unit = |d: usize, i: usize| {
        let mut v = CVec::zeros(d);
        v[i] = c1();
        v
    };
    let basis = |multi: &[usize]| -> Vec<CVec<T>> { (0..p).map(|f| unit(dims[f], multi[f])).collect() };
    let mut out = Vec::new();
    for flat in 0..shape.total() {
        out.push(FactorList::new(basis(&shape.unravel(flat))).expect("nonempty").product());
    }
    let h = cr(T::one() / T::lit(2f64.sqrt()));
    for i in 0..p {
        for j in 0..dims[i] {
            for r in j + 1..dims[i] {
                let sup = (unit(dims[i], j) + unit(dims[i], r)) * h;
                for flat in 0..shape.total() {
                    let multi = shape.unravel(flat);
                    if multi[i] != 0 {
                        continue;
                    }
                    let mut f = basis(&multi);
                    f[i] = sup.clone();
                    out.push(FactorList::new(f).expect("nonempty").product());
                }
            }
        }
    }
    out
}

/// Searches the probes, then `n_random` random product states (seed `seed + i`),
/// for the input with the most entangled image; `None` if every image is
/// product at `tol`.
pub fn find_entangling_input<T: Real>(l: &Opr<T>, tol: f64, seed: u64, n_random: usize) -> Option<EntanglingInput<T>> {
    let shape = l.col_shape().clone();
    let randoms: Vec<Ket<T>> = (0..n_random)
        .map(|i| product_ket(&shape, &mut rng(seed.wrapping_add(i as u64))))
        .collect();
    let inputs: Vec<Ket<T>> = multipartite_probes::<T>(&shape).into_iter().chain(randoms).collect();
    let floor = l.frobenius_norm() * T::default_epsilon() * T::lit(100.0);
    let leaks: Vec<T> = inputs
        .par_iter()
        .map(|v| {
            let w = l.apply(v).expect("shapes agree");
            if w.norm() <= floor {
                T::zero()
            } else {
                product_leak(&w).unwrap_or(T::zero())
            }
        })
        .collect();
    let mut worst = 0;
    for (i, x) in leaks.iter().enumerate() {
        if *x > leaks[worst] {
            worst = i;
        }
    }
    (leaks[worst] > T::lit(tol)).then(|| EntanglingInput {
        input: inputs[worst].clone(),
        leak: leaks[worst],
    })
}

enum Attempt<T: Real> {
    Form(Permutation, Vec<CMat<T>>),
    Entangled(Ket<T>),
    Ambiguous(String),
}

fn attempt<T: Real>(l: &Opr<T>, refs: &[CVec<T>], tol: f64) -> Result<Attempt<T>> {
    let shape = l.col_shape();
    let (p, dims) = (shape.factors(), shape.dims());
    let floor = l.frobenius_norm() * T::default_epsilon() * T::lit(100.0);
    let input = FactorList::new(refs.to_vec())?.product();
    let y = l.apply(&input)?;
    if y.norm() <= floor {
        return Ok(Attempt::Ambiguous("reference image underflows".into()));
    }
    let (ok, fy) = is_product_state(&y, tol)?;
    let Some(fy) = fy.filter(|_| ok) else {
        return Ok(Attempt::Entangled(input));
    };
    let yf = fy.factors();
    let dual: Vec<CVec<T>> = yf
        .iter()
        .map(|f| {
            let n = linalg::vec_norm(f);
            f * cr(T::one() / (n * n))
        })
        .collect();
    let mut map = vec![usize::MAX; p];
    let mut cols: Vec<CMat<T>> = Vec::with_capacity(p);
    for i in 0..p {
        let mut images = Vec::with_capacity(dims[i]);
        let mut score = vec![T::zero(); p];
        for j in 0..dims[i] {
            let mut f = refs.to_vec();
            let mut e = CVec::zeros(dims[i]);
            e[j] = c1();
            f[i] = e;
            let v = FactorList::new(f)?.product();
            let z = l.apply(&v)?;
            if z.norm() <= floor {
                return Ok(Attempt::Ambiguous(format!("probe image underflows at party {}", i + 1)));
            }
            let (ok, fz) = is_product_state(&z, tol)?;
            let Some(fz) = fz.filter(|_| ok) else {
                return Ok(Attempt::Entangled(v));
            };
            for (s, sc) in score.iter_mut().enumerate() {
                *sc = sc.max(parallel_defect(&fz.factors()[s], &yf[s]));
            }
            images.push(z);
        }
        let varying: Vec<usize> = (0..p).filter(|&s| score[s] > T::lit(tol)).collect();
        let [s] = varying[..] else {
            return Ok(Attempt::Ambiguous(format!(
                "party {} moves {} output subsystems",
                i + 1,
                varying.len()
            )));
        };
        if dims[s] != dims[i] || map[s] != usize::MAX {
            return Ok(Attempt::Ambiguous(format!("party {} lands on occupied or mismatched subsystem {}", i + 1, s + 1)));
        }
        map[s] = i;
        let mut q = CMat::zeros(dims[i], dims[i]);
        for (j, z) in images.iter().enumerate() {
            q.set_column(j, &contract_except(z, &dual, s));
        }
        cols.push(q);
    }
    Ok(Attempt::Form(Permutation::new(map)?, cols))
}

/// Scales `P_2, ..., P_p` to a unit first column with real positive leading
/// entry and moves the scalars onto `P_1`.
fn normalize_factors<T: Real>(mut qs: Vec<CMat<T>>) -> Vec<CMat<T>> {
    let mut carry = c1::<T>();
    for q in qs.iter_mut().skip(1) {
        let col = q.column(0).into_owned();
        let norm = linalg::vec_norm(&col);
        if norm <= T::zero() {
            continue;
        }
        let big = col.iter().fold(T::zero(), |acc, z| acc.max(z.modulus()));
        let lead = col
            .iter()
            .find(|z| z.modulus() > big * T::lit(1e-12))
            .copied()
            .unwrap_or(c1());
        let alpha = phase_of(lead) * cr(norm);
        *q *= c1::<T>() / alpha;
        carry *= alpha;
    }
    if let Some(first) = qs.first_mut() {
        *first *= carry;
    }
    qs
}

/// Recovers `L = S_sigma (P_1 (x) ... (x) P_p)` from probe images.
///
/// Each party is probed with basis states while the other parties hold a
/// reference (all `|1>` first, random unit references on retry). Images must
/// factor; the unique output subsystem that moves gives `sigma`, and each
/// column of `P_i` is read off by contracting the image against the duals of
/// the reference image's other factors. A non-product image, or a failed
/// global check, yields `NotSeparabilityPreserving` with an entangling input.
pub fn recover_local_form_multipartite<T: Real>(l: &Opr<T>, opts: &RecoverOptions) -> Result<RecoveredForm<T>> {
    let shape = l.col_shape().clone();
    if l.row_shape() != &shape {
        return Err(Error::ShapeMismatch(format!(
            "recovery needs a square operator, got {} -> {}",
            shape,
            l.row_shape()
        )));
    }
    let condition_number = l.condition_number();
    let mut form = RecoveredForm {
        status: RecoverStatus::InvertibilityUnknown,
        sigma: None,
        factors: Vec::new(),
        residual: T::one(),
        condition_number,
        witness: None,
        attempts: 0,
    };
    if !(condition_number <= opts.cond_bound) {
        return Ok(form);
    }
    let dims = shape.dims().to_vec();
    let norm = l.frobenius_norm();
    let mut reasons = Vec::new();
    for a in 0..3u64 {
        form.attempts += 1;
        let refs: Vec<CVec<T>> = if a == 0 {
            dims.iter()
                .map(|&d| {
                    let mut v = CVec::zeros(d);
                    v[0] = c1();
                    v
                })
                .collect()
        } else {
            let mut g = rng(opts.seed.wrapping_add(a));
            dims.iter().map(|&d| random_unit_vec(d, &mut g)).collect()
        };
        let outcome = attempt(l, &refs, opts.tol)?;
        if !matches!(outcome, Attempt::Form(..)) {
            if let Some(w) = find_entangling_input(l, opts.tol, opts.seed, opts.random_probes) {
                form.status = RecoverStatus::NotSeparabilityPreserving;
                form.witness = Some(w);
                return Ok(form);
            }
        }
        match outcome {
            Attempt::Entangled(input) => {
                let image = l.apply(&input)?;
                let leak = product_leak(&image)?;
                form.status = RecoverStatus::NotSeparabilityPreserving;
                form.witness = Some(EntanglingInput { input, leak });
                return Ok(form);
            }
            Attempt::Ambiguous(why) => reasons.push(why),
            Attempt::Form(sigma, qs) => {
                let qs = normalize_factors(qs);
                form.sigma = Some(sigma);
                form.factors = qs
                    .into_iter()
                    .map(|q| Opr::flat(q).expect("square factor"))
                    .collect();
                let rebuilt = form.rebuild(&shape).expect("factors present");
                form.residual = linalg::frobenius(&(l.mat() - rebuilt.mat())) / norm;
                if form.residual <= T::lit(opts.residual_tol) {
                    form.status = RecoverStatus::Recovered;
                    return Ok(form);
                }
                reasons.push(format!("reconstruction residual {:e}", form.residual.as_f64()));
            }
        }
    }
    if let Some(w) = find_entangling_input(l, opts.tol, opts.seed, opts.random_probes) {
        form.status = RecoverStatus::NotSeparabilityPreserving;
        form.sigma = None;
        form.factors.clear();
        form.residual = T::one();
        form.witness = Some(w);
        return Ok(form);
    }
    Err(Error::AmbiguousSubsystem(reasons.join("; ")))
}
