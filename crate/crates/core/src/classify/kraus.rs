use serde::Serialize;

use super::{
    check_schmidt_rank_preservation, classify_local_form, product_probes, proper_k, ClassifyOptions,
    LocalFormReport, SuperOp,
};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::norms::schmidt_rank;
use crate::scalar::{cr, Real};
use crate::tensor::sample::{rng, sr_k_ket};
use crate::tensor::{Cut, Ket, Opr, Shape};

/// Kraus operators read off the Choi matrix.
#[derive(Clone, Debug)]
pub struct KrausSet<T: Real> {
    pub ops: Vec<Opr<T>>,
    /// Choi eigenvalues kept as Kraus weights, nonincreasing.
    pub eigenvalue_weights: Vec<T>,
    /// Full Choi spectrum, nonincreasing.
    pub choi_eigenvalues: Vec<T>,
    /// Most negative Choi eigenvalue, or zero when the Choi matrix is PSD.
    pub cp_defect: T,
    pub completely_positive: bool,
    pub trace_preserving: bool,
    pub trace_preservation_defect: T,
    /// `max |sum A_i X A_i^* - Phi(X)|` over the matrix units.
    pub reconstruction_error: T,
}

impl<T: Real> KrausSet<T> {
    /// Turns a non-CP result into [`Error::NotCompletelyPositive`].
    pub fn require_cp(self) -> Result<Self> {
        if self.completely_positive {
            Ok(self)
        } else {
            Err(Error::NotCompletelyPositive {
                defect: self.cp_defect.as_f64(),
            })
        }
    }
}

/// Eigendecomposes the Choi matrix. An eigenvector `k` with eigenvalue `l`
/// gives the Kraus operator `A[a, i] = sqrt(l) k[i D + a]`. Eigenvalues are
/// compared with `tol` relative to the largest magnitude.
pub fn choi_kraus<T: Real>(phi: &SuperOp<T>, tol: f64) -> KrausSet<T> {
    let d = phi.dim();
    let (vals, vecs) = linalg::hermitian_eigen(&phi.choi());
    let scale = vals
        .iter()
        .fold(T::zero(), |acc, v| acc.max(v.abs()));
    let cut = T::lit(tol) * scale;
    let lowest = vals.last().copied().unwrap_or(T::zero());
    let cp_defect = lowest.min(T::zero());
    let completely_positive = cp_defect >= -cut;
    let mut ops = Vec::new();
    let mut weights = Vec::new();
    for (i, &lam) in vals.iter().enumerate() {
        if lam <= cut || lam <= T::zero() {
            break;
        }
        let root = cr(lam.sqrt());
        let a = CMat::from_fn(d, d, |r, c| vecs[(c * d + r, i)] * root);
        ops.push(Opr::square(a, phi.shape().clone()).expect("dims"));
        weights.push(lam);
    }
    let reconstruction_error = if ops.is_empty() {
        phi.mat().iter().fold(T::zero(), |acc, z| acc.max(nalgebra::ComplexField::modulus(*z)))
    } else {
        let rebuilt = SuperOp::from_kraus(&ops).expect("same shape");
        (rebuilt.mat() - phi.mat())
            .iter()
            .fold(T::zero(), |acc, z| acc.max(nalgebra::ComplexField::modulus(*z)))
    };
    let tp = phi.trace_preservation_defect();
    KrausSet {
        ops,
        eigenvalue_weights: weights,
        choi_eigenvalues: vals,
        cp_defect,
        completely_positive,
        trace_preserving: tp <= T::lit(tol),
        trace_preservation_defect: tp,
        reconstruction_error,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CpVerdict {
    /// `Phi(X) = L X L^*` with `L` of local form: `Phi(S_k) ⊆ S_k`.
    LocalConjugation,
    /// Kraus operators point in several directions; a witness `w` with
    /// `SR(w) <= k` has an image outside `S_k`.
    MultipleKrausDirections,
    /// A single Kraus operator that is not of local form; a witness is given.
    NotLocal,
}

#[derive(Clone, Debug)]
pub struct CpPreserverReport<T: Real> {
    pub verdict: CpVerdict,
    pub kraus_count: usize,
    pub eigenvalue_weights: Vec<T>,
    /// `sum_{i >= 2} l_i / l_1`: zero iff the Kraus operators are proportional.
    pub proportionality_defect: T,
    pub trace_preserving: bool,
    pub l: Option<Opr<T>>,
    pub l_condition: Option<f64>,
    pub local_form: Option<LocalFormReport<T>>,
    /// Set for trace-preserving maps: whether `L` is unitary.
    pub l_unitary: Option<bool>,
    pub witness: Option<Ket<T>>,
    /// Rank of `Phi(|w><w|)` at the witness.
    pub witness_image_rank: Option<usize>,
    /// Schmidt rank of the range vector when the image has rank one.
    pub witness_image_schmidt_rank: Option<usize>,
}

impl<T: Real> CpPreserverReport<T> {
    pub fn preserves(&self) -> bool {
        self.verdict == CpVerdict::LocalConjugation
    }
}

/// Tests whether `Phi(|w><w|)` leaves `S_k`: either its rank exceeds one or
/// its range vector has Schmidt rank above `k`.
fn image_violation<T: Real>(phi: &SuperOp<T>, w: &Ket<T>, k: usize, tol: f64) -> Option<(usize, Option<usize>)> {
    let img = phi.apply(&w.outer(w)).expect("dims");
    let (vals, vecs) = linalg::hermitian_eigen(img.mat());
    let biggest = vals.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    if biggest <= T::zero() {
        return None;
    }
    let rank = vals.iter().filter(|v| v.abs() > T::lit(tol) * biggest).count();
    if rank >= 2 {
        return Some((rank, None));
    }
    let range = Ket::new(w.shape().clone(), vecs.column(0).into_owned()).expect("dims");
    let sr = schmidt_rank(&range, &Cut::bipartite(), tol).ok()?;
    (sr > k).then_some((1, Some(sr)))
}

fn find_witness<T: Real>(
    phi: &SuperOp<T>,
    shape: &Shape,
    k: usize,
    opts: &ClassifyOptions,
) -> Option<(Ket<T>, usize, Option<usize>)> {
    let probes = product_probes::<T>(shape);
    for w in probes {
        if let Some((r, sr)) = image_violation(phi, &w, k, opts.tol) {
            return Some((w, r, sr));
        }
    }
    for i in 0..opts.samples {
        let mut g = rng(opts.seed.wrapping_add(i as u64));
        let w = sr_k_ket(shape, 1 + i % k, &mut g).expect("k validated");
        if let Some((r, sr)) = image_violation(phi, &w, k, opts.tol) {
            return Some((w, r, sr));
        }
    }
    None
}

/// Classifies a completely positive `Phi` as a local conjugation
/// `X -> L X L^*` or exhibits a Schmidt-rank-`k` state whose image leaves `S_k`.
pub fn classify_cp_sk_preserver<T: Real>(
    phi: &SuperOp<T>,
    k: usize,
    opts: &ClassifyOptions,
) -> Result<CpPreserverReport<T>> {
    let shape = phi.shape().clone();
    proper_k(&shape, k)?;
    let kraus = choi_kraus(phi, opts.tol).require_cp()?;
    let weights = kraus.eigenvalue_weights.clone();
    let Some(&top) = weights.first() else {
        return Err(Error::InvertibilityUnknown {
            condition: f64::INFINITY,
            bound: opts.cond_bound,
        });
    };
    let proportionality_defect = kraus.choi_eigenvalues[1..]
        .iter()
        .fold(T::zero(), |acc, &w| acc + w.max(T::zero()))
        / top;
    let mut report = CpPreserverReport {
        verdict: CpVerdict::MultipleKrausDirections,
        kraus_count: kraus.ops.len(),
        eigenvalue_weights: weights,
        proportionality_defect,
        trace_preserving: kraus.trace_preserving,
        l: None,
        l_condition: None,
        local_form: None,
        l_unitary: None,
        witness: None,
        witness_image_rank: None,
        witness_image_schmidt_rank: None,
    };

    if proportionality_defect > T::lit(opts.tol) {
        if let Some((w, rank, sr)) = find_witness(phi, &shape, k, opts) {
            report.witness = Some(w);
            report.witness_image_rank = Some(rank);
            report.witness_image_schmidt_rank = sr;
            return Ok(report);
        }
        let cond = phi.condition_number();
        let bound = opts.cond_bound * opts.cond_bound;
        if !(cond <= bound) {
            return Err(Error::InvertibilityUnknown { condition: cond, bound });
        }
        return Err(Error::Inconclusive(format!(
            "{} Kraus directions but no witness among {} probes",
            report.kraus_count,
            opts.samples
        )));
    }

    let l = kraus.ops[0].clone();
    let cond = l.condition_number();
    if !(cond <= opts.cond_bound) {
        return Err(Error::InvertibilityUnknown {
            condition: cond,
            bound: opts.cond_bound,
        });
    }
    let form = classify_local_form(&l, opts.realign_tol)?;
    report.l_condition = Some(cond);
    if kraus.trace_preserving {
        report.l_unitary = Some(l.unitarity_defect() <= T::lit(opts.tol));
    }
    if form.is_local() {
        report.verdict = CpVerdict::LocalConjugation;
    } else {
        report.verdict = CpVerdict::NotLocal;
        let pres = check_schmidt_rank_preservation(&l, k, opts.samples, opts.tol, opts.seed)?;
        if !pres.verdict {
            let w = pres.worst_input;
            let img = l.apply(&w)?;
            report.witness_image_rank = Some(1);
            report.witness_image_schmidt_rank = Some(schmidt_rank(&img, &Cut::bipartite(), opts.tol)?);
            report.witness = Some(w);
        }
    }
    report.l = Some(l);
    report.local_form = Some(form);
    Ok(report)
}
