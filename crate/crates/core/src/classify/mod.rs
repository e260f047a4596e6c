//! Structural classification of operators and superoperators: local form,
//! Schmidt-rank preservation, single-Kraus conjugations and `S(k)`-norm
//! isometries.

mod isometry;
mod kraus;
mod lemma;
mod local_form;
mod preserve;
mod superop;

pub(crate) use isometry::match_known_form;
pub use isometry::{classify_norm_isometry, IsometryDecomposition, IsometryOutcome, NonIsometryWitness};
pub use kraus::{choi_kraus, classify_cp_sk_preserver, CpPreserverReport, CpVerdict, KrausSet};
pub use lemma::{sep_isometry_implies_unitary_check, SepIsometryRecord};
pub use local_form::{classify_local_form, operator_schmidt_split, LocalFormReport, LocalVerdict, OperatorSchmidt};
pub use preserve::{check_schmidt_rank_preservation, image_leak, verify_thm_main, PreservationReport, ThmMainRecord};
pub use superop::{SuperOp, IDENTITY_SLOTS, PARTIAL_TRANSPOSE, TRANSPOSE, TRANSPOSE_THEN_PARTIAL};

use crate::error::{Error, Result};
use crate::scalar::{cr, Real};
use crate::tensor::{Ket, Shape};

/// Realignment threshold: a second operator Schmidt coefficient at or below
/// `1e-7` times the first counts as rank one.
pub const DEFAULT_REALIGN_TOL: f64 = 1e-7;
/// Condition number above which invertibility is treated as unknown.
pub const DEFAULT_COND_BOUND: f64 = 1e6;
/// Largest relative `(k+1)`-th Schmidt coefficient accepted as preservation.
pub const DEFAULT_PRESERVE_TOL: f64 = 1e-8;
pub const DEFAULT_SAMPLES: usize = 200;

/// Shared knobs for the classifiers.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifyOptions {
    pub realign_tol: f64,
    pub cond_bound: f64,
    /// Tolerance for leaks, proportionality, unitarity and reconstruction.
    pub tol: f64,
    pub samples: usize,
    pub seed: u64,
    /// Absolute `S(k)` gap that certifies a non-isometry witness.
    pub witness_gap: f64,
    /// Candidate operators tried when searching for a non-isometry witness.
    pub witness_trials: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            realign_tol: DEFAULT_REALIGN_TOL,
            cond_bound: DEFAULT_COND_BOUND,
            tol: DEFAULT_PRESERVE_TOL,
            samples: DEFAULT_SAMPLES,
            seed: 0,
            witness_gap: 1e-3,
            witness_trials: 30,
        }
    }
}

/// Requires `1 <= k < min(m, n)` on a bipartite shape.
pub(crate) fn proper_k(shape: &Shape, k: usize) -> Result<()> {
    if !shape.is_bipartite() {
        return Err(Error::InvalidShape(format!("expected a bipartite shape (m,n), got {shape}")));
    }
    let max = shape.dim(0).min(shape.dim(1)).saturating_sub(1);
    if k == 0 || k > max {
        return Err(Error::KOutOfRange { k, min: 1, max });
    }
    Ok(())
}

/// Deterministic product probes on `(m, n)`: basis states `|j>|l>`, then
/// `(|j> + |r>)|l>` and `|j>(|l> + |r>)`, normalized.
pub(crate) fn product_probes<T: Real>(shape: &Shape) -> Vec<Ket<T>> {
    let (m, n) = (shape.dim(0), shape.dim(1));
    let unit = |d: usize, i: usize| Ket::<T>::unit(d, i).expect("index in range");
    let plus = |d: usize, i: usize, j: usize| {
        unit(d, i)
            .add(&unit(d, j))
            .expect("same shape")
            .scale(cr(T::one() / T::lit(2f64.sqrt())))
    };
    let mut out = Vec::new();
    for j in 0..m {
        for l in 0..n {
            out.push(unit(m, j).kron(&unit(n, l)));
        }
    }
    for j in 0..m {
        for r in j + 1..m {
            for l in 0..n {
                out.push(plus(m, j, r).kron(&unit(n, l)));
            }
        }
    }
    for j in 0..m {
        for l in 0..n {
            for r in l + 1..n {
                out.push(unit(m, j).kron(&plus(n, l, r)));
            }
        }
    }
    out.into_iter()
        .map(|v| v.reshaped(shape.clone()).expect("same total"))
        .collect()
}
