use std::fmt;
use std::str::FromStr;

use nalgebra::ComplexField;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{match_known_form, SuperOp};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::multipartite::{product_leak, recover_local_form_multipartite, RecoverOptions, RecoverStatus};
use crate::scalar::{c0, cr, C};
use crate::tensor::io::OprFile;
use crate::tensor::sample::{gaussian, gaussian_mat, invertible_opr, product_ket, rng, sr_k_ket, SeededRng};
use crate::tensor::{swap_operator, Opr, Permutation, Shape};

/// Open questions the search targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Question {
    /// Invertible maps sending sums of `r` rank-one operators with
    /// Schmidt-rank-`k` row and column vectors to operators of rank `r`.
    RankRBipartite,
    /// Invertible multipartite operators sending tensor rank `<= k` to
    /// tensor rank `<= k`.
    MultipartiteK,
}

impl fmt::Display for Question {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Question::RankRBipartite => "rank_r_bipartite",
            Question::MultipartiteK => "multipartite_k",
        })
    }
}

impl FromStr for Question {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "rank_r_bipartite" => Ok(Question::RankRBipartite),
            "multipartite_k" => Ok(Question::MultipartiteK),
            other => Err(Error::format(
                "question",
                format!("unknown question `{other}` (expected rank-r-bipartite or multipartite-k)"),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub question: Question,
    pub shape: Vec<usize>,
    pub k: usize,
    /// Number of rank-one terms; used by [`Question::RankRBipartite`] only.
    pub r: usize,
    pub trials: usize,
    pub seed: u64,
    /// Test inputs per trial.
    pub inputs_per_trial: usize,
    /// Violations at or below this count as preserving.
    pub tol: f64,
    /// Largest relative residual accepted as a known-form match.
    pub known_tol: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            question: Question::RankRBipartite,
            shape: vec![3, 3],
            k: 1,
            r: 2,
            trials: 1000,
            seed: 0,
            inputs_per_trial: 8,
            tol: 1e-8,
            known_tol: 1e-6,
        }
    }
}

/// How trial `i` builds its map: `i mod 10 == 0` injects a disguised known
/// form, `1..=4` perturbs one, the rest are Gaussian.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialFamily {
    InjectedKnownForm,
    PerturbedKnownForm,
    RandomInvertible,
}

impl TrialFamily {
    fn of(index: usize) -> Self {
        match index % 10 {
            0 => TrialFamily::InjectedKnownForm,
            1..=4 => TrialFamily::PerturbedKnownForm,
            _ => TrialFamily::RandomInvertible,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub seed: u64,
    pub family: TrialFamily,
    /// Relative perturbation size for perturbed trials.
    pub epsilon: Option<f64>,
    pub violation: f64,
    pub preserver: bool,
    /// Checked only for preservers.
    pub known_form: Option<bool>,
    pub known_residual: Option<f64>,
}

/// A preserver that did not match the known form, with enough data to replay it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Candidate {
    pub record: TrialRecord,
    /// Superoperator matrix (bipartite) or operator (multipartite).
    pub map: OprFile,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchReport {
    pub config: SearchConfig,
    pub trials: usize,
    pub preservers: usize,
    pub known_form_matches: usize,
    pub injected: usize,
    /// Injected trials that passed the property test and matched the known form.
    pub injected_recognized: usize,
    /// Trials whose violation exceeded `tol`.
    pub rejected: usize,
    pub candidates: Vec<Candidate>,
    /// Smallest violation over trials outside the known form; `None` if every
    /// trial matched.
    pub best_violation: Option<f64>,
}

impl SearchReport {
    /// Zero candidates and every injected map recognized.
    pub fn sound(&self) -> bool {
        self.candidates.is_empty() && self.injected_recognized == self.injected
    }
}

/// Cayley's hyperdeterminant of a `2 x 2 x 2` tensor.
pub fn hyperdeterminant(a: &CVec<f64>) -> Result<C<f64>> {
    if a.len() != 8 {
        return Err(Error::ShapeMismatch(format!("hyperdeterminant needs 8 entries, got {}", a.len())));
    }
    let x = |i: usize| a[i];
    let (a000, a001, a010, a011, a100, a101, a110, a111) = (x(0), x(1), x(2), x(3), x(4), x(5), x(6), x(7));
    let two = cr(2.0);
    let four = cr(4.0);
    Ok(a000 * a000 * a111 * a111 + a001 * a001 * a110 * a110 + a010 * a010 * a101 * a101
        + a100 * a100 * a011 * a011
        - two
            * (a000 * a001 * a110 * a111
                + a000 * a010 * a101 * a111
                + a000 * a100 * a011 * a111
                + a001 * a010 * a101 * a110
                + a001 * a100 * a011 * a110
                + a010 * a100 * a011 * a101)
        + four * (a000 * a011 * a101 * a110 + a001 * a010 * a100 * a111))
}

fn validate(cfg: &SearchConfig) -> Result<Shape> {
    let shape = Shape::new(cfg.shape.clone())?;
    if shape.dims().iter().any(|&d| d > 4) || shape.factors() > 3 || shape.factors() < 2 {
        return Err(Error::Unsupported(format!(
            "search runs on desk-scale shapes (2 or 3 factors, each dim <= 4), got {shape}"
        )));
    }
    if cfg.trials == 0 || cfg.inputs_per_trial == 0 {
        return Err(Error::format("trials", "trials and inputs per trial must be positive"));
    }
    match cfg.question {
        Question::RankRBipartite => {
            if !shape.is_bipartite() {
                return Err(Error::InvalidShape(format!("rank_r_bipartite needs (m,n), got {shape}")));
            }
            crate::classify::proper_k(&shape, cfg.k)?;
            if cfg.r == 0 || cfg.r >= shape.total() {
                return Err(Error::format("r", format!("needs 1 <= r < {}, got {}", shape.total(), cfg.r)));
            }
        }
        Question::MultipartiteK => match cfg.k {
            1 => {}
            2 if shape.dims() == [2, 2, 2] => {}
            k => {
                return Err(Error::Unsupported(format!(
                    "multipartite_k supports k = 1 on any desk shape and k = 2 on (2,2,2), got k = {k} on {shape}"
                )))
            }
        },
    }
    Ok(shape)
}

fn scalar(g: &mut SeededRng) -> C<f64> {
    loop {
        let c: C<f64> = gaussian(g);
        if c.modulus() > 0.1 {
            return c;
        }
    }
}

fn flat(d: usize) -> Shape {
    Shape::flat(d).expect("d >= 1")
}

fn local_factor(shape: &Shape, g: &mut SeededRng) -> Opr<f64> {
    let (m, n) = (shape.dim(0), shape.dim(1));
    let p = invertible_opr::<f64, _>(&flat(m), 10.0, g).expect("small factors");
    let q = invertible_opr::<f64, _>(&flat(n), 10.0, g).expect("small factors");
    let pq = Opr::square(linalg::kron(p.mat(), q.mat()), shape.clone()).expect("dims");
    if m == n && g.random::<bool>() {
        swap_operator(&Permutation::transposition(2, 0, 1), shape)
            .and_then(|s| s.compose(&pq))
            .expect("square swap")
    } else {
        pq
    }
}

fn known_bipartite(shape: &Shape, k: usize, g: &mut SeededRng) -> SuperOp<f64> {
    let mut phi = SuperOp::sandwich(&local_factor(shape, g), &local_factor(shape, g)).expect("same space");
    if g.random::<bool>() {
        phi = phi.compose(&SuperOp::transpose(shape.clone()).expect("square")).expect("same space");
    }
    if k == 1 && g.random::<bool>() {
        phi = phi
            .compose(&SuperOp::partial_transpose(shape.clone()).expect("square"))
            .expect("same space");
    }
    let c = scalar(g);
    SuperOp::new(phi.mat() * c, shape.clone()).expect("same space")
}

fn known_multipartite(shape: &Shape, g: &mut SeededRng) -> Opr<f64> {
    let p = shape.factors();
    let sigma = loop {
        let mut map: Vec<usize> = (0..p).collect();
        map.shuffle(g);
        let s = Permutation::new(map).expect("shuffled identity");
        if shape.permuted(&s).expect("same length") == *shape {
            break s;
        }
    };
    let kron = shape
        .dims()
        .iter()
        .map(|&d| invertible_opr::<f64, _>(&flat(d), 10.0, g).expect("small factors").into_mat())
        .reduce(|a, b| linalg::kron(&a, &b))
        .expect("nonempty");
    let prod = Opr::square(kron * scalar(g), shape.clone()).expect("dims");
    swap_operator(&sigma, shape).and_then(|s| s.compose(&prod)).expect("dims preserved")
}

/// `base + eps ||base|| G / ||G||`.
fn perturb(base: &CMat<f64>, eps: f64, g: &mut SeededRng) -> CMat<f64> {
    let noise: CMat<f64> = gaussian_mat(base.nrows(), base.ncols(), g);
    let s = eps * linalg::frobenius(base) / linalg::frobenius(&noise);
    base + noise * cr(s)
}

/// Map of trial `index` and its perturbation size.
fn trial_map(cfg: &SearchConfig, shape: &Shape, index: usize, g: &mut SeededRng) -> (CMat<f64>, Option<f64>) {
    let family = TrialFamily::of(index);
    let base = |g: &mut SeededRng| match cfg.question {
        Question::RankRBipartite => known_bipartite(shape, cfg.k, g).mat().clone(),
        Question::MultipartiteK => known_multipartite(shape, g).into_mat(),
    };
    let side = match cfg.question {
        Question::RankRBipartite => shape.total() * shape.total(),
        Question::MultipartiteK => shape.total(),
    };
    match family {
        TrialFamily::InjectedKnownForm => (base(g), None),
        TrialFamily::PerturbedKnownForm => {
            let b = base(g);
            let eps = 10f64.powf(-4.0 + 3.0 * g.random::<f64>());
            (perturb(&b, eps, g), Some(eps))
        }
        TrialFamily::RandomInvertible => (gaussian_mat(side, side, g), None),
    }
}

/// `sum_{i<r} |v_i><w_i|` with Schmidt rank `k` row and column vectors.
fn rank_r_input(shape: &Shape, k: usize, r: usize, g: &mut SeededRng) -> Opr<f64> {
    let mut acc = Opr::zeros(shape.clone(), shape.clone());
    for _ in 0..r {
        let v = sr_k_ket::<f64, _>(shape, k, g).expect("k validated");
        let w = sr_k_ket::<f64, _>(shape, k, g).expect("k validated");
        acc = acc.add(&v.outer(&w).scale(scalar(g))).expect("same shape");
    }
    acc
}

/// `(A_1 (x) A_2 (x) A_3) |W>` with Gaussian `A_i`.
fn w_class(g: &mut SeededRng) -> CVec<f64> {
    let mut w = CVec::from_element(8, c0());
    let s = cr(1.0 / 3f64.sqrt());
    w[1] = s;
    w[2] = s;
    w[4] = s;
    let a = (0..3)
        .map(|_| gaussian_mat::<f64, _>(2, 2, g))
        .reduce(|a, b| linalg::kron(&a, &b))
        .expect("three factors");
    a * w
}

/// Largest property violation of `map` over the trial's test inputs.
fn violation(cfg: &SearchConfig, shape: &Shape, map: &CMat<f64>, g: &mut SeededRng) -> f64 {
    let mut worst = 0.0f64;
    match cfg.question {
        Question::RankRBipartite => {
            let phi = SuperOp::new(map.clone(), shape.clone()).expect("dims");
            for _ in 0..cfg.inputs_per_trial {
                let x = rank_r_input(shape, cfg.k, cfg.r, g);
                let y = phi.apply(&x).expect("dims");
                let s = linalg::singular_values(y.mat());
                if s[0] > 0.0 {
                    worst = worst.max(s[cfg.r] / s[0]);
                }
            }
        }
        Question::MultipartiteK if cfg.k == 1 => {
            let l = Opr::square(map.clone(), shape.clone()).expect("dims");
            for _ in 0..cfg.inputs_per_trial {
                let v = product_ket::<f64, _>(shape, g);
                let image = l.apply(&v).expect("dims");
                worst = worst.max(product_leak(&image).unwrap_or(1.0));
            }
        }
        Question::MultipartiteK => {
            let lu = map.clone().lu();
            for _ in 0..cfg.inputs_per_trial {
                let w = w_class(g);
                let v = match lu.solve(&w) {
                    Some(v) => v,
                    None => return f64::INFINITY,
                };
                let n2 = linalg::vec_norm(&v).powi(2);
                let det = hyperdeterminant(&v).expect("eight entries");
                worst = worst.max(det.modulus() / (n2 * n2));
            }
        }
    }
    worst
}

fn known_form_residual(cfg: &SearchConfig, shape: &Shape, map: &CMat<f64>) -> Result<Option<f64>> {
    match cfg.question {
        Question::RankRBipartite => {
            let phi = SuperOp::new(map.clone(), shape.clone())?;
            Ok(match_known_form(&phi, cfg.k, crate::classify::DEFAULT_REALIGN_TOL, false)?.map(|d| d.residual))
        }
        Question::MultipartiteK => {
            let l = Opr::square(map.clone(), shape.clone())?;
            let form = recover_local_form_multipartite(&l, &RecoverOptions::default())?;
            Ok((form.status == RecoverStatus::Recovered).then_some(form.residual))
        }
    }
}

fn run_trial(cfg: &SearchConfig, shape: &Shape, index: usize) -> Result<(TrialRecord, CMat<f64>)> {
    let seed = cfg.seed.wrapping_add(index as u64);
    let mut g = rng(seed);
    let (map, epsilon) = trial_map(cfg, shape, index, &mut g);
    let v = violation(cfg, shape, &map, &mut g);
    let preserver = v <= cfg.tol;
    let (known_form, known_residual) = if preserver {
        let res = known_form_residual(cfg, shape, &map).unwrap_or(None);
        (Some(res.is_some_and(|r| r <= cfg.known_tol)), res)
    } else {
        (None, None)
    };
    Ok((
        TrialRecord {
            index,
            seed,
            family: TrialFamily::of(index),
            epsilon,
            violation: v,
            preserver,
            known_form,
            known_residual,
        },
        map,
    ))
}

fn map_file(cfg: &SearchConfig, shape: &Shape, map: &CMat<f64>) -> OprFile {
    let s = match cfg.question {
        Question::RankRBipartite => SuperOp::new(map.clone(), shape.clone()).expect("dims").as_opr(),
        Question::MultipartiteK => Opr::square(map.clone(), shape.clone()).expect("dims"),
    };
    OprFile::from_opr(&s)
}

/// Randomized search for preservers outside the known form.
///
/// Trial `i` uses seed `seed + i`: it builds a map (see [`TrialFamily`]),
/// measures the property violation over `inputs_per_trial` test inputs, and,
/// when the violation is at most `tol`, matches the map against the known
/// form. A preserver that does not match is logged as a candidate; the
/// test is sampled, so a candidate is a lead to replay and inspect, never a
/// proof. For `rank_r_bipartite` the violation is `s_{r+1} / s_1` of the
/// image, a necessary condition; for `multipartite_k` with `k = 2` on
/// `(2,2,2)` it is `|Det(L^{-1} w)| / ||L^{-1} w||^4` over tensors `w` of
/// rank three, which is nonzero exactly when a rank-two tensor maps to `w`.
pub fn counterexample_search(cfg: &SearchConfig) -> Result<SearchReport> {
    let shape = validate(cfg)?;
    let records: Vec<(TrialRecord, CMat<f64>)> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| run_trial(cfg, &shape, i))
        .collect::<Result<_>>()?;
    let mut report = SearchReport {
        config: cfg.clone(),
        trials: cfg.trials,
        preservers: 0,
        known_form_matches: 0,
        injected: 0,
        injected_recognized: 0,
        rejected: 0,
        candidates: Vec::new(),
        best_violation: None,
    };
    for (rec, map) in records {
        let known = rec.known_form == Some(true);
        if rec.preserver {
            report.preservers += 1;
        } else {
            report.rejected += 1;
        }
        if known {
            report.known_form_matches += 1;
        } else {
            report.best_violation = Some(report.best_violation.map_or(rec.violation, |b| b.min(rec.violation)));
        }
        if rec.family == TrialFamily::InjectedKnownForm {
            report.injected += 1;
            if rec.preserver && known {
                report.injected_recognized += 1;
            }
        }
        if rec.preserver && !known {
            report.candidates.push(Candidate {
                map: map_file(cfg, &shape, &map),
                record: rec,
            });
        }
    }
    Ok(report)
}

/// Rebuilds trial `index` of `cfg` from its seed.
pub fn replay_trial(cfg: &SearchConfig, index: usize) -> Result<TrialRecord> {
    let shape = validate(cfg)?;
    if index >= cfg.trials {
        return Err(Error::format("index", format!("trial {index} outside 0..{}", cfg.trials)));
    }
    run_trial(cfg, &shape, index).map(|(r, _)| r)
}

/// Whether a candidate replays to the same map and a bit-identical violation.
pub fn verify_candidate(cfg: &SearchConfig, cand: &Candidate) -> Result<bool> {
    let shape = validate(cfg)?;
    let (rec, map) = run_trial(cfg, &shape, cand.record.index)?;
    let file = map_file(cfg, &shape, &map);
    Ok(rec.violation.to_bits() == cand.record.violation.to_bits()
        && rec.seed == cand.record.seed
        && file.re == cand.map.re
        && file.im == cand.map.im)
}
