//! The acceptance suite: twelve end-to-end checks with pinned tolerances and
//! time budgets. Shared by the `acceptance` test target and `sepkit selftest`.

use std::time::{Duration, Instant};

use nalgebra::ComplexField;
use serde::Serialize;

use crate::classify::{
    check_schmidt_rank_preservation, classify_cp_sk_preserver, classify_local_form, classify_norm_isometry,
    sep_isometry_implies_unitary_check, verify_thm_main, ClassifyOptions, CpVerdict, IsometryOutcome, LocalVerdict,
    SuperOp,
};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::multipartite::{
    gme, gme_invariance_check, product_leak, recover_local_form_multipartite, separable_sum_test, FactorList,
    GmeOptions, RecoverOptions, RecoverStatus,
};
use crate::norms::{operator_s_norm, s_norm, SeesawOptions};
use crate::oracle::{brute_force_operator_s_norm, counterexample_search, grid_gme, replay_trial, OracleConfig,
    Question, SearchConfig};
use crate::scalar::{c0, cr};
use crate::tensor::sample::{
    gaussian, gaussian_opr, haar_ket, haar_unitary, invertible_opr, random_unit_vec, rng, sr_k_ket, SeededRng,
};
use crate::tensor::{swap_operator, Cut, Ket, Opr, Permutation, Shape};

/// Outcome of one criterion.
#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed_secs: f64,
    pub budget_secs: Option<f64>,
}

impl CriterionResult {
    /// `PASS [3] title (1.2s): detail`.
    pub fn line(&self) -> String {
        format!(
            "{} [{}] {} ({:.1}s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.elapsed_secs,
            self.detail
        )
    }
}

pub const CRITERIA: [u32; 12] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12];

type Check = fn() -> Result<(bool, String)>;

fn table(id: u32) -> Option<(&'static str, Option<u64>, Check)> {
    Some(match id {
        1 => ("s(k) closed form vs sampled sup", Some(10), c1_closed_form),
        2 => ("S(k) see-saw vs brute-force oracle", Some(120), c2_seesaw_oracle),
        3 => ("maximally entangled anchors", None, c3_max_entangled),
        4 => ("local form <=> Schmidt-rank preservation", Some(300), c4_local_equivalence),
        5 => ("singular counterexample is gated", None, c5_singular),
        6 => ("partial transpose anomaly at k = 1", Some(300), c6_partial_transpose),
        7 => ("single-Kraus collapse of local conjugations", None, c7_kraus),
        8 => ("separable sums", None, c8_separable_sum),
        9 => ("multipartite local-form recovery", Some(120), c9_recovery),
        10 => ("GME anchors and invariance", None, c10_gme),
        11 => ("product-length isometries are unitary", None, c11_lemma),
        12 => ("counterexample harness soundness", Some(600), c12_search),
        _ => return None,
    })
}

/// Runs criterion `id`. A criterion that errors or overruns its budget fails.
pub fn run(id: u32) -> Result<CriterionResult> {
    let (title, budget, check) =
        table(id).ok_or_else(|| Error::format("criterion", format!("no criterion {id}, expected 1..=12")))?;
    let start = Instant::now();
    let (ok, mut detail) = match check() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    let elapsed = start.elapsed();
    let over = budget.is_some_and(|b| elapsed > Duration::from_secs(b));
    if over {
        detail.push_str(&format!("; over budget {}s", budget.unwrap_or(0)));
    }
    Ok(CriterionResult {
        id,
        title,
        passed: ok && !over,
        detail,
        elapsed_secs: elapsed.as_secs_f64(),
        budget_secs: budget.map(|b| b as f64),
    })
}

pub fn run_all() -> Vec<CriterionResult> {
    CRITERIA.iter().map(|&id| run(id).expect("listed criterion")).collect()
}

fn sh(d: &[usize]) -> Shape {
    Shape::new(d.to_vec()).expect("valid dims")
}

fn max_entangled(d: usize) -> Ket<f64> {
    let mut amps = vec![c0(); d * d];
    for i in 0..d {
        amps[i * d + i] = cr(1.0 / (d as f64).sqrt());
    }
    Ket::from_slice(&[d, d], &amps).expect("dims")
}

/// `P (x) Q`, or `S (P (x) Q)` when `swap`, with well-conditioned Gaussian factors.
fn local_operator(shape: &Shape, swap: bool, g: &mut SeededRng) -> Opr<f64> {
    let p = invertible_opr::<f64, _>(&sh(&[shape.dim(0)]), 20.0, g).expect("factor");
    let q = invertible_opr::<f64, _>(&sh(&[shape.dim(1)]), 20.0, g).expect("factor");
    let pq = Opr::square(linalg::kron(p.mat(), q.mat()), shape.clone()).expect("dims");
    if swap {
        swap_operator(&Permutation::transposition(2, 0, 1), shape)
            .and_then(|s| s.compose(&pq))
            .expect("square")
    } else {
        pq
    }
}

fn c1_closed_form() -> Result<(bool, String)> {
    const SAMPLES: usize = 10_000;
    const SUP_TOL: f64 = 1e-12;
    const WITNESS_TOL: f64 = 1e-10;
    let shape = sh(&[3, 3]);
    let cut = Cut::bipartite();
    let (mut worst_gap, mut worst_witness) = (f64::INFINITY, 0.0f64);
    for i in 0..50u64 {
        let v: Ket<f64> = haar_ket(&shape, &mut rng(i));
        for k in 1..=2 {
            let s = s_norm(&v, k, &cut)?;
            let mut g = rng(10_000 + 10 * i + k as u64);
            let mut best = 0.0f64;
            for j in 0..SAMPLES {
                let w = sr_k_ket::<f64, _>(&shape, 1 + j % k, &mut g)?;
                best = best.max(w.inner(&v).modulus());
            }
            worst_gap = worst_gap.min(s.value - best);
            worst_witness = worst_witness.max((s.witness.inner(&v).modulus() - s.value).abs());
        }
    }
    Ok((
        worst_gap >= -SUP_TOL && worst_witness <= WITNESS_TOL,
        format!("min(s_norm - sampled sup) = {worst_gap:.3e}, max witness error = {worst_witness:.3e}"),
    ))
}

fn c2_seesaw_oracle() -> Result<(bool, String)> {
    const AGREE: f64 = 1e-4;
    const BOUND: f64 = 1e-9;
    let (mut worst, mut bound_violation, mut monotone, mut runs) = (0.0f64, 0.0f64, true, 0);
    for dims in [[2, 2], [3, 3]] {
        let shape = sh(&dims);
        for k in 1..=2 {
            for i in 0..20u64 {
                let x: Opr<f64> = gaussian_opr(&shape, &shape, &mut rng(100 * k as u64 + i));
                let s = operator_s_norm(&x, k, &SeesawOptions::default())?;
                let o = brute_force_operator_s_norm(
                    &x,
                    k,
                    &OracleConfig {
                        seed: i,
                        ..OracleConfig::default()
                    },
                )?;
                worst = worst.max((s.value - o.value).abs());
                bound_violation = bound_violation.max(o.value - x.operator_norm());
                monotone &= s.all_monotone;
                runs += 1;
            }
        }
    }
    Ok((
        worst <= AGREE && bound_violation <= BOUND && monotone,
        format!(
            "{runs} operators: max |seesaw - oracle| = {worst:.3e}, max(oracle - ||X||) = {bound_violation:.3e}, all traces monotone = {monotone}"
        ),
    ))
}

fn c3_max_entangled() -> Result<(bool, String)> {
    const EXACT: f64 = 1e-12;
    const AGREE: f64 = 1e-4;
    let (mut vec_err, mut op_err, mut oracle_err) = (0.0f64, 0.0f64, 0.0f64);
    for d in 2..=3 {
        let phi = max_entangled(d);
        let proj = phi.outer(&phi);
        for k in 1..=d {
            let expect = k as f64 / d as f64;
            vec_err = vec_err.max((s_norm(&phi, k, &Cut::bipartite())?.value - expect.sqrt()).abs());
            op_err = op_err.max((operator_s_norm(&proj, k, &SeesawOptions::default())?.value - expect).abs());
            let o = brute_force_operator_s_norm(&proj, k, &OracleConfig::default())?;
            oracle_err = oracle_err.max((o.value - expect).abs());
        }
    }
    Ok((
        vec_err <= EXACT && op_err <= AGREE && oracle_err <= AGREE,
        format!("s(k) error {vec_err:.2e}, S(k) see-saw error {op_err:.2e}, oracle error {oracle_err:.2e}"),
    ))
}

fn c4_local_equivalence() -> Result<(bool, String)> {
    let shape = sh(&[3, 3]);
    let opts = ClassifyOptions::default();
    let mut disagreements = Vec::new();
    for i in 0..200u64 {
        let mut g = rng(i);
        let l = local_operator(&shape, i % 2 == 1, &mut g);
        for k in 1..=2 {
            let rec = verify_thm_main(&l, k, &ClassifyOptions { seed: i, ..opts.clone() })?;
            if !(rec.local_form.is_local() && rec.preservation.verdict) {
                disagreements.push(format!("local #{i} k={k}"));
            }
        }
    }
    for i in 0..200u64 {
        let l: Opr<f64> = invertible_opr(&shape, 1e4, &mut rng(5000 + i))?;
        for k in 1..=2 {
            let rec = verify_thm_main(&l, k, &ClassifyOptions { seed: i, ..opts.clone() })?;
            if rec.local_form.verdict != LocalVerdict::Neither || rec.preservation.verdict {
                disagreements.push(format!("dense #{i} k={k}"));
            }
        }
    }
    Ok((
        disagreements.is_empty(),
        format!(
            "800 checks (400 operators x k in {{1,2}}), disagreements: {}",
            if disagreements.is_empty() { "none".to_string() } else { disagreements.join(", ") }
        ),
    ))
}

fn c5_singular() -> Result<(bool, String)> {
    const LEAK: f64 = 1e-10;
    let shape = sh(&[2, 2]);
    let mut m = CMat::<f64>::zeros(4, 4);
    // E11 (x) E11 + E12 (x) E12: |1>|1> <- <1|<1| and <2|<2|
    m[(0, 0)] = cr(1.0);
    m[(0, 3)] = cr(1.0);
    let l = Opr::square(m, shape)?;
    let pres = check_schmidt_rank_preservation(&l, 1, 500, LEAK, 0)?;
    let form = classify_local_form(&l, crate::classify::DEFAULT_REALIGN_TOL)?;
    let gated = matches!(
        verify_thm_main(&l, 1, &ClassifyOptions::default()),
        Err(Error::InvertibilityUnknown { .. })
    );
    Ok((
        pres.max_leak <= LEAK && pres.verdict && form.verdict == LocalVerdict::Neither && gated,
        format!(
            "max_leak = {:.1e} over {} inputs, verdict {:?}, invertibility gate = {gated}",
            pres.max_leak, pres.samples, form.verdict
        ),
    ))
}

fn c6_partial_transpose() -> Result<(bool, String)> {
    const PRESERVE: f64 = 2e-6;
    const GAP: f64 = 1e-3;
    const AGREE: f64 = 1e-4;
    let shape = sh(&[3, 3]);
    let pt = SuperOp::<f64>::partial_transpose(shape.clone())?;
    let seesaw = SeesawOptions::default();
    let mut worst = 0.0f64;
    for i in 0..100u64 {
        let x: Opr<f64> = gaussian_opr(&shape, &shape, &mut rng(i));
        let a = operator_s_norm(&x, 1, &seesaw)?.value;
        let b = operator_s_norm(&pt.apply(&x)?, 1, &seesaw)?.value;
        worst = worst.max((a - b).abs());
    }
    let opts = ClassifyOptions::default();
    let k1 = classify_norm_isometry(&pt, 1, &opts)?.is_isometry();
    let IsometryOutcome::NotIsometry(w) = classify_norm_isometry(&pt, 2, &opts)? else {
        return Ok((false, format!("k=1 deviation {worst:.2e}; k=2 wrongly classified as isometry")));
    };
    let cfg = OracleConfig::default();
    let ox = brute_force_operator_s_norm(&w.x, 2, &cfg)?.value;
    let oy = brute_force_operator_s_norm(&w.phi_x, 2, &cfg)?.value;
    let oracle_gap = (oy - ox).abs();
    let agree = (ox - w.norm_x).abs().max((oy - w.norm_phi_x).abs());
    Ok((
        worst <= PRESERVE && k1 && w.gap > GAP && oracle_gap > GAP && agree <= AGREE,
        format!(
            "k=1: max deviation {worst:.2e} on 100 operators, isometry = {k1}; k=2 witness gap {:.4} (oracle gap {oracle_gap:.4}, see-saw/oracle agreement {agree:.1e})",
            w.gap
        ),
    ))
}

fn c7_kraus() -> Result<(bool, String)> {
    const DEFECT: f64 = 1e-8;
    let shape = sh(&[3, 3]);
    let opts = ClassifyOptions::default();
    let (mut worst, mut failures) = (0.0f64, 0);
    for i in 0..50u64 {
        let l = local_operator(&shape, i % 2 == 1, &mut rng(300 + i));
        let phi = SuperOp::conjugation(&l)?;
        let r = classify_cp_sk_preserver(&phi, 1, &opts)?;
        worst = worst.max(r.proportionality_defect);
        if !(r.verdict == CpVerdict::LocalConjugation && r.proportionality_defect <= DEFECT) {
            failures += 1;
        }
    }
    let dep = classify_cp_sk_preserver(&SuperOp::<f64>::completely_depolarizing(shape), 1, &opts)?;
    let rejected = dep.verdict == CpVerdict::MultipleKrausDirections && dep.witness.is_some();
    Ok((
        failures == 0 && rejected,
        format!(
            "50 conjugations: {failures} failures, max proportionality defect {worst:.2e}; depolarizing rejected with witness (image rank {:?}) = {rejected}",
            dep.witness_image_rank
        ),
    ))
}

fn c8_separable_sum() -> Result<(bool, String)> {
    const TOL: f64 = 1e-8;
    let shape = sh(&[2, 2, 3]);
    let mut failures = Vec::new();
    for d in 0..=3usize {
        for t in 0..1000u64 {
            let mut g = rng(100_000 * d as u64 + t);
            let a: Vec<_> = shape.dims().iter().map(|&n| random_unit_vec::<f64, _>(n, &mut g)).collect();
            let mut parties: Vec<usize> = (0..3).collect();
            rand::seq::SliceRandom::shuffle(parties.as_mut_slice(), &mut g);
            let b: Vec<_> = (0..3)
                .map(|j| {
                    if parties[..d].contains(&j) {
                        random_unit_vec(shape.dim(j), &mut g)
                    } else {
                        let mut c = gaussian::<f64, _>(&mut g);
                        c /= cr(c.modulus());
                        &a[j] * c
                    }
                })
                .collect();
            let rec = separable_sum_test(&FactorList::new(a)?, &FactorList::new(b)?, TOL)?;
            if rec.differ_count != d || !rec.lemma_holds || rec.sum_is_separable != (d <= 1) {
                failures.push(format!("d={d} t={t}"));
            }
        }
    }
    Ok((
        failures.is_empty(),
        format!("4000 trials, failures: {}", if failures.is_empty() { "none".into() } else { failures.join(", ") }),
    ))
}

fn c9_recovery() -> Result<(bool, String)> {
    const RESIDUAL: f64 = 1e-8;
    let shape = sh(&[2, 2, 3]);
    let opts = RecoverOptions::default();
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for i in 0..100u64 {
        let mut g = rng(i);
        let sigma = if i % 2 == 0 { Permutation::identity(3) } else { Permutation::transposition(3, 0, 1) };
        let kron = shape
            .dims()
            .iter()
            .map(|&d| invertible_opr::<f64, _>(&sh(&[d]), 20.0, &mut g).map(Opr::into_mat))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .reduce(|a, b| linalg::kron(&a, &b))
            .expect("three factors");
        let l = swap_operator(&sigma, &shape)?.compose(&Opr::square(kron, shape.clone())?)?;
        let form = recover_local_form_multipartite(&l, &opts)?;
        worst = worst.max(form.residual);
        if form.status != RecoverStatus::Recovered || form.sigma.as_ref() != Some(&sigma) || form.residual > RESIDUAL {
            failures.push(format!("#{i}"));
        }
    }
    // CNOT on parties 1,2 and on parties 2,3 (control |2>, flip |1> <-> |2>)
    let cnot = |d_t: usize| {
        let n = 2 * d_t;
        let mut m = CMat::<f64>::identity(n, n);
        for a in 0..2 {
            for b in 0..2 {
                m[(d_t + a, d_t + b)] = cr(if a == b { 0.0 } else { 1.0 });
            }
        }
        for a in 2..d_t {
            m[(d_t + a, d_t + a)] = cr(1.0);
        }
        m
    };
    let ops = [
        linalg::kron(&cnot(2), &CMat::identity(3, 3)),
        linalg::kron(&CMat::identity(2, 2), &cnot(3)),
    ];
    let mut rejected = 0;
    for m in ops {
        let l = Opr::square(m, shape.clone())?;
        let form = recover_local_form_multipartite(&l, &opts)?;
        if let (RecoverStatus::NotSeparabilityPreserving, Some(w)) = (form.status, form.witness.as_ref()) {
            let input_leak = product_leak(&w.input)?;
            let image_leak = product_leak(&l.apply(&w.input)?)?;
            if input_leak <= 1e-12 && image_leak > 1e-3 {
                rejected += 1;
            }
        }
    }
    Ok((
        failures.is_empty() && rejected == 2,
        format!(
            "100 round trips, max residual {worst:.2e}, failures: {}; controlled-NOT operators rejected with witnesses: {rejected}/2",
            if failures.is_empty() { "none".into() } else { failures.join(", ") }
        ),
    ))
}

fn c10_gme() -> Result<(bool, String)> {
    const GHZ: f64 = 1e-6;
    const PRODUCT: f64 = 1e-10;
    const IDENTITY: f64 = 2e-6;
    const INVARIANCE: f64 = 1e-6;
    let opts = GmeOptions::default();
    let shape = sh(&[2, 2, 2]);
    let h = 0.5f64.sqrt();
    let mut amps = vec![c0(); 8];
    amps[0] = cr(h);
    amps[7] = cr(h);
    let ghz = Ket::from_slice(&[2, 2, 2], &amps)?;
    let e_ghz = gme(&ghz, &opts)?.e;
    let e_grid = grid_gme(&ghz, 24)?.e;
    let product = crate::tensor::sample::product_ket::<f64, _>(&sh(&[2, 3, 2]), &mut rng(1));
    let e_prod = gme(&product, &opts)?.e;
    let mut id_err = 0.0f64;
    for i in 0..50u64 {
        let v: Ket<f64> = haar_ket(&sh(&[3, 3]), &mut rng(i));
        let s = s_norm(&v, 1, &Cut::bipartite())?.value;
        id_err = id_err.max((gme(&v, &opts)?.e - (1.0 - s * s)).abs());
    }
    let mut inv = 0.0f64;
    let mut all_local = true;
    for i in 0..20u64 {
        let mut g = rng(700 + i);
        let u = (0..3)
            .map(|_| haar_unitary::<f64, _>(&sh(&[2]), &mut g).into_mat())
            .reduce(|a, b| linalg::kron(&a, &b))
            .expect("three factors");
        let mut map: Vec<usize> = (0..3).collect();
        rand::seq::SliceRandom::shuffle(map.as_mut_slice(), &mut g);
        let sigma = Permutation::new(map)?;
        let op = swap_operator(&sigma, &shape)?.compose(&Opr::square(u, shape.clone())?)?;
        let rec = gme_invariance_check(&op, 3, INVARIANCE, i)?;
        inv = inv.max(rec.max_deviation);
        all_local &= rec.local_unitary;
    }
    Ok((
        (e_ghz - 0.5).abs() <= GHZ
            && (e_grid - 0.5).abs() <= GHZ
            && e_prod <= PRODUCT
            && id_err <= IDENTITY
            && inv <= INVARIANCE
            && all_local,
        format!(
            "E(GHZ) = {e_ghz:.9} (grid {e_grid:.9}), E(product) = {e_prod:.1e}, bipartite identity error {id_err:.1e}, invariance deviation {inv:.1e} (all recovered as local unitaries: {all_local})"
        ),
    ))
}

fn c11_lemma() -> Result<(bool, String)> {
    const UNITARY: f64 = 1e-10;
    const SEPARATED: f64 = 1e-5;
    let shape = sh(&[2, 3]);
    let (mut u_dev, mut u_gram) = (0.0f64, 0.0f64);
    for i in 0..50u64 {
        let u: Opr<f64> = haar_unitary(&shape, &mut rng(i));
        let r = sep_isometry_implies_unitary_check(&u, 100, UNITARY, i)?;
        u_dev = u_dev.max(r.max_deviation);
        u_gram = u_gram.max(r.gram_defect);
    }
    let (mut p_dev, mut p_gram, mut inconsistent) = (f64::INFINITY, f64::INFINITY, 0);
    for i in 0..50u64 {
        let mut g = rng(1000 + i);
        let u: Opr<f64> = haar_unitary(&shape, &mut g);
        let noise: Opr<f64> = gaussian_opr(&shape, &shape, &mut g);
        let eps = 1e-3 / noise.frobenius_norm();
        let l = u.add(&noise.scale(cr(eps)))?;
        let r = sep_isometry_implies_unitary_check(&l, 100, SEPARATED, i)?;
        p_dev = p_dev.min(r.max_deviation);
        p_gram = p_gram.min(r.gram_defect);
        if !r.consistent {
            inconsistent += 1;
        }
    }
    Ok((
        u_dev <= UNITARY && u_gram <= UNITARY && p_dev > SEPARATED && p_gram > SEPARATED && inconsistent == 0,
        format!(
            "unitaries: max deviation {u_dev:.1e}, max gram {u_gram:.1e}; perturbed: min deviation {p_dev:.1e}, min gram {p_gram:.1e}, inconsistent {inconsistent}"
        ),
    ))
}

fn c12_search() -> Result<(bool, String)> {
    const TRIALS: usize = 10_000;
    let configs = [
        SearchConfig {
            question: Question::MultipartiteK,
            shape: vec![2, 2, 2],
            k: 2,
            trials: TRIALS,
            seed: 1,
            ..SearchConfig::default()
        },
        SearchConfig {
            question: Question::RankRBipartite,
            shape: vec![3, 3],
            k: 1,
            r: 2,
            trials: TRIALS,
            seed: 1,
            ..SearchConfig::default()
        },
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for cfg in configs {
        let r = counterexample_search(&cfg)?;
        let replay_stable = [0usize, 1, 7, TRIALS - 1]
            .iter()
            .map(|&i| Ok(replay_trial(&cfg, i)? == replay_trial(&cfg, i)?))
            .collect::<Result<Vec<bool>>>()?
            .into_iter()
            .all(|b| b);
        let candidates_replay = r
            .candidates
            .iter()
            .map(|c| crate::oracle::verify_candidate(&cfg, c))
            .collect::<Result<Vec<bool>>>()?
            .into_iter()
            .all(|b| b);
        ok &= r.sound() && replay_stable && candidates_replay;
        parts.push(format!(
            "{}: {} candidates, injected recognized {}/{}, best violation outside known form {:.2e}",
            cfg.question,
            r.candidates.len(),
            r.injected_recognized,
            r.injected,
            r.best_violation.unwrap_or(f64::NAN)
        ));
    }
    Ok((ok, parts.join("; ")))
}
