use serde_json::{json, Value};

use sepkit::classify::{
    check_schmidt_rank_preservation, classify_cp_sk_preserver, classify_local_form, classify_norm_isometry,
    ClassifyOptions, CpVerdict, IsometryOutcome, LocalFormReport,
};
use sepkit::multipartite::{gme, gme_invariance_check, recover_local_form_multipartite, GmeOptions, RecoverOptions,
    RecoverStatus};
use sepkit::norms::{operator_s_norm, s_norm, schmidt_decompose, SeesawOptions};
use sepkit::oracle::{brute_force_operator_s_norm, counterexample_search, OracleConfig, SearchConfig};
use sepkit::{Cut, Error, Result};

use crate::input::{self, ket_json, opr_json, Item};
use crate::report::{Outcome, EXIT_HYPOTHESIS, EXIT_SELFTEST, EXIT_VIOLATION};
use crate::{ClassifyCommand, Cli, Command, Common, GmeArgs, InputArg, KArgs, NormArgs, SchmidtArgs, SearchArgs,
    SelftestArgs};

pub fn dispatch(cli: &Cli) -> Outcome {
    let c = &cli.common;
    let res = match &cli.command {
        Command::Schmidt(a) => schmidt(a, c),
        Command::Norm(a) => norm(a, c),
        Command::Classify(ClassifyCommand::LocalForm(a)) => local_form(a, c),
        Command::Classify(ClassifyCommand::Preserver(a)) => preserver(a, c),
        Command::Classify(ClassifyCommand::Cp(a)) => cp(a, c),
        Command::Classify(ClassifyCommand::Isometry(a)) => isometry(a, c),
        Command::Gme(a) => gme_cmd(a, c),
        Command::Recover(a) => recover(a, c),
        Command::GmeInvariance(a) => gme_invariance(a, c),
        Command::Search(a) => search(a, c),
        Command::Selftest(a) => selftest(a),
    };
    res.unwrap_or_else(Outcome::from_error)
}

fn classify_opts(c: &Common) -> ClassifyOptions {
    ClassifyOptions {
        realign_tol: c.realign_tol,
        cond_bound: c.cond_bound,
        tol: c.tol,
        samples: c.samples,
        seed: c.seed,
        ..ClassifyOptions::default()
    }
}

fn check_tolerances(c: &Common) -> Result<()> {
    for (field, v) in [("tol", c.tol), ("realign-tol", c.realign_tol)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::Format {
                field: field.into(),
                message: format!("must be a finite nonnegative number, got {v}"),
            });
        }
    }
    if !(c.cond_bound >= 1.0) {
        return Err(Error::Format {
            field: "cond-bound".into(),
            message: format!("must be at least 1, got {}", c.cond_bound),
        });
    }
    Ok(())
}

fn schmidt(a: &SchmidtArgs, c: &Common) -> Result<Outcome> {
    check_tolerances(c)?;
    let v = input::ket(&a.input)?;
    let p = v.shape().factors();
    let left: Vec<usize> = match &a.cut {
        Some(parties) => parties
            .iter()
            .map(|&i| {
                i.checked_sub(1).ok_or_else(|| Error::Format {
                    field: "cut".into(),
                    message: "parties are numbered from 1".into(),
                })
            })
            .collect::<Result<_>>()?,
        None => vec![0],
    };
    let cut = Cut::new(p, &left)?;
    let dec = schmidt_decompose(&v, &cut)?;
    Ok(Outcome::ok(json!({
        "shape": v.shape().dims(),
        "cut_left": cut.left().iter().map(|i| i + 1).collect::<Vec<_>>(),
        "coefficients": dec.coeffs,
        "rank": dec.rank(c.tol),
        "left_vectors": dec.left.iter().map(ket_json).collect::<Vec<_>>(),
        "right_vectors": dec.right.iter().map(ket_json).collect::<Vec<_>>(),
    })))
}

fn norm(a: &NormArgs, c: &Common) -> Result<Outcome> {
    check_tolerances(c)?;
    match input::item(&a.input, a.kind)? {
        Item::Ket(v) => {
            let r = s_norm(&v, a.k, &Cut::bipartite())?;
            Ok(Outcome::ok(json!({
                "kind": "ket",
                "k": a.k,
                "value": r.value,
                "witness": ket_json(&r.witness),
            })))
        }
        Item::Opr(x) => {
            let opts = SeesawOptions {
                restarts: a.restarts.max(1),
                max_iters: a.max_iters.max(1),
                tol: 1e-12,
                seed: c.seed,
            };
            let r = operator_s_norm(&x, a.k, &opts)?;
            let oracle = if a.oracle_samples > 0 {
                let o = brute_force_operator_s_norm(
                    &x,
                    a.k,
                    &OracleConfig {
                        samples: a.oracle_samples,
                        seed: c.seed,
                        ..OracleConfig::default()
                    },
                )?;
                json!({
                    "value": o.value,
                    "samples": o.samples,
                    "polished": o.polished,
                    "warning": o.warning,
                    "difference": r.value - o.value,
                })
            } else {
                Value::Null
            };
            Ok(Outcome::ok(json!({
                "kind": "operator",
                "k": a.k,
                "value": r.value,
                "witness_left": ket_json(&r.witness_left),
                "witness_right": ket_json(&r.witness_right),
                "restarts": r.restarts_used,
                "best_restart": r.best_restart,
                "iterations": r.iterations,
                "converged": r.converged,
                "all_monotone": r.all_monotone,
                "restart_spread": r.spread(),
                "oracle": oracle,
            })))
        }
    }
}

fn local_form_json(r: &LocalFormReport<f64>) -> Value {
    json!({
        "verdict": r.verdict,
        "residual": r.residual,
        "operator_schmidt_coeffs": r.operator_schmidt_coeffs,
        "swapped_coeffs": r.swapped_coeffs,
        "p": r.p.as_ref().map(opr_json),
        "q": r.q.as_ref().map(opr_json),
        "local_unitary": r.is_local_unitary(),
    })
}

fn local_form(a: &InputArg, c: &Common) -> Result<Outcome> {
    check_tolerances(c)?;
    let l = input::opr(&a.input)?;
    let r = classify_local_form(&l, c.realign_tol)?;
    Ok(Outcome::ok(json!({
        "condition_number": l.condition_number(),
        "local_form": local_form_json(&r),
    })))
}

fn preserver(a: &KArgs, c: &Common) -> Result<Outcome> {
    check_tolerances(c)?;
    let l = input::opr(&a.input)?;
    let pres = check_schmidt_rank_preservation(&l, a.k, c.samples, c.tol, c.seed)?;
    let form = classify_local_form(&l, c.realign_tol)?;
    let cond = l.condition_number();
    let result = json!({
        "k": a.k,
        "condition_number": cond,
        "local_form": local_form_json(&form),
        "preservation": {
            "samples": pres.samples,
            "max_leak": pres.max_leak,
            "preserves": pres.verdict,
            "worst_input": ket_json(&pres.worst_input),
            "worst_image_coeffs": pres.worst_image_coeffs,
        },
        "consistent": form.is_local() == pres.verdict,
    });
    Ok(if !pres.verdict {
        Outcome::new(EXIT_VIOLATION, "violation", result)
    } else if !(cond <= c.cond_bound) {
        let mut o = Outcome::new(EXIT_HYPOTHESIS, "invertibility_unknown", result);
        o.error = Some(
            Error::InvertibilityUnknown {
                condition: cond,
                bound: c.cond_bound,
            }
            .to_string(),
        );
        o
    } else {
        Outcome::ok(result)
    })
}

fn cp(a: &KArgs, c: &Common) -> Result<Outcome> {
    check_tolerances(c)?;
    let phi = input::superop(&a.input)?;
    let r = classify_cp_sk_preserver(&phi, a.k, &classify_opts(c))?;
    let result = json!({
        "k": a.k,
        "verdict": r.verdict,
        "kraus_count": r.kraus_count,
        "eigenvalue_weights": r.eigenvalue_weights,
        "proportionality_defect": r.proportionality_defect,
        "trace_preserving": r.trace_preserving,
        "l": r.l.as_ref().map(opr_json),
        "l_condition": r.l_condition,
        "l_unitary": r.l_unitary,
        "local_form": r.local_form.as_ref().map(local_form_json),
        "witness": r.witness.as_ref().map(ket_json),
        "witness_image_rank": r.witness_image_rank,
        "witness_image_schmidt_rank": r.witness_image_schmidt_rank,
    });
    Ok(match r.verdict {
        CpVerdict::LocalConjugation => Outcome::ok(result),
        _ => Outcome::new(EXIT_VIOLATION, "violation", result),
    })
}

fn isometry(a: &KArgs, c: &Common) -> Result<Outcome> {
    check_tolerances(c)?;
    let phi = input::superop(&a.input)?;
    Ok(match classify_norm_isometry(&phi, a.k, &classify_opts(c))? {
        IsometryOutcome::Isometry(d) => Outcome::ok(json!({
            "k": a.k,
            "isometry": true,
            "slots": d.slots,
            "used_transpose": d.used_transpose,
            "used_partial_transpose": d.used_partial_transpose,
            "u": opr_json(&d.u),
            "v": opr_json(&d.v),
            "residual": d.residual,
            "frobenius_defect": d.frobenius_defect,
        })),
        IsometryOutcome::NotIsometry(w) => Outcome::new(
            EXIT_VIOLATION,
            "violation",
            json!({
                "k": a.k,
                "isometry": false,
                "x": opr_json(&w.x),
                "phi_x": opr_json(&w.phi_x),
                "norm_x": w.norm_x,
                "norm_phi_x": w.norm_phi_x,
                "gap": w.gap,
                "certified": w.certified,
                "candidates_tried": w.candidates_tried,
                "frobenius_defect": w.frobenius_defect,
            }),
        ),
    })
}

fn gme_cmd(a: &GmeArgs, c: &Common) -> Result<Outcome> {
    check_tolerances(c)?;
    let v = input::ket(&a.input)?;
    let r = gme(
        &v,
        &GmeOptions {
            restarts: a.restarts.max(1),
            max_iters: a.max_iters.max(1),
            seed: c.seed,
            ..GmeOptions::default()
        },
    )?;
    Ok(Outcome::ok(json!({
        "shape": v.shape().dims(),
        "g": r.g,
        "e": r.e,
        "witness_factors": r.witness.factors().iter().map(|f| {
            json!({"re": f.iter().map(|z| z.re).collect::<Vec<_>>(), "im": f.iter().map(|z| z.im).collect::<Vec<_>>()})
        }).collect::<Vec<_>>(),
        "restarts": r.restarts,
        "best_restart": r.best_restart,
        "iterations": r.iterations,
        "converged": r.converged,
        "all_monotone": r.all_monotone,
    })))
}

fn recover_opts(c: &Common) -> RecoverOptions {
    RecoverOptions {
        tol: c.tol,
        cond_bound: c.cond_bound,
        seed: c.seed,
        ..RecoverOptions::default()
    }
}

fn recover(a: &InputArg, c: &Common) -> Result<Outcome> {
    check_tolerances(c)?;
    let l = input::opr(&a.input)?;
    let f = recover_local_form_multipartite(&l, &recover_opts(c))?;
    let result = json!({
        "status": f.status,
        "sigma": f.sigma.as_ref().map(|s| s.one_based()),
        "factors": f.factors.iter().map(opr_json).collect::<Vec<_>>(),
        "residual": f.residual,
        "condition_number": f.condition_number,
        "attempts": f.attempts,
        "witness": f.witness.as_ref().map(|w| json!({"input": ket_json(&w.input), "leak": w.leak})),
    });
    Ok(match f.status {
        RecoverStatus::Recovered => Outcome::ok(result),
        RecoverStatus::NotSeparabilityPreserving => Outcome::new(EXIT_VIOLATION, "violation", result),
        RecoverStatus::InvertibilityUnknown => {
            let mut o = Outcome::new(EXIT_HYPOTHESIS, "invertibility_unknown", result);
            o.error = Some(
                Error::InvertibilityUnknown {
                    condition: f.condition_number,
                    bound: c.cond_bound,
                }
                .to_string(),
            );
            o
        }
    })
}

fn gme_invariance(a: &InputArg, c: &Common) -> Result<Outcome> {
    check_tolerances(c)?;
    let u = input::opr(&a.input)?;
    let r = gme_invariance_check(&u, c.samples, c.tol, c.seed)?;
    let result = json!({
        "samples": r.samples,
        "max_deviation": r.max_deviation,
        "worst_input": ket_json(&r.worst_input),
        "e_before": r.e_before,
        "e_after": r.e_after,
        "recovered_status": r.recovered.status,
        "local_unitary": r.local_unitary,
        "consistent": r.consistent,
    });
    Ok(if r.max_deviation <= c.tol {
        Outcome::ok(result)
    } else {
        Outcome::new(EXIT_VIOLATION, "violation", result)
    })
}

fn search(a: &SearchArgs, c: &Common) -> Result<Outcome> {
    check_tolerances(c)?;
    let cfg = SearchConfig {
        question: a.question.parse()?,
        shape: a.shape.clone(),
        k: a.k,
        r: a.r,
        trials: a.trials,
        seed: c.seed,
        inputs_per_trial: a.inputs_per_trial,
        tol: c.tol,
        known_tol: a.known_tol,
    };
    let r = counterexample_search(&cfg)?;
    let value = serde_json::to_value(&r).expect("report serializes");
    Ok(if r.candidates.is_empty() {
        Outcome::ok(value)
    } else {
        Outcome::new(EXIT_VIOLATION, "candidates_found", value)
    })
}

fn selftest(a: &SelftestArgs) -> Result<Outcome> {
    let ids = a.only.clone().unwrap_or_else(|| sepkit::acceptance::CRITERIA.to_vec());
    let mut results = Vec::new();
    for id in ids {
        let r = sepkit::acceptance::run(id)?;
        eprintln!("{}", r.line());
        results.push(r);
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    let value = json!({
        "criteria": results,
        "failed": failed,
    });
    Ok(if failed == 0 {
        Outcome::ok(value)
    } else {
        Outcome::new(EXIT_SELFTEST, "failed", value)
    })
}
