use nalgebra::ComplexField;
use rayon::prelude::*;

use super::{contract_except, recover_local_form_multipartite, unit_vec, FactorList, RecoverOptions, RecoverStatus, RecoveredForm};
use crate::error::{Error, Result};
use crate::linalg::{self, CVec};
use crate::norms::schmidt_decompose;
use crate::scalar::Real;
use crate::tensor::sample::{haar_ket, random_unit_vec, rng};
use crate::tensor::{Cut, Ket, Opr};

#[derive(Clone, Debug, PartialEq)]
pub struct GmeOptions {
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for GmeOptions {
    fn default() -> Self {
        GmeOptions {
            restarts: 20,
            max_iters: 300,
            tol: 1e-12,
            seed: 0,
        }
    }
}

/// Best alternating run: `g` is a lower bound on the largest overlap of the
/// normalized input with a unit product state, and `e = 1 - g^2`.
#[derive(Clone, Debug)]
pub struct GmeResult<T: Real> {
    pub g: T,
    pub e: T,
    /// Unit factors with `|<witness|v>| = g`.
    pub witness: FactorList<T>,
    pub restarts: usize,
    /// Sweeps of the winning run.
    pub iterations: usize,
    pub converged: bool,
    /// Overlap after each sweep of the winning run, nondecreasing.
    pub objective_trace: Vec<T>,
    pub best_restart: usize,
    pub all_monotone: bool,
}

struct Run<T: Real> {
    value: T,
    factors: Vec<CVec<T>>,
    trace: Vec<T>,
    iterations: usize,
    converged: bool,
    monotone: bool,
}

fn overlap<T: Real>(v: &Ket<T>, f: &[CVec<T>]) -> T {
    linalg::inner(&f[0], &contract_except(v, f, 0)).modulus()
}

fn alternate<T: Real>(v: &Ket<T>, mut f: Vec<CVec<T>>, opts: &GmeOptions) -> Run<T> {
    let mut value = overlap(v, &f);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut monotone = true;
    for _ in 0..opts.max_iters {
        iterations += 1;
        let start = value;
        for i in 0..f.len() {
            let c = contract_except(v, &f, i);
            let cand = linalg::vec_norm(&c);
            // exact argmax over party i; keep the old factor on roundoff ties
            if cand >= value {
                if let Some(u) = unit_vec(&c) {
                    f[i] = u;
                    value = cand;
                }
            }
        }
        if value < start {
            monotone = false;
        }
        trace.push(value);
        if value - start <= T::lit(opts.tol) {
            converged = true;
            break;
        }
    }
    Run {
        value,
        factors: f,
        trace,
        iterations,
        converged,
        monotone,
    }
}

/// Dominant left singular vector of each single-party unfolding.
fn hosvd_start<T: Real>(v: &Ket<T>) -> Result<Vec<CVec<T>>> {
    let p = v.shape().factors();
    (0..p)
        .map(|i| Ok(schmidt_decompose(v, &Cut::single(p, i)?)?.left[0].amps().clone()))
        .collect()
}

/// Geometric measure of entanglement by alternating party-wise maximization
/// with multistart. Restart 0 starts from the dominant singular vectors of the
/// single-party unfoldings, the rest from random unit factors with seed
/// `seed + r`.
pub fn gme<T: Real>(v: &Ket<T>, opts: &GmeOptions) -> Result<GmeResult<T>> {
    let v = v.normalized().ok_or(Error::ZeroVector)?;
    let restarts = opts.restarts.max(1);
    let shape = v.shape().clone();
    let first = hosvd_start(&v)?;
    let runs: Vec<Run<T>> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let start = if r == 0 {
                first.clone()
            } else {
                let mut g = rng(opts.seed.wrapping_add(r as u64));
                shape.dims().iter().map(|&d| random_unit_vec(d, &mut g)).collect()
            };
            alternate(&v, start, opts)
        })
        .collect();
    let mut best = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.value > runs[best].value {
            best = i;
        }
    }
    let all_monotone = runs.iter().all(|r| r.monotone);
    let run = &runs[best];
    let g = run.value.min(T::one());
    Ok(GmeResult {
        g,
        e: T::one() - g * g,
        witness: FactorList::new(run.factors.clone())?,
        restarts,
        iterations: run.iterations,
        converged: run.converged,
        objective_trace: run.trace.clone(),
        best_restart: best,
        all_monotone,
    })
}

/// Largest change of `E` under `U` over sampled inputs, cross-checked against
/// the local-unitary characterization.
#[derive(Clone, Debug)]
pub struct GmeInvarianceRecord<T: Real> {
    pub samples: usize,
    pub max_deviation: T,
    pub worst_input: Ket<T>,
    pub e_before: T,
    pub e_after: T,
    /// Structural recovery of `U`.
    pub recovered: RecoveredForm<T>,
    /// Recovered with every factor unitary up to a scalar.
    pub local_unitary: bool,
    /// `(max_deviation <= tol) == local_unitary`.
    pub consistent: bool,
}

/// Compares `E(v)` and `E(U v)` on the multipartite probes followed by
/// `n_samples` Haar-random kets drawn with seed `seed + i`.
pub fn gme_invariance_check<T: Real>(
    u: &Opr<T>,
    n_samples: usize,
    tol: f64,
    seed: u64,
) -> Result<GmeInvarianceRecord<T>> {
    let shape = u.col_shape().clone();
    if u.row_shape() != &shape {
        return Err(Error::ShapeMismatch(format!("{} -> {} is not square", shape, u.row_shape())));
    }
    let randoms: Vec<Ket<T>> = (0..n_samples)
        .map(|i| haar_ket(&shape, &mut rng(seed.wrapping_add(i as u64))))
        .collect();
    let inputs: Vec<Ket<T>> = super::multipartite_probes::<T>(&shape).into_iter().chain(randoms).collect();
    let opts = GmeOptions {
        seed,
        ..GmeOptions::default()
    };
    let pairs: Vec<(T, T)> = inputs
        .par_iter()
        .map(|v| {
            let before = gme(v, &opts).map(|r| r.e).unwrap_or(T::zero());
            let image = u.apply(v).expect("shapes agree");
            let after = gme(&image, &opts).map(|r| r.e).unwrap_or(T::zero());
            (before, after)
        })
        .collect();
    let mut worst = 0;
    for (i, (a, b)) in pairs.iter().enumerate() {
        let (wa, wb) = pairs[worst];
        if (*b - *a).abs() > (wb - wa).abs() {
            worst = i;
        }
    }
    let (e_before, e_after) = pairs[worst];
    let max_deviation = (e_after - e_before).abs();
    let recovered = recover_local_form_multipartite(
        u,
        &RecoverOptions {
            seed,
            ..RecoverOptions::default()
        },
    )?;
    let local_unitary = recovered.status == RecoverStatus::Recovered
        && recovered.factors.iter().all(|p| {
            let n = p.mat().nrows() as f64;
            let f = p.frobenius_norm();
            f > T::zero() && p.scale(crate::scalar::cr(T::lit(n.sqrt()) / f)).unitarity_defect() <= T::lit(1e-8)
        });
    Ok(GmeInvarianceRecord {
        samples: inputs.len(),
        max_deviation,
        worst_input: inputs[worst].clone(),
        e_before,
        e_after,
        recovered,
        local_unitary,
        consistent: (max_deviation <= T::lit(tol)) == local_unitary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::s_norm;
    use crate::scalar::cr;
    use crate::tensor::sample::product_ket;
    use crate::tensor::Shape;
    use nalgebra::Complex;

    fn sh(d: &[usize]) -> Shape {
        Shape::new(d.to_vec()).unwrap()
    }

    fn ket(dims: &[usize], amps: &[f64]) -> Ket<f64> {
        let a: Vec<Complex<f64>> = amps.iter().map(|&x| Complex::new(x, 0.0)).collect();
        Ket::from_slice(dims, &a).unwrap()
    }

    /// Dense grid over real product states `(cos a, sin a) (x) ...` on qubits.
    fn grid_g(v: &Ket<f64>, steps: usize) -> f64 {
        let mut best: f64 = 0.0;
        let th = |i: usize| std::f64::consts::PI * i as f64 / steps as f64;
        for i in 0..steps {
            for j in 0..steps {
                for k in 0..steps {
                    let f = |t: f64| CVec::from_vec(vec![cr(t.cos()), cr(t.sin())]);
                    let w = FactorList::new(vec![f(th(i)), f(th(j)), f(th(k))]).unwrap().product();
                    best = best.max(w.inner(v).norm());
                }
            }
        }
        best
    }

    #[test]
    fn product_state_has_zero_measure() {
        let v: Ket<f64> = product_ket(&sh(&[2, 3, 2]), &mut rng(1));
        let r = gme(&v, &GmeOptions::default()).unwrap();
        assert!((r.g - 1.0).abs() < 1e-12 && r.e.abs() < 1e-12);
    }

    #[test]
    fn ghz_and_w_against_grid() {
        let h = 0.5f64.sqrt();
        let mut ghz = vec![0.0; 8];
        ghz[0] = h;
        ghz[7] = h;
        let ghz = ket(&[2, 2, 2], &ghz);
        let r = gme(&ghz, &GmeOptions::default()).unwrap();
        assert!((r.g - h).abs() < 1e-9 && (r.e - 0.5).abs() < 1e-9);
        assert!(r.g >= grid_g(&ghz, 60) - 1e-12);

        let t = 1.0 / 3f64.sqrt();
        let mut w = vec![0.0; 8];
        w[1] = t;
        w[2] = t;
        w[4] = t;
        let w = ket(&[2, 2, 2], &w);
        let r = gme(&w, &GmeOptions::default()).unwrap();
        assert!((r.g * r.g - 4.0 / 9.0).abs() < 1e-9);
        let grid = grid_g(&w, 60);
        assert!(r.g >= grid - 1e-12 && r.g - grid < 5e-3);
    }

    #[test]
    fn witness_overlap_and_monotone_trace() {
        let v: Ket<f64> = haar_ket(&sh(&[2, 2, 3]), &mut rng(5));
        let r = gme(&v, &GmeOptions::default()).unwrap();
        let w = r.witness.product();
        assert!((w.norm() - 1.0).abs() < 1e-12);
        assert!((w.inner(&v).norm() - r.g).abs() < 1e-10);
        assert!(r.all_monotone);
        assert!(r.objective_trace.windows(2).all(|p| p[1] >= p[0]));
    }

    #[test]
    fn bipartite_matches_closed_form() {
        for seed in 0..10 {
            let v: Ket<f64> = haar_ket(&sh(&[3, 3]), &mut rng(seed));
            let r = gme(&v, &GmeOptions::default()).unwrap();
            let s = s_norm(&v, 1, &Cut::bipartite()).unwrap().value;
            assert!((r.e - (1.0 - s * s)).abs() < 2e-6);
        }
    }

    #[test]
    fn invariance_under_swapped_local_unitary_with_phase() {
        let shape = sh(&[2, 2, 3]);
        let mut g = rng(8);
        let lu: Opr<f64> = crate::tensor::sample::local_unitary(&shape, &mut g);
        let sigma = crate::tensor::Permutation::new(vec![1, 0, 2]).unwrap();
        let s = crate::tensor::swap_operator::<f64>(&sigma, &shape).unwrap();
        let u = s.compose(&lu).unwrap().scale(Complex::from_polar(1.0, 0.7));
        let r = gme_invariance_check(&u, 10, 1e-6, 3).unwrap();
        assert!(r.max_deviation <= 1e-6, "deviation {}", r.max_deviation);
        assert!(r.local_unitary && r.consistent);
        assert_eq!(r.recovered.sigma, Some(sigma));
    }

    #[test]
    fn cnot_changes_measure() {
        let mut m = crate::linalg::CMat::<f64>::identity(4, 4);
        m[(2, 2)] = cr(0.0);
        m[(3, 3)] = cr(0.0);
        m[(2, 3)] = cr(1.0);
        m[(3, 2)] = cr(1.0);
        let u = Opr::square(m, sh(&[2, 2])).unwrap();
        let r = gme_invariance_check(&u, 10, 1e-6, 0).unwrap();
        // oracle: CNOT maps the product |+>|1> to a Bell state, E from 0 to 1/2
        assert!((r.max_deviation - 0.5).abs() < 1e-9);
        assert!(!r.local_unitary && r.consistent);
    }
}
