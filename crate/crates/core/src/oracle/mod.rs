//! Brute-force oracles for the optimizers, the rank-one sum harness and the
//! randomized counterexample search.

mod rank_one;
mod search;

pub use rank_one::{rank_one_sum_property, rank_of, RankOneFamily, RankOneReport};
pub use search::{
    counterexample_search, hyperdeterminant, replay_trial, verify_candidate, Candidate, Question, SearchConfig, SearchReport,
    TrialFamily, TrialRecord,
};

use nalgebra::ComplexField;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::norms::bipartite_square;
use crate::scalar::{cr, Real};
use crate::tensor::sample::{gaussian, gaussian_mat, rng};
use crate::tensor::{Ket, Opr};

/// Sample count below which oracle results carry a warning.
pub const RECOMMENDED_SAMPLES: usize = 100_000;

/// Budget for the sampling oracles.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleConfig {
    pub samples: usize,
    /// Best samples handed to the polish, split evenly between the strata.
    pub polish: usize,
    /// Block-coordinate sweeps per polish run.
    pub polish_sweeps: usize,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            samples: RECOMMENDED_SAMPLES,
            polish: 100,
            polish_sweeps: 500,
            seed: 0,
        }
    }
}

/// A lower bound from sampling plus local polish.
#[derive(Clone, Debug)]
pub struct OracleValue<T: Real> {
    pub value: T,
    pub witness_left: Ket<T>,
    pub witness_right: Ket<T>,
    pub samples: usize,
    pub polished: usize,
    /// Set when the budget is below [`RECOMMENDED_SAMPLES`].
    pub warning: Option<String>,
}

/// Factor pair `(A, B)` with `w = vec(A B^T)`, so `SR(w) <= k` by construction.
#[derive(Clone)]
struct Factored<T: Real> {
    a: CMat<T>,
    b: CMat<T>,
}

fn orth<T: Real>(m: &CMat<T>) -> CMat<T> {
    m.clone().qr().q()
}

impl<T: Real> Factored<T> {
    fn vector(&self) -> Option<CVec<T>> {
        let w = &self.a * self.b.transpose();
        let (m, n) = (w.nrows(), w.ncols());
        let v = CVec::from_fn(m * n, |i, _| w[(i / n, i % n)]);
        let norm = linalg::vec_norm(&v);
        (norm > T::zero()).then(|| v * cr(T::one() / norm))
    }

    /// Best `A` for fixed `B`, then best `B` for fixed `A`, against `|<w|t>|`:
    /// each is the projection of `t` onto a subspace of `vec(A B^T)`.
    fn block_steps(&mut self, t: &CVec<T>) {
        let (m, n) = (self.a.nrows(), self.b.nrows());
        let tm = CMat::from_fn(m, n, |i, j| t[i * n + j]);
        let q = orth(&self.b);
        self.a = &tm * q.map(|z| z.conj());
        self.b = q;
        let q = orth(&self.a);
        self.b = (q.adjoint() * &tm).transpose();
        self.a = q;
    }

    /// Factors of the matrix `w` truncated to `k` terms.
    fn from_matrix(w: &CMat<T>, k: usize) -> Self {
        let d = linalg::svd(w);
        let k = k.min(d.s.len());
        let a = CMat::from_fn(w.nrows(), k, |i, j| d.u[(i, j)] * cr(d.s[j]));
        let b = CMat::from_fn(w.ncols(), k, |i, j| d.v_h[(j, i)]);
        Factored { a, b }
    }
}

fn objective<T: Real>(x: &CMat<T>, w: &Factored<T>, y: &Factored<T>) -> T {
    match (w.vector(), y.vector()) {
        (Some(w), Some(y)) => linalg::inner(&w, &(x * y)).modulus(),
        _ => T::zero(),
    }
}

fn random_factored<T: Real, R: Rng + ?Sized>(m: usize, n: usize, k: usize, g: &mut R) -> Factored<T> {
    Factored {
        a: gaussian_mat(m, k, g),
        b: gaussian_mat(n, k, g),
    }
}

/// Perturbed singular vector of `x`, truncated to `k` Schmidt terms.
fn singular_factored<T: Real, R: Rng + ?Sized>(
    v: &CVec<T>,
    m: usize,
    n: usize,
    k: usize,
    g: &mut R,
) -> Factored<T> {
    let noise = T::lit(10f64.powf(-3.0 * g.random::<f64>()));
    let w = CMat::from_fn(m, n, |i, j| v[i * n + j] + gaussian::<T, _>(g) * cr(noise));
    Factored::from_matrix(&w, k)
}

/// Block-coordinate ascent over the four factor matrices; every step is an
/// exact maximization, so the objective never decreases.
fn polish<T: Real>(x: &CMat<T>, mut w: Factored<T>, mut y: Factored<T>, sweeps: usize) -> (T, Factored<T>, Factored<T>) {
    let mut best = objective(x, &w, &y);
    let xh = x.adjoint();
    for _ in 0..sweeps {
        let Some(yv) = y.vector() else { break };
        let mut w2 = w.clone();
        w2.block_steps(&(x * &yv));
        let Some(wv2) = w2.vector() else { break };
        let mut y2 = y.clone();
        y2.block_steps(&(&xh * &wv2));
        let val = objective(x, &w2, &y2);
        if val < best {
            break;
        }
        let gain = val - best;
        best = val;
        w = w2;
        y = y2;
        if gain <= T::lit(1e-15) * best {
            break;
        }
    }
    (best, w, y)
}

/// Brute-force lower bound on `||X||_{S(k)}`. Samples come from two strata:
/// random factor pairs, and perturbed singular pairs of `X` truncated to `k`
/// terms. The best of each stratum are polished by block-coordinate ascent on
/// the factor matrices. Never exceeds the operator norm.
pub fn brute_force_operator_s_norm<T: Real>(x: &Opr<T>, k: usize, cfg: &OracleConfig) -> Result<OracleValue<T>> {
    let shape = bipartite_square(x)?;
    let (m, n) = (shape.dim(0), shape.dim(1));
    if k == 0 || k > m.min(n) {
        return Err(Error::KOutOfRange { k, min: 1, max: m.min(n) });
    }
    if cfg.samples == 0 {
        return Err(Error::format("samples", "must be positive"));
    }
    let xm = x.mat().clone();
    let top = linalg::svd(&xm);
    let (u0, v0) = (top.left(0), top.right(0));
    let chunks = 64usize;
    let per = cfg.samples.div_ceil(chunks);
    let scored: Vec<(usize, T, Factored<T>, Factored<T>)> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut g = rng(cfg.seed.wrapping_add(c as u64));
            let count = per.min(cfg.samples.saturating_sub(c * per));
            let xm = &xm;
            let (u0, v0) = (&u0, &v0);
            (0..count)
                .map(move |i| {
                    let (w, y) = if i % 2 == 0 {
                        (random_factored(m, n, k, &mut g), random_factored(m, n, k, &mut g))
                    } else {
                        (singular_factored(u0, m, n, k, &mut g), singular_factored(v0, m, n, k, &mut g))
                    };
                    (i % 2, objective(xm, &w, &y), w, y)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let keep = cfg.polish.max(2).div_ceil(2);
    let mut chosen = Vec::with_capacity(2 * keep);
    for stratum in 0..2 {
        let mut s: Vec<_> = scored.iter().filter(|e| e.0 == stratum).collect();
        s.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
        chosen.extend(s.into_iter().take(keep).map(|e| (e.2.clone(), e.3.clone())));
    }
    let polished: Vec<(T, Factored<T>, Factored<T>)> = chosen
        .into_par_iter()
        .map(|(w, y)| polish(&xm, w, y, cfg.polish_sweeps))
        .collect();
    let mut best = 0;
    for (i, p) in polished.iter().enumerate() {
        if p.0 > polished[best].0 {
            best = i;
        }
    }
    let (value, w, y) = &polished[best];
    let ket = |f: &Factored<T>| Ket::new(shape.clone(), f.vector().expect("nonzero witness")).expect("length matches");
    Ok(OracleValue {
        value: *value,
        witness_left: ket(w),
        witness_right: ket(y),
        samples: cfg.samples,
        polished: polished.len(),
        warning: (cfg.samples < RECOMMENDED_SAMPLES)
            .then(|| format!("{} samples is below the recommended {RECOMMENDED_SAMPLES}", cfg.samples)),
    })
}

/// Grid lower bound on the largest product-state overlap.
#[derive(Clone, Debug)]
pub struct GridGme<T: Real> {
    pub g: T,
    pub e: T,
    pub points: usize,
}

fn grid_rec<T: Real>(v: &CVec<T>, dims: &[usize], grid: &[CVec<T>]) -> T {
    if dims.len() == 1 {
        return linalg::vec_norm(v);
    }
    let rest = v.len() / 2;
    grid.iter()
        .map(|q| {
            let sub = CVec::from_fn(rest, |i, _| q[0].conj() * v[i] + q[1].conj() * v[rest + i]);
            grid_rec(&sub, &dims[1..], grid)
        })
        .fold(T::zero(), |a, b| a.max(b))
}

/// Dense grid over qubit states `(cos t, e^{i f} sin t)` on every party but
/// the last, where the best vector is the normalized contraction. Needs all
/// parties but the last to be qubits.
pub fn grid_gme<T: Real>(v: &Ket<T>, steps: usize) -> Result<GridGme<T>> {
    let v = v.normalized().ok_or(Error::ZeroVector)?;
    let dims = v.shape().dims().to_vec();
    if dims.len() < 2 || dims[..dims.len() - 1].iter().any(|&d| d != 2) {
        return Err(Error::Unsupported(format!(
            "grid oracle needs qubits on all parties but the last, got {}",
            v.shape()
        )));
    }
    if steps == 0 {
        return Err(Error::format("steps", "must be positive"));
    }
    let mut grid = Vec::with_capacity(steps * 2 * steps + 1);
    let half_pi = std::f64::consts::FRAC_PI_2;
    for i in 0..=steps {
        let t = half_pi * i as f64 / steps as f64;
        let phases = if i == 0 { 1 } else { 4 * steps };
        for j in 0..phases {
            let f = std::f64::consts::TAU * j as f64 / (4 * steps) as f64;
            grid.push(CVec::from_vec(vec![
                cr(T::lit(t.cos())),
                crate::scalar::C::new(T::lit(f.cos() * t.sin()), T::lit(f.sin() * t.sin())),
            ]));
        }
    }
    let outer = dims.len() - 1;
    let g = grid_rec(v.amps(), &dims, &grid).min(T::one());
    Ok(GridGme {
        g,
        e: T::one() - g * g,
        points: grid.len().pow(outer as u32),
    })
}
