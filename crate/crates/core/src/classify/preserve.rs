use rayon::prelude::*;

use super::{classify_local_form, product_probes, proper_k, ClassifyOptions, LocalFormReport};
use crate::error::{Error, Result};
use crate::linalg;
use crate::norms::bipartite_square;
use crate::scalar::Real;
use crate::tensor::sample::{rng, sr_k_ket};
use crate::tensor::{vec_to_op, Cut, Ket, Opr};

/// Outcome of the sampled test `L S_k ⊆ S_k`.
#[derive(Clone, Debug)]
pub struct PreservationReport<T: Real> {
    pub k: usize,
    pub samples: usize,
    /// Largest `a_{k+1} / a_1` over all images.
    pub max_leak: T,
    pub verdict: bool,
    pub worst_input: Ket<T>,
    /// Schmidt coefficients of `L` applied to the worst input.
    pub worst_image_coeffs: Vec<T>,
}

/// Relative `(k+1)`-th Schmidt coefficient of `w`; zero for images at the
/// roundoff floor `floor`, which lie in `S_k` as the scalar zero.
pub fn image_leak<T: Real>(w: &Ket<T>, k: usize, floor: T) -> (T, Vec<T>) {
    if w.norm() <= floor {
        return (T::zero(), Vec::new());
    }
    let a = vec_to_op(w, &Cut::bipartite()).expect("bipartite");
    let s = linalg::singular_values(a.mat());
    let leak = if s.len() > k && s[0] > T::zero() { s[k] / s[0] } else { T::zero() };
    (leak, s)
}

/// Sampled necessary test for `L S_k ⊆ S_k`.
///
/// Inputs are the deterministic product probes followed by `n_samples` random
/// kets of Schmidt rank `1 + (i mod k)`, drawn with seed `seed + i`. A leak
/// above `tol` certifies a violation; a clean run is evidence only.
pub fn check_schmidt_rank_preservation<T: Real>(
    l: &Opr<T>,
    k: usize,
    n_samples: usize,
    tol: f64,
    seed: u64,
) -> Result<PreservationReport<T>> {
    let shape = bipartite_square(l)?;
    proper_k(&shape, k)?;
    let probes = product_probes::<T>(&shape);
    let randoms: Vec<Ket<T>> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut g = rng(seed.wrapping_add(i as u64));
            sr_k_ket(&shape, 1 + i % k, &mut g).expect("k validated")
        })
        .collect();
    let floor = l.frobenius_norm() * T::default_epsilon() * T::lit(100.0);
    let inputs: Vec<Ket<T>> = probes.into_iter().chain(randoms).collect();
    let leaks: Vec<(T, Vec<T>)> = inputs
        .par_iter()
        .map(|v| {
            let w = l.apply(v).expect("shapes agree");
            image_leak(&w, k, floor * v.norm())
        })
        .collect();
    let mut worst = 0;
    for (i, (leak, _)) in leaks.iter().enumerate() {
        if *leak > leaks[worst].0 {
            worst = i;
        }
    }
    let max_leak = leaks[worst].0;
    Ok(PreservationReport {
        k,
        samples: inputs.len(),
        max_leak,
        verdict: max_leak <= T::lit(tol),
        worst_input: inputs[worst].clone(),
        worst_image_coeffs: leaks[worst].1.clone(),
    })
}

/// Both sides of the equivalence "preserves `S_k`" vs "has local form".
#[derive(Clone, Debug)]
pub struct ThmMainRecord<T: Real> {
    pub condition_number: f64,
    pub local_form: LocalFormReport<T>,
    pub preservation: PreservationReport<T>,
    /// Whether the two verdicts agree.
    pub consistent: bool,
}

/// Cross-checks the structural classifier against sampled preservation.
/// Fails with [`Error::InvertibilityUnknown`] when `cond(L)` exceeds the bound,
/// since the equivalence needs `L` invertible.
pub fn verify_thm_main<T: Real>(l: &Opr<T>, k: usize, opts: &ClassifyOptions) -> Result<ThmMainRecord<T>> {
    let shape = bipartite_square(l)?;
    proper_k(&shape, k)?;
    let condition_number = l.condition_number();
    if !(condition_number <= opts.cond_bound) {
        return Err(Error::InvertibilityUnknown {
            condition: condition_number,
            bound: opts.cond_bound,
        });
    }
    let local_form = classify_local_form(l, opts.realign_tol)?;
    let preservation = check_schmidt_rank_preservation(l, k, opts.samples, opts.tol, opts.seed)?;
    let consistent = local_form.is_local() == preservation.verdict;
    Ok(ThmMainRecord {
        condition_number,
        local_form,
        preservation,
        consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMat;
    use crate::scalar::cr;
    use crate::tensor::sample::{haar_unitary, invertible_opr};
    use crate::tensor::{swap_operator, Permutation, Shape};
    use nalgebra::Complex;

    fn sh(d: &[usize]) -> Shape {
        Shape::new(d.to_vec()).unwrap()
    }

    fn local(a: &Opr<f64>, b: &Opr<f64>) -> Opr<f64> {
        let s = sh(&[a.mat().nrows(), b.mat().nrows()]);
        a.kron(b).reshaped(s.clone(), s).unwrap()
    }

    fn cnot() -> Opr<f64> {
        let mut m = CMat::<f64>::identity(4, 4);
        m[(2, 2)] = cr(0.0);
        m[(3, 3)] = cr(0.0);
        m[(2, 3)] = cr(1.0);
        m[(3, 2)] = cr(1.0);
        Opr::square(m, sh(&[2, 2])).unwrap()
    }

    pub(crate) fn singular_counterexample() -> Opr<f64> {
        // E11 (x) E11 + E12 (x) E12
        let mut m = CMat::<f64>::zeros(4, 4);
        m[(0, 0)] = cr(1.0);
        m[(0, 3)] = cr(1.0);
        Opr::square(m, sh(&[2, 2])).unwrap()
    }

    #[test]
    fn local_unitaries_preserve() {
        let s = sh(&[3]);
        let mut g = rng(1);
        let l = local(&haar_unitary(&s, &mut g), &haar_unitary(&s, &mut g));
        let r = check_schmidt_rank_preservation(&l, 1, 200, 1e-8, 0).unwrap();
        assert!(r.verdict && r.max_leak <= 1e-10);
        assert_eq!(r.samples, 200 + 9 + 9 + 9);
    }

    #[test]
    fn cnot_violation_at_plus_one() {
        let r = check_schmidt_rank_preservation(&cnot(), 1, 200, 1e-8, 0).unwrap();
        assert!(!r.verdict);
        // oracle: CNOT (|+> (x) |1>) is a Bell state, leak exactly 1
        let h = 0.5f64.sqrt();
        let plus_one = Ket::from_slice(
            &[2, 2],
            &[Complex::new(h, 0.0), Complex::new(0.0, 0.0), Complex::new(h, 0.0), Complex::new(0.0, 0.0)],
        )
        .unwrap();
        let image = cnot().apply(&plus_one).unwrap();
        assert!((image.amps()[0].re - h).abs() < 1e-15 && (image.amps()[3].re - h).abs() < 1e-15);
        assert!((r.max_leak - 1.0).abs() < 1e-12);
        assert!((r.worst_input.inner(&plus_one).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singular_counterexample_preserves_but_is_gated() {
        let l = singular_counterexample();
        let r = check_schmidt_rank_preservation(&l, 1, 200, 1e-8, 0).unwrap();
        assert!(r.verdict && r.max_leak <= 1e-10);
        assert!(!classify_local_form(&l, 1e-7).unwrap().is_local());
        assert!(matches!(
            verify_thm_main(&l, 1, &ClassifyOptions::default()),
            Err(Error::InvertibilityUnknown { .. })
        ));
    }

    #[test]
    fn thm_main_on_constructed_and_random() {
        let s = sh(&[3]);
        let shape = sh(&[3, 3]);
        let mut g = rng(7);
        let p = invertible_opr::<f64, _>(&s, 1e3, &mut g).unwrap();
        let q = invertible_opr::<f64, _>(&s, 1e3, &mut g).unwrap();
        let swap = swap_operator::<f64>(&Permutation::transposition(2, 0, 1), &shape).unwrap();
        let l = swap.compose(&local(&p, &q)).unwrap();
        let rec = verify_thm_main(&l, 2, &ClassifyOptions::default()).unwrap();
        assert!(rec.consistent && rec.local_form.is_local() && rec.preservation.verdict);

        let dense = invertible_opr::<f64, _>(&shape, 1e6, &mut g).unwrap();
        let rec = verify_thm_main(&dense, 1, &ClassifyOptions::default()).unwrap();
        assert!(rec.consistent && !rec.local_form.is_local() && !rec.preservation.verdict);
        assert!(rec.preservation.max_leak > 0.1);
    }

    #[test]
    fn k_must_be_proper() {
        let l = Opr::<f64>::identity(sh(&[2, 2]));
        assert!(matches!(
            check_schmidt_rank_preservation(&l, 2, 10, 1e-8, 0),
            Err(Error::KOutOfRange { .. })
        ));
    }
}
