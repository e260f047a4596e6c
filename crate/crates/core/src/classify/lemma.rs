use rayon::prelude::*;

use super::product_probes;
use crate::error::{Error, Result};
use crate::norms::bipartite_square;
use crate::scalar::Real;
use crate::tensor::sample::{product_ket, rng};
use crate::tensor::{Ket, Opr};

/// Both sides of "preserves the length of product states" vs "is unitary".
#[derive(Clone, Debug)]
pub struct SepIsometryRecord<T: Real> {
    pub samples: usize,
    /// `max | ||L(a (x) b)|| - 1 |` over unit product states.
    pub max_deviation: T,
    pub worst_input: Ket<T>,
    /// `||L^* L - I||_F`.
    pub gram_defect: T,
    pub product_preserving: bool,
    pub unitary: bool,
    /// Whether the two flags agree.
    pub consistent: bool,
}

/// Samples unit product states (the deterministic probes, then `n_samples`
/// random ones with seed `seed + i`) and compares length preservation with the
/// Gram defect. The Gram threshold is `4 m n tol`, since an operator moving
/// product lengths by at most `tol` can still have a Gram defect of that order.
pub fn sep_isometry_implies_unitary_check<T: Real>(
    l: &Opr<T>,
    n_samples: usize,
    tol: f64,
    seed: u64,
) -> Result<SepIsometryRecord<T>> {
    let shape = bipartite_square(l)?;
    if tol.is_nan() || tol < 0.0 {
        return Err(Error::format("tol", "must be nonnegative"));
    }
    let randoms: Vec<Ket<T>> = (0..n_samples)
        .into_par_iter()
        .map(|i| product_ket(&shape, &mut rng(seed.wrapping_add(i as u64))))
        .collect();
    let inputs: Vec<Ket<T>> = product_probes::<T>(&shape).into_iter().chain(randoms).collect();
    let devs: Vec<T> = inputs
        .par_iter()
        .map(|v| (l.apply(v).expect("shapes agree").norm() - T::one()).abs())
        .collect();
    let mut worst = 0;
    for (i, d) in devs.iter().enumerate() {
        if *d > devs[worst] {
            worst = i;
        }
    }
    let gram_defect = l.unitarity_defect();
    let product_preserving = devs[worst] <= T::lit(tol);
    let coupling = 4.0 * shape.total() as f64;
    let unitary = gram_defect <= T::lit(coupling * tol);
    Ok(SepIsometryRecord {
        samples: inputs.len(),
        max_deviation: devs[worst],
        worst_input: inputs[worst].clone(),
        gram_defect,
        product_preserving,
        unitary,
        consistent: product_preserving == unitary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cr;
    use crate::tensor::sample::{gaussian_opr, haar_unitary};
    use crate::tensor::Shape;

    fn sh(d: &[usize]) -> Shape {
        Shape::new(d.to_vec()).unwrap()
    }

    #[test]
    fn haar_unitary_passes_both() {
        let s = sh(&[3, 3]);
        let u = haar_unitary::<f64, _>(&s, &mut rng(2));
        let r = sep_isometry_implies_unitary_check(&u, 100, 1e-10, 0).unwrap();
        assert!(r.max_deviation <= 1e-10 && r.gram_defect <= 1e-10);
        assert!(r.product_preserving && r.unitary && r.consistent);
    }

    #[test]
    fn scaled_identity() {
        let l = Opr::<f64>::identity(sh(&[3, 3])).scale(cr(1.1));
        let r = sep_isometry_implies_unitary_check(&l, 20, 1e-6, 0).unwrap();
        // oracle: every unit vector grows to 1.1; L*L - I = 0.21 I on dimension 9
        assert!((r.max_deviation - 0.1).abs() < 1e-12);
        assert!((r.gram_defect - 0.21 * 3.0).abs() < 1e-12);
        assert!(!r.product_preserving && !r.unitary && r.consistent);
    }

    #[test]
    fn perturbed_unitary_fails_both() {
        let s = sh(&[3, 3]);
        let mut g = rng(5);
        let u = haar_unitary::<f64, _>(&s, &mut g);
        let l = u.add(&gaussian_opr(&s, &s, &mut g).scale(cr(1e-3))).unwrap();
        let r = sep_isometry_implies_unitary_check(&l, 200, 1e-6, 0).unwrap();
        assert!(r.max_deviation > 1e-5 && r.gram_defect > 1e-5);
        assert!(r.max_deviation < 1e-1 && r.gram_defect < 1e-1);
        assert!(r.consistent);
    }
}
