use proptest::prelude::*;
use sepkit::oracle::{brute_force_operator_s_norm, replay_trial, OracleConfig, Question, SearchConfig};
use sepkit::tensor::sample::{gaussian_opr, haar_ket, haar_unitary, invertible_opr, local_unitary, rng, sr_k_ket};
use sepkit::{
    counterexample_search, gme, operator_s_norm, recover_local_form_multipartite, s_norm, schmidt_decompose,
    schmidt_rank, swap_operator, Cut, GmeOptions, Opr, Permutation, RecoverOptions, RecoverStatus, SeesawOptions,
    Shape,
};

fn shape(d: &[usize]) -> Shape {
    Shape::new(d.to_vec()).unwrap()
}

fn bipartite() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=4, 1usize..=4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn s_norm_is_monotone_in_k_and_reaches_the_norm((m, n) in bipartite(), seed in any::<u64>()) {
        let mut g = rng(seed);
        let v = haar_ket::<f64, _>(&shape(&[m, n]), &mut g);
        let cut = Cut::bipartite();
        let top = m.min(n);
        let mut prev = 0.0;
        for k in 1..=top {
            let s = s_norm(&v, k, &cut).unwrap().value;
            prop_assert!(s + 1e-12 >= prev);
            prev = s;
        }
        prop_assert!((prev - v.norm()).abs() < 1e-12);
    }

    #[test]
    fn s_norm_bounds_overlap_with_schmidt_rank_k_kets((m, n) in bipartite(), seed in any::<u64>()) {
        let mut g = rng(seed);
        let sh = shape(&[m, n]);
        let v = haar_ket::<f64, _>(&sh, &mut g);
        let cut = Cut::bipartite();
        for k in 1..=m.min(n) {
            let s = s_norm(&v, k, &cut).unwrap();
            prop_assert!((s.witness.inner(&v).norm() - s.value).abs() < 1e-10);
            prop_assert!(schmidt_rank(&s.witness, &cut, 1e-9).unwrap() <= k);
            for _ in 0..8 {
                let w = sr_k_ket::<f64, _>(&sh, k, &mut g).unwrap();
                prop_assert!(w.inner(&v).norm() <= s.value + 1e-12);
            }
        }
    }

    #[test]
    fn schmidt_coefficients_square_sum_to_norm((m, n) in bipartite(), seed in any::<u64>()) {
        let mut g = rng(seed);
        let v = haar_ket::<f64, _>(&shape(&[m, n]), &mut g);
        let d = schmidt_decompose(&v, &Cut::bipartite()).unwrap();
        let total: f64 = d.coeffs.iter().map(|a| a * a).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(d.coeffs.windows(2).all(|w| w[0] + 1e-15 >= w[1]));
    }

    #[test]
    fn schmidt_rank_is_invariant_under_local_invertibles(seed in any::<u64>(), k in 1usize..=3) {
        let mut g = rng(seed);
        let sh = shape(&[3, 3]);
        let v = sr_k_ket::<f64, _>(&sh, k, &mut g).unwrap();
        let a = invertible_opr::<f64, _>(&shape(&[3]), 50.0, &mut g).unwrap();
        let b = invertible_opr::<f64, _>(&shape(&[3]), 50.0, &mut g).unwrap();
        let w = a.kron(&b).reshaped(sh.clone(), sh.clone()).unwrap().apply(&v).unwrap();
        prop_assert_eq!(schmidt_rank(&w, &Cut::bipartite(), 1e-9).unwrap(), k);
    }

    #[test]
    fn swap_operators_compose_like_permutations(seed in any::<u64>()) {
        let mut g = rng(seed);
        let sh = shape(&[2, 3, 2]);
        let sigma = Permutation::new(vec![2, 0, 1]).unwrap();
        let s = swap_operator::<f64>(&sigma, &sh).unwrap();
        let back = swap_operator::<f64>(&sigma.inverse(), &sh.permuted(&sigma).unwrap()).unwrap();
        let id = back.compose(&s).unwrap();
        prop_assert!(id.max_abs_diff(&Opr::identity(sh.clone())) < 1e-15);
        prop_assert!(s.unitarity_defect() < 1e-14);
        let v = haar_ket::<f64, _>(&sh, &mut g);
        let w = s.apply(&v).unwrap();
        let p = v.permute_factors(&sigma).unwrap();
        prop_assert!((w.amps() - p.amps()).norm() < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn operator_norm_bounds_both_routes(seed in any::<u64>(), k in 1usize..=2) {
        let mut g = rng(seed);
        let sh = shape(&[2, 3]);
        let x = gaussian_opr::<f64, _>(&sh, &sh, &mut g);
        let opts = SeesawOptions { restarts: 6, seed, ..SeesawOptions::default() };
        let see = operator_s_norm(&x, k, &opts).unwrap();
        let cfg = OracleConfig { samples: 2_000, polish: 8, seed, ..OracleConfig::default() };
        let ora = brute_force_operator_s_norm(&x, k, &cfg).unwrap();
        let op = x.operator_norm();
        prop_assert!(see.value <= op * (1.0 + 1e-12));
        prop_assert!(ora.value <= op * (1.0 + 1e-12));
        prop_assert!(see.objective_trace.windows(2).all(|w| w[1] + 1e-12 >= w[0]));
        let direct = see.witness_left.inner(&x.apply(&see.witness_right).unwrap()).norm();
        prop_assert!((direct - see.value).abs() < 1e-10);
    }

    #[test]
    fn gme_is_invariant_under_local_unitaries(seed in any::<u64>()) {
        let mut g = rng(seed);
        let sh = shape(&[2, 2, 3]);
        let v = haar_ket::<f64, _>(&sh, &mut g);
        let u = local_unitary::<f64, _>(&sh, &mut g);
        let opts = GmeOptions { restarts: 30, seed, ..GmeOptions::default() };
        let a = gme(&v, &opts).unwrap().e;
        let b = gme(&u.apply(&v).unwrap(), &opts).unwrap().e;
        prop_assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn local_forms_are_recovered(seed in any::<u64>()) {
        let mut g = rng(seed);
        let sh = shape(&[2, 3, 2]);
        let factors: Vec<Opr<f64>> = sh
            .dims()
            .iter()
            .map(|&d| invertible_opr(&shape(&[d]), 20.0, &mut g).unwrap())
            .collect();
        let p = factors.iter().skip(1).fold(factors[0].clone(), |acc, f| acc.kron(f));
        let p = p.reshaped(sh.clone(), sh.clone()).unwrap();
        let sigma = Permutation::new(vec![2, 1, 0]).unwrap();
        let l = swap_operator::<f64>(&sigma, &sh).unwrap().compose(&p).unwrap();
        let r = recover_local_form_multipartite(&l, &RecoverOptions { seed, ..RecoverOptions::default() }).unwrap();
        prop_assert_eq!(r.status, RecoverStatus::Recovered);
        prop_assert!(r.residual < 1e-9);
    }

    #[test]
    fn entangling_unitaries_are_rejected(seed in any::<u64>()) {
        let mut g = rng(seed);
        let sh = shape(&[2, 2]);
        let u = haar_unitary::<f64, _>(&sh, &mut g);
        let r = recover_local_form_multipartite(&u, &RecoverOptions { seed, ..RecoverOptions::default() }).unwrap();
        prop_assert_eq!(r.status, RecoverStatus::NotSeparabilityPreserving);
        prop_assert!(r.witness.is_some());
    }
}

#[test]
fn search_trials_replay_exactly() {
    for question in [Question::MultipartiteK, Question::RankRBipartite] {
        let shape = match question {
            Question::MultipartiteK => vec![2, 2, 2],
            Question::RankRBipartite => vec![3, 3],
        };
        let cfg = SearchConfig { question, shape, trials: 20, seed: 5, ..SearchConfig::default() };
        let report = counterexample_search(&cfg).unwrap();
        assert!(report.sound(), "{question}");
        let again = counterexample_search(&cfg).unwrap();
        assert_eq!(report.best_violation, again.best_violation);
        for i in [0, 3, 17] {
            let r = replay_trial(&cfg, i).unwrap();
            assert_eq!(r.index, i);
            assert_eq!(r, replay_trial(&cfg, i).unwrap());
        }
        let injected = replay_trial(&cfg, 10).unwrap();
        assert!(injected.preserver);
        assert_eq!(injected.known_form, Some(true));
        assert!(replay_trial(&cfg, 20).is_err());
    }
}
