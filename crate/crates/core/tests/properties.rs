mod common;

use common::*;
use cqtm::io::{parse_complex, parse_state, render_complex, render_state};
use cqtm::quantum::*;
use proptest::prelude::*;

fn qubit_alphabet() -> Alphabet {
    Alphabet::new(["#", "0", "1"]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn complex_round_trip(re in -1e6f64..1e6, im in -1e6f64..1e6) {
        let z = Complex64::new(re, im);
        prop_assert_eq!(parse_complex(&render_complex(z)), Some(z));
    }

    #[test]
    fn state_round_trip(seed in any::<u64>(), n in 1usize..5) {
        let a = qubit_alphabet();
        let s = random_state_over(&mut rng(seed), 3, n, &[1, 2]);
        let back = parse_state(&render_state(&s, &a), &a, false).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn compositions_stay_complete(seed in any::<u64>(), d in 2usize..4) {
        let mut r = rng(seed);
        let a = Alphabet::new((0..d).map(|i| format!("s{i}"))).unwrap();
        let u = unitary("U", &a, random_unitary(&mut r, d)).unwrap();
        let m = std_measurement(&a);
        let both = compose_spatial(&u, &m).unwrap();
        prop_assert!(check_completeness(&both).is_ok());
        let seq = compose_sequential(&u, &m).unwrap();
        prop_assert!(check_completeness(&seq).is_ok());
        prop_assert!(check_completeness(&compose_sequential(&both, &swap(&a)).unwrap()).is_ok());
    }

    #[test]
    fn branch_probabilities_sum_to_one(seed in any::<u64>(), n in 1usize..4) {
        let mut r = rng(seed);
        let a = qubit_alphabet();
        let psi = random_state(&mut r, 3, n);
        let t = compose_sequential(&unitary("U", &a, random_unitary(&mut r, 3)).unwrap(), &std_measurement(&a)).unwrap();
        let cell = (seed % n as u64) as usize;
        let total: f64 = apply_branching(&psi, &[cell], &t).unwrap().iter().map(|b| b.probability).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn reflections_are_involutions(seed in any::<u64>(), d in 2usize..5) {
        let v = random_unitary(&mut rng(seed), d);
        let refl = reflection_measurement(&v, 1).unwrap();
        let id = Matrix::identity(refl.r.rows());
        prop_assert!(refl.r.mul(&refl.r).unwrap().approx_eq(&id, 1e-9));
    }
}
