use pbcox_core::pb::{lecam_bound, pmf_convolution, pmf_dft, pmf_enumeration, pmf_poisson, pmf_vector_convolution, pmf_vector_dft};
use pbcox_core::PbInput;
use proptest::prelude::*;
use statrs::distribution::{Binomial, Discrete};

fn probs(max_n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..=1.0, 1..=max_n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn exact_algorithms_normalize(p in probs(60)) {
        let input = PbInput::new(p).unwrap();
        let dft: f64 = pmf_vector_dft(&input).unwrap().iter().sum();
        let conv: f64 = pmf_vector_convolution(input.probs()).iter().sum();
        prop_assert!((dft - 1.0).abs() <= 1e-10);
        prop_assert!((conv - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn enumeration_oracle_agrees(p in probs(14)) {
        let input = PbInput::new(p).unwrap();
        for d in 0..=input.len() {
            let e = pmf_enumeration(&input, d).unwrap().value;
            prop_assert!((e - pmf_dft(&input, d).unwrap().value).abs() <= 1e-10);
            prop_assert!((e - pmf_convolution(&input, d).unwrap().value).abs() <= 1e-10);
        }
    }

    #[test]
    fn poisson_error_within_lecam(p in probs(40)) {
        let input = PbInput::new(p).unwrap();
        let n = input.len();
        let exact = pmf_vector_dft(&input).unwrap();
        let err: f64 = (0..=n)
            .map(|d| (exact[d] - pmf_poisson(&input, d).unwrap().value).abs())
            .sum::<f64>() / n as f64;
        prop_assert!(err <= lecam_bound(&input) + 1e-15);
    }

    #[test]
    fn permutation_invariant(p in probs(30).prop_flat_map(|p| (Just(p.clone()), Just(p).prop_shuffle()))) {
        let (a, b) = p;
        let a = pmf_vector_convolution(&a);
        let b = pmf_vector_convolution(&b);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn equal_probabilities_are_binomial(q in 0.0f64..=1.0, n in 1usize..80) {
        let input = PbInput::new(vec![q; n]).unwrap();
        let binom = Binomial::new(q, n as u64).unwrap();
        let dft = pmf_vector_dft(&input).unwrap();
        let conv = pmf_vector_convolution(input.probs());
        for d in 0..=n {
            let b = binom.pmf(d as u64);
            prop_assert!((dft[d] - b).abs() <= 1e-10, "dft d={} {} vs {}", d, dft[d], b);
            prop_assert!((conv[d] - b).abs() <= 1e-10);
        }
    }
}
