mod common;

use pbcox_core::build_risk_structure;
use pbcox_core::survival::group_times;
use pbcox_core::SurvivalDataset;
use proptest::prelude::*;

proptest! {
    #[test]
    fn grouping_is_monotone_and_idempotent(
        t in prop::collection::vec(1e-6f64..10.0, 1..100),
        tau in 1e-3f64..2.0,
    ) {
        let g = group_times(&t, tau).unwrap();
        for i in 0..t.len() {
            for j in 0..t.len() {
                if t[i] <= t[j] {
                    prop_assert!(g[i] <= g[j]);
                }
            }
            prop_assert!(g[i] >= t[i] * (1.0 - 1e-9));
        }
        prop_assert_eq!(group_times(&g, tau).unwrap(), g);
    }

    #[test]
    fn risk_sets_nest_and_contain_events(data in common::dataset(2..=60, 1, 8)) {
        let r = build_risk_structure(&data).unwrap();
        let t = data.times();
        for j in 0..r.k() {
            let risk = r.risk_set(j);
            for i in r.event_set(j) {
                prop_assert!(risk.contains(i));
                prop_assert!(data.status()[*i] && t[*i] == r.event_times()[j]);
            }
            prop_assert_eq!(risk.len(), t.iter().filter(|v| **v >= r.event_times()[j]).count());
            if j + 1 < r.k() {
                for i in r.risk_set(j + 1) {
                    prop_assert!(risk.contains(i));
                }
            }
        }
    }

    #[test]
    fn counts_ignore_row_order(
        data in common::dataset(2..=40, 2, 6),
        seed in any::<u64>(),
    ) {
        let n = data.n();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let times = perm.iter().map(|&i| data.times()[i]).collect();
        let status = perm.iter().map(|&i| data.status()[i]).collect();
        let x = data.covariates().select_rows(perm.iter());
        let shuffled = SurvivalDataset::new(times, status, x, data.names().to_vec()).unwrap();
        let a = build_risk_structure(&data).unwrap();
        let b = build_risk_structure(&shuffled).unwrap();
        prop_assert_eq!(a.event_times(), b.event_times());
        prop_assert_eq!(a.d_counts(), b.d_counts());
        prop_assert_eq!(a.n_counts(), b.n_counts());
        for j in 0..a.k() {
            let mut ea: Vec<usize> = a.event_set(j).to_vec();
            let mut eb: Vec<usize> = b.event_set(j).iter().map(|&i| perm[i]).collect();
            ea.sort();
            eb.sort();
            prop_assert_eq!(ea, eb);
        }
    }
}
