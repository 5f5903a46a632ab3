#![allow(dead_code)]

use nalgebra::DMatrix;
use pbcox_core::SurvivalDataset;
use proptest::prelude::*;

/// Random dataset with `n` subjects, `p` covariates, and times drawn from
/// `levels` distinct values (few levels produce ties). At least one event.
pub fn dataset(n: std::ops::RangeInclusive<usize>, p: usize, levels: u32) -> impl Strategy<Value = SurvivalDataset> {
    n.prop_flat_map(move |n| {
        (
            prop::collection::vec(1..=levels, n),
            prop::collection::vec(prop::bool::weighted(0.75), n),
            prop::collection::vec(-1.5f64..1.5, n * p),
        )
            .prop_filter_map("needs an event", move |(t, mut s, x)| {
                if !s.iter().any(|v| *v) {
                    s[0] = true;
                }
                let times = t.iter().map(|v| *v as f64).collect();
                let x = DMatrix::from_row_slice(n, p, &x);
                let names = (0..p).map(|l| format!("x{l}")).collect();
                SurvivalDataset::new(times, s, x, names).ok()
            })
    })
}

/// Random tie-free dataset: distinct times `1..=n` in shuffled order.
pub fn tie_free(n: std::ops::RangeInclusive<usize>, p: usize) -> impl Strategy<Value = SurvivalDataset> {
    n.prop_flat_map(move |n| {
        (
            Just((1..=n).map(|v| v as f64).collect::<Vec<_>>()).prop_shuffle(),
            prop::collection::vec(prop::bool::weighted(0.8), n),
            prop::collection::vec(-1.5f64..1.5, n * p),
        )
            .prop_filter_map("needs an event", move |(times, mut s, x)| {
                if !s.iter().any(|v| *v) {
                    s[0] = true;
                }
                let x = DMatrix::from_row_slice(n, p, &x);
                let names = (0..p).map(|l| format!("x{l}")).collect();
                SurvivalDataset::new(times, s, x, names).ok()
            })
    })
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
