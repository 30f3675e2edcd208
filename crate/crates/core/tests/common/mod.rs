//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use ltrip_ldpc::factor::{DiscreteFactor, VariableId};
use proptest::prelude::*;

/// Dense table keyed by the full assignment of `vars` (one state per variable).
pub type Dense = BTreeMap<Vec<u32>, f64>;

/// Every assignment of `cards`, first variable varying fastest.
pub fn assignments(cards: &[u32]) -> Vec<Vec<u32>> {
    let total: usize = cards.iter().map(|&c| c as usize).product();
    (0..total)
        .map(|mut n| {
            cards
                .iter()
                .map(|&c| {
                    let s = (n % c as usize) as u32;
                    n /= c as usize;
                    s
                })
                .collect()
        })
        .collect()
}

/// Evaluates `f` at every assignment of `vars`, which must cover its scope.
pub fn dense(f: &DiscreteFactor, vars: &[VariableId], cards: &[u32]) -> Dense {
    assignments(cards)
        .into_iter()
        .map(|a| {
            let v = f.value_with(|x| a[vars.iter().position(|&y| y == x).expect("scope covered")]);
            (a, v)
        })
        .collect()
}

pub fn close(a: &Dense, b: &Dense, tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|((ka, va), (kb, vb))| ka == kb && (va - vb).abs() <= tol * va.abs().max(vb.abs()).max(1.0))
}

/// Cardinality of each variable id in the property tests.
pub fn card_of(v: u32) -> u32 {
    2 + v % 2
}

/// A random factor over a subset of variables `0..6` (cardinality 2 or 3)
/// whose entries are zero with probability about one in four.
pub fn arb_factor() -> impl Strategy<Value = DiscreteFactor> {
    proptest::sample::subsequence((0u32..6).collect::<Vec<_>>(), 1..=4).prop_flat_map(|ids| {
        let cards: Vec<u32> = ids.iter().map(|&i| card_of(i)).collect();
        let size: usize = cards.iter().map(|&c| c as usize).product();
        proptest::collection::vec(prop_oneof![1 => Just(0.0), 3 => 0.01f64..10.0], size).prop_filter_map(
            "at least one positive entry",
            move |vals| {
                if vals.iter().all(|&v| v == 0.0) {
                    return None;
                }
                let vars: Vec<VariableId> = ids.iter().map(|&i| VariableId(i)).collect();
                let rows = assignments(&cards).into_iter().zip(vals);
                Some(DiscreteFactor::from_entries(&vars, &cards, rows).unwrap())
            },
        )
    })
}

/// Union of scopes with cardinalities, ascending.
pub fn union(fs: &[&DiscreteFactor]) -> (Vec<VariableId>, Vec<u32>) {
    let mut vars: Vec<VariableId> = fs.iter().flat_map(|f| f.scope().iter().copied()).collect();
    vars.sort();
    vars.dedup();
    let cards = vars.iter().map(|v| card_of(v.0)).collect();
    (vars, cards)
}
