//! Bundled example programs and their initial stores.

pub const PIVOT_SWAP: &str = include_str!("../corpus/pivot_swap.chrcp");
pub const PIVOT_SWAP_STORE: &str = include_str!("../corpus/pivot_swap.store");

/// The pivot swap without comprehensions, as a chain of accumulating rules.
pub const PURE_SWAP: &str = include_str!("../corpus/pure_swap.chrcp");
pub const PURE_SWAP_STORE: &str = include_str!("../corpus/pure_swap.store");

pub const REMOVE_NON_MIN: &str = include_str!("../corpus/remove_non_min.chrcp");
pub const REMOVE_NON_MIN_STORE: &str = include_str!("../corpus/remove_non_min.store");

/// `{a(X)}#{X in Xs} <=> {b(X)}#{X in Xs}`: the smallest program whose
/// steps are not preserved by adding constraints to the store.
pub const RELABEL: &str = include_str!("../corpus/relabel.chrcp");
pub const RELABEL_STORE: &str = include_str!("../corpus/relabel.store");

/// A single propagation rule over pairs.
pub const PAIRS: &str = include_str!("../corpus/pairs.chrcp");
pub const PAIRS_STORE: &str = include_str!("../corpus/pairs.store");

/// `(name, program, store)` for every bundled example.
pub const ALL: [(&str, &str, &str); 5] = [
    ("pivot_swap", PIVOT_SWAP, PIVOT_SWAP_STORE),
    ("pure_swap", PURE_SWAP, PURE_SWAP_STORE),
    ("remove_non_min", REMOVE_NON_MIN, REMOVE_NON_MIN_STORE),
    ("relabel", RELABEL, RELABEL_STORE),
    ("pairs", PAIRS, PAIRS_STORE),
];
