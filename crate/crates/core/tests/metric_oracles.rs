//! Every metric on the standard fixture against the brute-force oracles,
//! under a spread of filters.

mod support;

use support::checks::{at, check_lens_sums, check_network, check_series, check_tables, check_turnover, filters};
use support::oracle::World;

#[test]
fn standard_fixture_matches_oracles() {
    let ds = support::standard_dataset();
    let events = ds.snapshot().events().to_vec();
    let w = World::new(&events, ds.registry());
    for f in filters() {
        check_series(&ds, &w, &f);
        check_tables(&ds, &w, &f);
        for as_of in [at(2023, 12, 31), at(2023, 6, 15), at(2022, 9, 30)] {
            check_turnover(&ds, &w, &f, as_of);
        }
    }
}

#[test]
fn standard_network_matches_pairwise_oracle() {
    let ds = support::standard_dataset();
    let events = ds.snapshot().events().to_vec();
    let w = World::new(&events, ds.registry());
    for f in filters() {
        check_network(&ds, &w, &f);
    }
}

#[test]
fn lens_sums_equal_unlensed_totals() {
    check_lens_sums(&support::standard_dataset());
}
