//! Metric-by-metric comparisons against the oracles. Each check panics on
//! the first mismatch.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Duration, TimeZone, Utc};
use tapestry_core::metrics::{
    contribution_series, contributor_totals, departures, newcomers_by_month, pr_overview,
    prs_needing_attention, retention_trend, time_to_first_attention, time_to_merge, turnover,
    ContributionKind, Measure,
};
use tapestry_core::network::build_pr_network;
use tapestry_core::{Dataset, FilterSpec, Lens, MetricSeries};

use super::oracle::{Keyed, World};

pub fn at(y: i32, m: u32, d: u32) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(y, m, d, 0, 0, 0).unwrap()
}

pub fn filters() -> Vec<FilterSpec> {
    let window = (Some(at(2022, 7, 1)), Some(at(2023, 6, 30) + Duration::days(1) - Duration::nanoseconds(1)));
    let mut out = Vec::new();
    for lens in [Lens::None, Lens::Gender, Lens::Affiliation] {
        out.push(FilterSpec::with_lens(lens));
        out.push(FilterSpec::new(window.0, window.1, lens, None).unwrap());
    }
    out.push(FilterSpec::new(None, None, Lens::Affiliation, Some("acme".into())).unwrap());
    out.push(FilterSpec::new(None, None, Lens::Gender, Some("woman".into())).unwrap());
    out.push(FilterSpec::new(window.0, window.1, Lens::Affiliation, Some("Unknown".into())).unwrap());
    out.push(FilterSpec::new(Some(at(2030, 1, 1)), None, Lens::None, None).unwrap());
    out
}

/// Non-zero cells of a series keyed like the oracle output.
fn cells(series: &MetricSeries) -> Keyed<f64> {
    series
        .buckets
        .iter()
        .flat_map(|b| b.values.iter().map(move |(g, v)| ((b.month.to_string(), g.clone()), *v)))
        .filter(|(_, v)| *v != 0.0)
        .collect()
}

fn months(series: &MetricSeries) -> Vec<String> {
    series.buckets.iter().map(|b| b.month.to_string()).collect()
}

fn assert_close(a: &Keyed<f64>, b: &Keyed<f64>, what: &str) {
    assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>(), "{what}");
    for (k, v) in a {
        assert!((v - b[k]).abs() < 1e-12, "{what} {k:?}: {v} vs {}", b[k]);
    }
}

pub fn check_series(ds: &Dataset, w: &World, f: &FilterSpec) {
    let s = newcomers_by_month(ds, f);
    assert_eq!(cells(&s), w.newcomers(f), "newcomers {f:?}");
    assert_eq!(months(&s), w.activity_span(f));

    let r = retention_trend(ds, f);
    assert_close(
        &r.buckets
            .iter()
            .flat_map(|b| b.values.iter().map(move |(g, v)| ((b.month.to_string(), g.clone()), *v)))
            .collect(),
        &w.retention(f),
        "retention",
    );

    for kind in [
        ContributionKind::Pr,
        ContributionKind::Issue,
        ContributionKind::QaQuestion,
        ContributionKind::QaAnswer,
    ] {
        let counts = contribution_series(ds, kind, Measure::Count, f);
        let expected = w.contributions(kind.event_kind(), f);
        assert_eq!(cells(&counts), expected, "{kind:?} {f:?}");
        let span = w.span(|e| e.kind == kind.event_kind() && !w.who(e).is_bot && f.in_window(e.timestamp));
        assert_eq!(months(&counts), span);
        let props = contribution_series(ds, kind, Measure::Proportion, f);
        assert_close(&cells(&props), &World::proportions(&expected), "proportion");
        for b in &props.buckets {
            let sum: f64 = b.values.values().sum();
            assert!(b.values.is_empty() || (sum - 1.0).abs() < 1e-9);
        }
    }
}

pub fn check_tables(ds: &Dataset, w: &World, f: &FilterSpec) {
    let ttm: BTreeMap<String, (f64, u64)> = time_to_merge(ds, f)
        .into_iter()
        .map(|r| (r.group, (r.avg_days, r.count)))
        .collect();
    let expected = w.time_to_merge(f);
    assert_eq!(ttm.len(), expected.len());
    for (g, (avg, n)) in &expected {
        assert_eq!(ttm[g].1, *n);
        assert!((ttm[g].0 - avg).abs() < 1e-9, "{g}");
    }
    let ranked = time_to_merge(ds, f);
    assert!(ranked.windows(2).all(|p| p[0].avg_days >= p[1].avg_days));

    let fa = time_to_first_attention(ds, f);
    let (avg, never) = w.first_attention(f);
    assert_eq!(fa.never_attended, never);
    assert_eq!(fa.groups.len(), avg.len());
    for r in &fa.groups {
        assert_eq!(r.count, avg[&r.group].1);
        assert!((r.avg_days - avg[&r.group].0).abs() < 1e-9);
    }

    let rows: BTreeSet<_> = prs_needing_attention(ds, f)
        .into_iter()
        .map(|r| (r.repo_id, r.artifact_id, r.author_id))
        .collect();
    assert_eq!(rows, w.attention(f));

    let overview: BTreeMap<String, (u64, u64, u64)> = pr_overview(ds, f)
        .into_iter()
        .map(|(g, o)| (g, (o.pr_count, o.comment_count, o.reaction_count)))
        .collect();
    assert_eq!(overview, w.pr_overview(f));

    let totals: BTreeMap<String, u64> = contributor_totals(ds, f).into_iter().map(|(g, s)| (g, s.count)).collect();
    assert_eq!(totals, w.contributors(f));
}

pub fn check_turnover(ds: &Dataset, w: &World, f: &FilterSpec, as_of: DateTime<Utc>) {
    let d = departures(ds, as_of, f);
    let expected = w.departures(as_of, f);
    let as_set = |rows: &[tapestry_core::metrics::ContributorRow]| -> BTreeSet<_> {
        rows.iter()
            .map(|r| (r.identity_id.clone(), r.contribution_count, r.last_contribution))
            .collect()
    };
    assert_eq!(as_set(&d.left), expected.get("left").cloned().unwrap_or_default());
    assert_eq!(
        as_set(&d.might_be_leaving),
        expected.get("might_be_leaving").cloned().unwrap_or_default()
    );
    assert!(d.left.windows(2).all(|p| p[0].contribution_count >= p[1].contribution_count));

    let t = turnover(ds, Some(as_of), f);
    // Newcomers are counted up to as_of only.
    let capped_end = f.end().map_or(as_of, |e| e.min(as_of));
    let (newcomers, retention) = match FilterSpec::new(f.start(), Some(capped_end), f.lens, f.group_filter.clone()) {
        Ok(capped) => (w.newcomers(&capped), w.retention(&capped)),
        Err(_) => Default::default(),
    };
    for m in &t.months {
        let eval = (m.month.end() - Duration::nanoseconds(1)).min(as_of);
        let states = w.departures(eval, f);
        let mut by_group: BTreeMap<String, (u64, u64)> = BTreeMap::new();
        for (state, rows) in &states {
            for (id, _, _) in rows {
                let g = super::oracle::label(ds.identity(id).unwrap(), f.lens);
                let e = by_group.entry(g).or_default();
                match *state {
                    "left" => e.0 += 1,
                    "might_be_leaving" => e.1 += 1,
                    _ => {}
                }
            }
        }
        for (g, c) in &m.groups {
            let (left, mbl) = by_group.get(g).copied().unwrap_or_default();
            assert_eq!((c.left, c.might_be_leaving), (left, mbl), "{} {g}", m.month);
            let key = (m.month.to_string(), g.clone());
            assert_eq!(c.newcomers as f64, newcomers.get(&key).copied().unwrap_or(0.0), "{key:?}");
            assert_eq!(c.retention_rate, retention.get(&key).copied());
        }
    }
    if let Some(last) = t.months.last() {
        let left: u64 = last.groups.values().map(|c| c.left).sum();
        let mbl: u64 = last.groups.values().map(|c| c.might_be_leaving).sum();
        assert_eq!(left as usize, t.drill_down.left.len());
        assert_eq!(mbl as usize, t.drill_down.might_be_leaving.len());
    }
}

pub fn check_network(ds: &Dataset, w: &World, f: &FilterSpec) {
    let g = build_pr_network(ds, f);
    let weights: BTreeMap<_, _> = g
        .edges
        .iter()
        .map(|e| ((e.source.clone(), e.target.clone()), e.weight))
        .collect();
    assert_eq!(weights, w.pairwise_weights(f), "edge weights {f:?}");
    let sizes: BTreeMap<_, _> = g.nodes.iter().map(|n| (n.id.clone(), n.size)).collect();
    assert_eq!(sizes, w.network_nodes(f), "node sizes {f:?}");
}

/// Sums over lens groups equal the unlensed totals.
pub fn check_lens_sums(ds: &Dataset) {
    let none = FilterSpec::default();
    for lens in [Lens::Gender, Lens::Affiliation] {
        let f = FilterSpec::with_lens(lens);
        assert_eq!(newcomers_by_month(ds, &f).total(), newcomers_by_month(ds, &none).total());
        for kind in [
            ContributionKind::Pr,
            ContributionKind::Issue,
            ContributionKind::QaQuestion,
            ContributionKind::QaAnswer,
        ] {
            let lensed = contribution_series(ds, kind, Measure::Count, &f);
            let flat = contribution_series(ds, kind, Measure::Count, &none);
            assert_eq!(lensed.buckets.len(), flat.buckets.len());
            for (a, b) in lensed.buckets.iter().zip(&flat.buckets) {
                assert_eq!(a.values.values().sum::<f64>(), b.values["all"], "{kind:?} {lens:?}");
            }
        }
        let sum = |m: BTreeMap<String, tapestry_core::metrics::ContributorShare>| -> u64 {
            m.values().map(|s| s.count).sum()
        };
        assert_eq!(sum(contributor_totals(ds, &f)), sum(contributor_totals(ds, &none)));
        let prs = |f: &FilterSpec| -> u64 { pr_overview(ds, f).values().map(|o| o.pr_count).sum() };
        assert_eq!(prs(&f), prs(&none));
    }
}
