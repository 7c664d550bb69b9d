//! Brute-force reference implementations. Each function rescans the whole
//! event list for every question it answers; clarity over speed.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::{DateTime, Datelike, Months, Utc};
use tapestry_core::{ActivityEvent, EventKind, FilterSpec, Identity, IdentityId, IdentityRegistry, Lens};

pub struct World<'a> {
    pub events: &'a [ActivityEvent],
    pub registry: &'a IdentityRegistry,
    owners: HashMap<&'a str, &'a Identity>,
    times: HashMap<IdentityId, Vec<DateTime<Utc>>>,
}

pub type Keyed<T> = BTreeMap<(String, String), T>;

/// `(identity, contribution_count, last)` rows keyed by state name.
pub type StateRows = BTreeMap<&'static str, BTreeSet<(IdentityId, u64, DateTime<Utc>)>>;

pub fn month(ts: DateTime<Utc>) -> String {
    ts.format("%Y-%m").to_string()
}

pub fn label(identity: &Identity, lens: Lens) -> String {
    match lens {
        Lens::None => "all".to_string(),
        Lens::Gender => identity.gender.gender.as_str().to_string(),
        Lens::Affiliation => identity.affiliation.org_name.label().to_string(),
    }
}

fn within(filter: &FilterSpec, ts: DateTime<Utc>) -> bool {
    match filter.time_range {
        None => true,
        Some(r) => r.start <= ts && ts <= r.end,
    }
}

fn group_ok(filter: &FilterSpec, group: &str) -> bool {
    match &filter.group_filter {
        None => true,
        Some(g) => g.to_lowercase() == group.to_lowercase(),
    }
}

/// The clamped calendar-month subtraction, written out by hand.
pub fn minus_months(ts: DateTime<Utc>, n: u32) -> DateTime<Utc> {
    ts.checked_sub_months(Months::new(n)).unwrap()
}

pub fn state(last: DateTime<Utc>, as_of: DateTime<Utc>) -> &'static str {
    if last <= minus_months(as_of, 6) {
        "left"
    } else if last <= minus_months(as_of, 3) {
        "might_be_leaving"
    } else {
        "active"
    }
}

#[derive(Debug, Clone)]
pub struct Pr {
    pub repo: String,
    pub artifact: String,
    pub author: IdentityId,
    pub opened: DateTime<Utc>,
    pub merged: Option<DateTime<Utc>>,
    pub closed: Option<DateTime<Utc>>,
    pub reactions: u64,
}

impl<'a> World<'a> {
    pub fn new(events: &'a [ActivityEvent], registry: &'a IdentityRegistry) -> Self {
        let owners: HashMap<&str, &Identity> = events
            .iter()
            .map(|e| {
                let who = registry.identity_of(&e.actor).expect("every actor resolved");
                (e.event_id.as_str(), who)
            })
            .collect();
        let mut times: HashMap<IdentityId, Vec<DateTime<Utc>>> = HashMap::new();
        for e in events {
            let who: &Identity = owners[e.event_id.as_str()];
            times.entry(who.identity_id.clone()).or_default().push(e.timestamp);
        }
        for t in times.values_mut() {
            t.sort();
        }
        Self {
            events,
            registry,
            owners,
            times,
        }
    }

    pub fn who(&self, e: &ActivityEvent) -> &'a Identity {
        self.owners[e.event_id.as_str()]
    }

    fn human(&self, id: &IdentityId) -> bool {
        !self.registry.get(id).unwrap().is_bot
    }

    /// Non-bot identities that have at least one event.
    pub fn humans(&self) -> Vec<&'a Identity> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for e in self.events {
            let who = self.who(e);
            if !who.is_bot && seen.insert(who.identity_id.clone()) {
                out.push(who);
            }
        }
        out
    }

    fn times_of(&self, id: &IdentityId) -> Vec<DateTime<Utc>> {
        self.times[id].clone()
    }

    /// Every month between the earliest and latest matching event.
    pub fn span(&self, pred: impl Fn(&ActivityEvent) -> bool) -> Vec<String> {
        let times: Vec<_> = self.events.iter().filter(|e| pred(e)).map(|e| e.timestamp).collect();
        let (Some(lo), Some(hi)) = (times.iter().min(), times.iter().max()) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        let mut cur = lo.date_naive().with_day0(0).unwrap();
        let end = month(*hi);
        loop {
            let m = cur.format("%Y-%m").to_string();
            let done = m == end;
            out.push(m);
            if done {
                break;
            }
            cur = cur.checked_add_months(Months::new(1)).unwrap();
        }
        out
    }

    pub fn activity_span(&self, filter: &FilterSpec) -> Vec<String> {
        self.span(|e| !self.who(e).is_bot && within(filter, e.timestamp))
    }

    pub fn newcomers(&self, filter: &FilterSpec) -> Keyed<f64> {
        let mut out = Keyed::new();
        for who in self.humans() {
            let first = self.times_of(&who.identity_id)[0];
            let g = label(who, filter.lens);
            if within(filter, first) && group_ok(filter, &g) {
                *out.entry((month(first), g)).or_default() += 1.0;
            }
        }
        out
    }

    pub fn retention(&self, filter: &FilterSpec) -> Keyed<f64> {
        let mut cohort: Keyed<(f64, f64)> = Keyed::new();
        for who in self.humans() {
            let times = self.times_of(&who.identity_id);
            let first = month(times[0]);
            let g = label(who, filter.lens);
            if !within(filter, times[0]) || !group_ok(filter, &g) {
                continue;
            }
            let again = times.iter().any(|t| month(*t) > first);
            let c = cohort.entry((first, g)).or_default();
            c.0 += 1.0;
            if again {
                c.1 += 1.0;
            }
        }
        cohort.into_iter().map(|(k, (n, r))| (k, r / n)).collect()
    }

    pub fn contributions(&self, kind: EventKind, filter: &FilterSpec) -> Keyed<f64> {
        let mut out = Keyed::new();
        for e in self.events {
            let who = self.who(e);
            let g = label(who, filter.lens);
            if e.kind == kind && !who.is_bot && within(filter, e.timestamp) && group_ok(filter, &g) {
                *out.entry((month(e.timestamp), g)).or_default() += 1.0;
            }
        }
        out
    }

    pub fn proportions(counts: &Keyed<f64>) -> Keyed<f64> {
        let mut totals: BTreeMap<String, f64> = BTreeMap::new();
        for ((m, _), v) in counts {
            *totals.entry(m.clone()).or_default() += v;
        }
        counts
            .iter()
            .filter(|((m, _), _)| totals[m] > 0.0)
            .map(|((m, g), v)| ((m.clone(), g.clone()), v / totals[m]))
            .collect()
    }

    /// `(identity, contribution_count, last)` for the left and might-be-
    /// leaving lists.
    pub fn departures(
        &self,
        as_of: DateTime<Utc>,
        filter: &FilterSpec,
    ) -> StateRows {
        let mut out: BTreeMap<&'static str, BTreeSet<_>> = BTreeMap::new();
        for who in self.humans() {
            let g = label(who, filter.lens);
            if !group_ok(filter, &g) {
                continue;
            }
            let times: Vec<_> = self
                .times_of(&who.identity_id)
                .into_iter()
                .filter(|t| *t <= as_of)
                .collect();
            let count = times.iter().filter(|t| within(filter, **t)).count() as u64;
            if count == 0 {
                continue;
            }
            let last = *times.last().unwrap();
            out.entry(state(last, as_of))
                .or_default()
                .insert((who.identity_id.clone(), count, last));
        }
        out
    }

    pub fn pull_requests(&self) -> Vec<Pr> {
        let mut keys = BTreeSet::new();
        for e in self.events {
            if e.kind == EventKind::PrOpened {
                keys.insert((e.repo_id.clone(), e.artifact_id.clone()));
            }
        }
        keys.into_iter()
            .map(|(repo, artifact)| {
                let of = |kind: EventKind| -> Vec<&ActivityEvent> {
                    let mut v: Vec<_> = self
                        .events
                        .iter()
                        .filter(|e| e.kind == kind && e.repo_id == repo && e.artifact_id == artifact)
                        .collect();
                    v.sort_by_key(|e| (e.timestamp, e.event_id.clone()));
                    v
                };
                let open = of(EventKind::PrOpened)[0];
                Pr {
                    author: self.who(open).identity_id.clone(),
                    opened: open.timestamp,
                    merged: of(EventKind::PrMerged).first().map(|e| e.timestamp),
                    closed: of(EventKind::PrClosed).first().map(|e| e.timestamp),
                    reactions: open.reactions.unwrap_or(0),
                    repo: repo.clone(),
                    artifact: artifact.clone(),
                }
            })
            .collect()
    }

    /// PRs in the window by human authors whose group passes.
    pub fn window_prs(&self, filter: &FilterSpec) -> Vec<(Pr, String)> {
        self.pull_requests()
            .into_iter()
            .filter_map(|pr| {
                let author = self.registry.get(&pr.author).unwrap();
                let g = label(author, filter.lens);
                (!author.is_bot && within(filter, pr.opened) && group_ok(filter, &g)).then_some((pr, g))
            })
            .collect()
    }

    fn interactions(&self, repo: &str, artifact: &str, kinds: &[EventKind]) -> Vec<&'a ActivityEvent> {
        self.events
            .iter()
            .filter(|e| kinds.contains(&e.kind) && e.repo_id == repo && e.artifact_id == artifact)
            .collect()
    }

    pub fn time_to_merge(&self, filter: &FilterSpec) -> BTreeMap<String, (f64, u64)> {
        let mut sums: BTreeMap<String, (f64, u64)> = BTreeMap::new();
        for (pr, g) in self.window_prs(filter) {
            if let Some(m) = pr.merged {
                let s = sums.entry(g).or_default();
                s.0 += (m - pr.opened).num_milliseconds() as f64 / 86_400_000.0;
                s.1 += 1;
            }
        }
        sums.into_iter().map(|(g, (s, n))| (g, (s / n as f64, n))).collect()
    }

    pub fn first_attention(&self, filter: &FilterSpec) -> (BTreeMap<String, (f64, u64)>, BTreeMap<String, u64>) {
        let mut issues = BTreeSet::new();
        for e in self.events {
            if e.kind == EventKind::IssueOpened {
                issues.insert((e.repo_id.clone(), e.artifact_id.clone()));
            }
        }
        let mut sums: BTreeMap<String, (f64, u64)> = BTreeMap::new();
        let mut never: BTreeMap<String, u64> = BTreeMap::new();
        for (repo, artifact) in issues {
            let mut opens = self.interactions(&repo, &artifact, &[EventKind::IssueOpened]);
            opens.sort_by_key(|e| (e.timestamp, e.event_id.clone()));
            let open = opens[0];
            let author = self.who(open);
            let g = label(author, filter.lens);
            if author.is_bot || !within(filter, open.timestamp) || !group_ok(filter, &g) {
                continue;
            }
            let first = self
                .interactions(&repo, &artifact, &[EventKind::IssueComment])
                .into_iter()
                .filter(|e| {
                    let w = self.who(e);
                    !w.is_bot && w.identity_id != author.identity_id
                })
                .map(|e| e.timestamp)
                .min();
            match first {
                Some(t) => {
                    let s = sums.entry(g).or_default();
                    s.0 += (t - open.timestamp).num_milliseconds() as f64 / 86_400_000.0;
                    s.1 += 1;
                }
                None => *never.entry(g).or_default() += 1,
            }
        }
        let avg = sums.into_iter().map(|(g, (s, n))| (g, (s / n as f64, n))).collect();
        (avg, never)
    }

    fn qualifying(&self, pr: &Pr) -> usize {
        self.interactions(&pr.repo, &pr.artifact, &[EventKind::PrComment, EventKind::PrReview])
            .into_iter()
            .filter(|e| {
                let w = self.who(e);
                !w.is_bot && w.identity_id != pr.author
            })
            .count()
    }

    /// `(repo, artifact, author)` of PRs needing attention.
    pub fn attention(&self, filter: &FilterSpec) -> BTreeSet<(String, String, IdentityId)> {
        self.window_prs(filter)
            .into_iter()
            .filter(|(pr, _)| !(pr.closed.is_some() && pr.merged.is_none()) && self.qualifying(pr) == 0)
            .map(|(pr, _)| (pr.repo, pr.artifact, pr.author))
            .collect()
    }

    pub fn pr_overview(&self, filter: &FilterSpec) -> BTreeMap<String, (u64, u64, u64)> {
        let mut out: BTreeMap<String, (u64, u64, u64)> = BTreeMap::new();
        for (pr, g) in self.window_prs(filter) {
            let comments = self
                .interactions(&pr.repo, &pr.artifact, &[EventKind::PrComment, EventKind::PrReview])
                .into_iter()
                .filter(|e| !self.who(e).is_bot)
                .count() as u64;
            let o = out.entry(g).or_default();
            o.0 += 1;
            o.1 += comments;
            o.2 += pr.reactions;
        }
        out
    }

    pub fn contributors(&self, filter: &FilterSpec) -> BTreeMap<String, u64> {
        let mut out = BTreeMap::new();
        for who in self.humans() {
            let g = label(who, filter.lens);
            let active = self
                .events
                .iter()
                .any(|e| self.who(e).identity_id == who.identity_id && within(filter, e.timestamp));
            if active && group_ok(filter, &g) {
                *out.entry(g).or_default() += 1;
            }
        }
        out
    }

    fn participants(&self, pr: &Pr) -> BTreeSet<IdentityId> {
        let mut p: BTreeSet<IdentityId> = self
            .interactions(&pr.repo, &pr.artifact, &[EventKind::PrComment, EventKind::PrReview])
            .into_iter()
            .map(|e| self.who(e).identity_id.clone())
            .filter(|id| self.human(id))
            .collect();
        p.insert(pr.author.clone());
        p
    }

    /// Node sizes (PRs authored) for everyone who took part in a PR.
    pub fn network_nodes(&self, filter: &FilterSpec) -> BTreeMap<IdentityId, u64> {
        let mut out = BTreeMap::new();
        for (pr, _) in self.window_prs(filter) {
            for p in self.participants(&pr) {
                out.entry(p).or_insert(0);
            }
            *out.get_mut(&pr.author).unwrap() += 1;
        }
        out
    }

    /// Shared-PR counts for every pair of participants, checked pair by pair.
    pub fn pairwise_weights(&self, filter: &FilterSpec) -> BTreeMap<(IdentityId, IdentityId), u64> {
        let prs: Vec<BTreeSet<IdentityId>> =
            self.window_prs(filter).iter().map(|(pr, _)| self.participants(pr)).collect();
        let nodes: Vec<IdentityId> = self.network_nodes(filter).into_keys().collect();
        let mut out = BTreeMap::new();
        for (i, a) in nodes.iter().enumerate() {
            for b in &nodes[i + 1..] {
                let shared = prs.iter().filter(|p| p.contains(a) && p.contains(b)).count() as u64;
                if shared > 0 {
                    out.insert((a.clone(), b.clone()), shared);
                }
            }
        }
        out
    }
}
