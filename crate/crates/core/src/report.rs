//! Named reports with stable JSON and CSV renderings.
//!
//! The HTTP API and the CLI exporter both go through [`run`] and
//! [`ReportOutput::to_json`], so the same request yields the same bytes.
//!
//! CSV columns per report:
//!
//! | report | columns |
//! |---|---|
//! | `turnover` | `month,group,newcomers,left,might_be_leaving,retention_rate` |
//! | `drill-down` | `category,identity_id,display_name,group,contribution_count,affiliation,gender,last_contribution` |
//! | `newcomers`, `retention`, `contributions` | `month,group,value` |
//! | `time-to-merge` | `group,avg_days,median_days,count` |
//! | `first-attention` | `group,avg_days,median_days,count,never_attended` |
//! | `pr-overview` | `group,pr_count,comment_count,reaction_count` |
//! | `contributors` | `group,count,percentage` |
//! | `attention` | `repo_id,artifact_id,artifact_url,created_at,author_id,author_name,author_affiliation,author_gender,group,age_days` |
//! | `network` | `source,source_name,source_group,target,target_name,target_group,weight` (isolated nodes have an empty target and weight 0) |
//!
//! Empty cells mean "no value". Timestamps are RFC 3339 in UTC.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::metrics::{
    contribution_series, contributor_totals, newcomers_by_month, pr_overview, prs_needing_attention,
    retention_trend, time_to_first_attention, time_to_merge, turnover, AttentionRow, ContributionKind,
    ContributorShare, Dataset, DrillDown, FilterSpec, GroupDuration, Lens, Measure, MetricSeries,
    PrOverview, TurnoverSnapshot,
};
use crate::network::{build_pr_network, CommunicationGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Report {
    Turnover,
    DrillDown,
    Newcomers,
    Retention,
    Contributions,
    TimeToMerge,
    FirstAttention,
    PrOverview,
    Contributors,
    Attention,
    Network,
}

impl Report {
    pub const ALL: [Report; 11] = [
        Report::Turnover,
        Report::DrillDown,
        Report::Newcomers,
        Report::Retention,
        Report::Contributions,
        Report::TimeToMerge,
        Report::FirstAttention,
        Report::PrOverview,
        Report::Contributors,
        Report::Attention,
        Report::Network,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Report::Turnover => "turnover",
            Report::DrillDown => "drill-down",
            Report::Newcomers => "newcomers",
            Report::Retention => "retention",
            Report::Contributions => "contributions",
            Report::TimeToMerge => "time-to-merge",
            Report::FirstAttention => "first-attention",
            Report::PrOverview => "pr-overview",
            Report::Contributors => "contributors",
            Report::Attention => "attention",
            Report::Network => "network",
        }
    }

    pub fn names() -> Vec<&'static str> {
        Self::ALL.iter().map(|r| r.name()).collect()
    }

    /// Parameters this report accepts beyond the shared filter.
    pub fn extra_params(self) -> &'static [&'static str] {
        match self {
            Report::Turnover | Report::DrillDown => &["as_of"],
            Report::Contributions => &["kind", "measure"],
            _ => &[],
        }
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown report {0:?}")]
pub struct UnknownReport(pub String);

impl FromStr for Report {
    type Err = UnknownReport;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| UnknownReport(s.to_string()))
    }
}

/// Shared filter plus per-report options.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRequest {
    pub filter: FilterSpec,
    pub as_of: Option<DateTime<Utc>>,
    pub kind: ContributionKind,
    pub measure: Measure,
}

impl Default for ReportRequest {
    fn default() -> Self {
        Self {
            filter: FilterSpec::default(),
            as_of: None,
            kind: ContributionKind::Pr,
            measure: Measure::Count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrillDownReport {
    pub as_of: DateTime<Utc>,
    pub lens: Lens,
    #[serde(flatten)]
    pub lists: DrillDown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurationReport {
    pub lens: Lens,
    pub groups: Vec<GroupDuration>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstAttentionReport {
    pub lens: Lens,
    pub groups: Vec<GroupDuration>,
    pub never_attended: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverviewReport {
    pub lens: Lens,
    pub groups: BTreeMap<String, PrOverview>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributorsReport {
    pub lens: Lens,
    pub total: u64,
    pub groups: BTreeMap<String, ContributorShare>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionReport {
    pub lens: Lens,
    pub rows: Vec<AttentionRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReportOutput {
    Turnover(TurnoverSnapshot),
    DrillDown(DrillDownReport),
    Series(MetricSeries),
    Durations(DurationReport),
    FirstAttention(FirstAttentionReport),
    Overview(OverviewReport),
    Contributors(ContributorsReport),
    Attention(AttentionReport),
    Network(CommunicationGraph),
}

pub fn run(ds: &Dataset, report: Report, req: &ReportRequest) -> ReportOutput {
    let filter = &req.filter;
    let lens = filter.lens;
    match report {
        Report::Turnover => ReportOutput::Turnover(turnover(ds, req.as_of, filter)),
        Report::DrillDown => {
            let t = turnover(ds, req.as_of, filter);
            ReportOutput::DrillDown(DrillDownReport {
                as_of: t.as_of,
                lens,
                lists: t.drill_down,
            })
        }
        Report::Newcomers => ReportOutput::Series(newcomers_by_month(ds, filter)),
        Report::Retention => ReportOutput::Series(retention_trend(ds, filter)),
        Report::Contributions => ReportOutput::Series(contribution_series(ds, req.kind, req.measure, filter)),
        Report::TimeToMerge => ReportOutput::Durations(DurationReport {
            lens,
            groups: time_to_merge(ds, filter),
        }),
        Report::FirstAttention => {
            let fa = time_to_first_attention(ds, filter);
            ReportOutput::FirstAttention(FirstAttentionReport {
                lens,
                groups: fa.groups,
                never_attended: fa.never_attended,
            })
        }
        Report::PrOverview => ReportOutput::Overview(OverviewReport {
            lens,
            groups: pr_overview(ds, filter),
        }),
        Report::Contributors => {
            let groups = contributor_totals(ds, filter);
            ReportOutput::Contributors(ContributorsReport {
                lens,
                total: groups.values().map(|s| s.count).sum(),
                groups,
            })
        }
        Report::Attention => ReportOutput::Attention(AttentionReport {
            lens,
            rows: prs_needing_attention(ds, filter),
        }),
        Report::Network => ReportOutput::Network(build_pr_network(ds, filter)),
    }
}

/// Pretty-printed JSON with a trailing newline.
pub fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("report types serialize infallibly");
    out.push(b'\n');
    out
}

fn ts(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl ReportOutput {
    pub fn to_json(&self) -> Vec<u8> {
        json_bytes(self)
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        self.write_csv(&mut w).expect("writing CSV to memory cannot fail");
        w.into_inner().expect("flushing CSV to memory cannot fail")
    }

    fn write_csv(&self, w: &mut csv::Writer<Vec<u8>>) -> csv::Result<()> {
        match self {
            ReportOutput::Turnover(t) => {
                w.write_record(["month", "group", "newcomers", "left", "might_be_leaving", "retention_rate"])?;
                for m in &t.months {
                    for (g, c) in &m.groups {
                        w.write_record([
                            m.month.to_string(),
                            g.clone(),
                            c.newcomers.to_string(),
                            c.left.to_string(),
                            c.might_be_leaving.to_string(),
                            opt(c.retention_rate),
                        ])?;
                    }
                }
            }
            ReportOutput::DrillDown(d) => {
                w.write_record([
                    "category",
                    "identity_id",
                    "display_name",
                    "group",
                    "contribution_count",
                    "affiliation",
                    "gender",
                    "last_contribution",
                ])?;
                let lists = [
                    ("newcomers", &d.lists.newcomers),
                    ("might_be_leaving", &d.lists.might_be_leaving),
                    ("left", &d.lists.left),
                ];
                for (category, rows) in lists {
                    for r in rows {
                        w.write_record([
                            category.to_string(),
                            r.identity_id.to_string(),
                            r.display_name.clone(),
                            r.group.clone(),
                            r.contribution_count.to_string(),
                            r.affiliation.clone(),
                            r.gender.to_string(),
                            ts(r.last_contribution),
                        ])?;
                    }
                }
            }
            ReportOutput::Series(s) => {
                w.write_record(["month", "group", "value"])?;
                for b in &s.buckets {
                    for (g, v) in &b.values {
                        w.write_record([b.month.to_string(), g.clone(), v.to_string()])?;
                    }
                }
            }
            ReportOutput::Durations(d) => {
                w.write_record(["group", "avg_days", "median_days", "count"])?;
                for r in &d.groups {
                    w.write_record([
                        r.group.clone(),
                        r.avg_days.to_string(),
                        r.median_days.to_string(),
                        r.count.to_string(),
                    ])?;
                }
            }
            ReportOutput::FirstAttention(f) => {
                w.write_record(["group", "avg_days", "median_days", "count", "never_attended"])?;
                let never = |g: &str| f.never_attended.get(g).copied().unwrap_or(0).to_string();
                for r in &f.groups {
                    w.write_record([
                        r.group.clone(),
                        r.avg_days.to_string(),
                        r.median_days.to_string(),
                        r.count.to_string(),
                        never(&r.group),
                    ])?;
                }
                for g in f.never_attended.keys() {
                    if !f.groups.iter().any(|r| &r.group == g) {
                        w.write_record([g.clone(), String::new(), String::new(), "0".into(), never(g)])?;
                    }
                }
            }
            ReportOutput::Overview(o) => {
                w.write_record(["group", "pr_count", "comment_count", "reaction_count"])?;
                for (g, r) in &o.groups {
                    w.write_record([
                        g.clone(),
                        r.pr_count.to_string(),
                        r.comment_count.to_string(),
                        r.reaction_count.to_string(),
                    ])?;
                }
            }
            ReportOutput::Contributors(c) => {
                w.write_record(["group", "count", "percentage"])?;
                for (g, s) in &c.groups {
                    w.write_record([g.clone(), s.count.to_string(), s.percentage.to_string()])?;
                }
            }
            ReportOutput::Attention(a) => {
                w.write_record([
                    "repo_id",
                    "artifact_id",
                    "artifact_url",
                    "created_at",
                    "author_id",
                    "author_name",
                    "author_affiliation",
                    "author_gender",
                    "group",
                    "age_days",
                ])?;
                for r in &a.rows {
                    w.write_record([
                        r.repo_id.clone(),
                        r.artifact_id.clone(),
                        opt(r.artifact_url.as_ref()),
                        ts(r.created_at),
                        r.author_id.to_string(),
                        r.author_name.clone(),
                        r.author_affiliation.clone(),
                        r.author_gender.to_string(),
                        r.group.clone(),
                        r.age_days.to_string(),
                    ])?;
                }
            }
            ReportOutput::Network(g) => {
                w.write_record([
                    "source",
                    "source_name",
                    "source_group",
                    "target",
                    "target_name",
                    "target_group",
                    "weight",
                ])?;
                let nodes: BTreeMap<_, _> = g.nodes.iter().map(|n| (&n.id, n)).collect();
                for e in &g.edges {
                    let (s, t) = (nodes[&e.source], nodes[&e.target]);
                    w.write_record([
                        s.id.to_string(),
                        s.name.clone(),
                        s.group.clone(),
                        t.id.to_string(),
                        t.name.clone(),
                        t.group.clone(),
                        e.weight.to_string(),
                    ])?;
                }
                for id in g.isolated_nodes() {
                    let n = nodes[id];
                    w.write_record([
                        n.id.to_string(),
                        n.name.clone(),
                        n.group.clone(),
                        String::new(),
                        String::new(),
                        String::new(),
                        "0".into(),
                    ])?;
                }
            }
        }
        Ok(())
    }
}
