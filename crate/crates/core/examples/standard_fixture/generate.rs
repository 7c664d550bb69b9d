//! Seeded generator for the standard fixture: about 50 contributors and
//! 1,000 events over 24 months (2022-01 to 2023-12).
//!
//! Shape guarantees relied on by tests:
//! - every PR by a non-isolated author that is not closed unmerged gets at
//!   least one comment or review from another human;
//! - isolated authors never comment on other PRs and their PRs only ever
//!   see bot or self comments, so they are exactly the authors of PRs that
//!   need attention.

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tapestry_core::{ActivityEvent, EventKind, RawProfile, SourceKind};

pub const SEED: u64 = 20_240_917;
const GITHUB_REPO: &str = "tapestry/demo";
const GIT_REPO: &str = "demo";
const QA_REPO: &str = "demo-forum";
const MONTHS: u32 = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Core,
    Regular,
    OneTime,
    Isolated,
    QaOnly,
}

struct Person {
    handle: String,
    full_name: String,
    email: Option<String>,
    /// Email used for git commits, if the person commits.
    git_email: Option<String>,
    role: Role,
    first: u32,
    last: u32,
}

const WOMEN: [&str; 9] = ["Maria", "Aisha", "Sofia", "Yuki", "Elena", "Priya", "Fatima", "Ingrid", "Lucia"];
const MEN: [&str; 22] = [
    "James", "Wei", "Carlos", "Ahmed", "Lukas", "Raj", "Kenji", "Omar", "Pedro", "Ivan", "Tom", "Samuel",
    "Diego", "Hiro", "Arjun", "Mateo", "Felix", "Noah", "Emeka", "Jonas", "Marco", "Andrei",
];
const SURNAMES: [&str; 25] = [
    "Silva", "Chen", "Garcia", "Khan", "Muller", "Patel", "Tanaka", "Haddad", "Santos", "Petrov", "Smith",
    "Okafor", "Lopez", "Sato", "Sharma", "Rossi", "Novak", "Berg", "Costa", "Nguyen", "Kowalski", "Ali",
    "Moreau", "Jensen", "Ito",
];
const ORIGINS: [&str; 7] = ["BR", "CN", "ES", "IN", "DE", "JP", "US"];
const CORPORATE: [(&str, &str); 4] = [
    ("acme.com", "Acme"),
    ("globex.com", "Globex"),
    ("initech.io", "Initech"),
    ("umbrella.org", "Umbrella"),
];
const FREEMAIL: [&str; 4] = ["gmail.com", "outlook.com", "yahoo.com", "proton.me"];

struct Gen {
    rng: ChaCha8Rng,
    events: Vec<ActivityEvent>,
    next_native: u64,
}

fn month_start(m: u32) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2022 + (m / 12) as i32, m % 12 + 1, 1, 0, 0, 0).unwrap()
}

impl Gen {
    fn instant(&mut self, month: u32) -> DateTime<Utc> {
        let offset = self.rng.gen_range(0..27 * 24 * 60);
        month_start(month) + Duration::minutes(offset)
    }

    fn after(&mut self, t: DateTime<Utc>, max_hours: i64) -> DateTime<Utc> {
        let hours = self.rng.gen_range(1..=max_hours);
        let minutes = self.rng.gen_range(0..60);
        (t + Duration::hours(hours) + Duration::minutes(minutes)).min(end_of_range())
    }

    fn native(&mut self) -> String {
        self.next_native += 1;
        self.next_native.to_string()
    }

    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        source: SourceKind,
        repo: &str,
        kind: EventKind,
        actor: RawProfile,
        at: DateTime<Utc>,
        artifact: &str,
        reactions: Option<u64>,
    ) {
        let native = self.native();
        let url = match source {
            SourceKind::Github if kind.is_pull_request() => Some(format!("https://github.com/{repo}/pull/{artifact}")),
            SourceKind::Github => Some(format!("https://github.com/{repo}/issues/{artifact}")),
            SourceKind::QaForum => Some(format!("https://forum.example.org/questions/{artifact}")),
            _ => None,
        };
        self.events.push(ActivityEvent {
            event_id: ActivityEvent::make_id(source, repo, kind, &native),
            source_kind: source,
            kind,
            actor,
            timestamp: at,
            repo_id: repo.to_string(),
            artifact_id: artifact.to_string(),
            artifact_url: url,
            reactions,
        });
    }
}

fn end_of_range() -> DateTime<Utc> {
    month_start(MONTHS) - Duration::hours(1)
}

fn github(p: &Person) -> RawProfile {
    let mut profile = RawProfile::new(SourceKind::Github)
        .with_username(&p.handle)
        .with_full_name(&p.full_name)
        .with_profile_url(format!("https://github.com/{}", p.handle));
    if let Some(email) = &p.email {
        profile = profile.with_email(email);
    }
    profile
}

fn git(p: &Person) -> Option<RawProfile> {
    let email = p.git_email.as_ref()?;
    Some(RawProfile::new(SourceKind::Git).with_email(email).with_full_name(&p.full_name))
}

fn qa(p: &Person) -> RawProfile {
    RawProfile::new(SourceKind::QaForum).with_username(&p.full_name)
}

fn bot(name: &str) -> RawProfile {
    RawProfile::new(SourceKind::Github).with_username(name)
}

fn people(rng: &mut ChaCha8Rng) -> Vec<Person> {
    let mut out = Vec::new();
    let mut used = std::collections::BTreeSet::new();
    for i in 0..50u32 {
        let woman = i % 7 == 2;
        let first = if woman {
            WOMEN[(i as usize / 7) % WOMEN.len()]
        } else {
            MEN[i as usize % MEN.len()]
        };
        let mut s = i as usize % SURNAMES.len();
        while !used.insert((first, s)) {
            s = (s + 7) % SURNAMES.len();
        }
        let last = SURNAMES[s];
        let handle = format!("{}{}", first.to_lowercase(), last[..3].to_lowercase());
        let role = match i {
            0..=7 => Role::Core,
            8..=27 => Role::Regular,
            28..=41 => Role::OneTime,
            42..=45 => Role::Isolated,
            _ => Role::QaOnly,
        };
        let local = format!("{}.{}", first.to_lowercase(), last.to_lowercase());
        let domain = if i % 3 == 0 {
            FREEMAIL[i as usize % FREEMAIL.len()]
        } else {
            CORPORATE[i as usize % CORPORATE.len()].0
        };
        let email = (i % 5 != 4).then(|| format!("{local}@{domain}"));
        let git_email = match role {
            Role::Core => email.clone().or_else(|| Some(format!("{local}@{domain}"))),
            Role::Regular if i % 2 == 0 => email.clone(),
            _ => None,
        };
        let (first_month, last_month) = match role {
            Role::Core => (rng.gen_range(0..3), MONTHS - 1),
            Role::Regular => {
                let start = rng.gen_range(0..MONTHS - 2);
                (start, (start + rng.gen_range(2..12)).min(MONTHS - 1))
            }
            Role::OneTime => {
                let m = rng.gen_range(0..MONTHS);
                (m, m)
            }
            Role::Isolated => {
                let m = rng.gen_range(4..MONTHS - 1);
                (m, m + 1)
            }
            Role::QaOnly => {
                let start = rng.gen_range(0..MONTHS - 6);
                (start, start + rng.gen_range(1..6))
            }
        };
        out.push(Person {
            handle,
            full_name: format!("{first} {last}"),
            email,
            git_email,
            role,
            first: first_month,
            last: last_month,
        });
    }
    // One maintainer moved from Globex to Acme: GitHub still shows the old
    // address, recent commits use the new one.
    out[1].email = Some("wei.chen@globex.com".into());
    out[1].git_email = Some("wei.chen@acme.com".into());
    out
}

fn reviewers<'a>(rng: &mut ChaCha8Rng, people: &'a [Person], author: usize, month: u32) -> Vec<&'a Person> {
    let pool: Vec<&Person> = people
        .iter()
        .enumerate()
        .filter(|(i, p)| {
            *i != author && matches!(p.role, Role::Core | Role::Regular) && p.first <= month && month <= p.last
        })
        .map(|(_, p)| p)
        .collect();
    let n = rng.gen_range(1..=3).min(pool.len());
    pool.choose_multiple(rng, n).copied().collect()
}

fn pull_request(g: &mut Gen, people: &[Person], author: usize, month: u32, pr: &mut u64) {
    *pr += 1;
    let id = pr.to_string();
    let p = &people[author];
    let opened = g.instant(month);
    let reactions = g.rng.gen_range(0..6);
    g.push(SourceKind::Github, GITHUB_REPO, EventKind::PrOpened, github(p), opened, &id, Some(reactions));

    if g.rng.gen_bool(0.3) {
        let at = g.after(opened, 2);
        g.push(SourceKind::Github, GITHUB_REPO, EventKind::PrComment, bot("ci-bot"), at, &id, None);
    }
    let mut last = opened;
    if p.role == Role::Isolated {
        if g.rng.gen_bool(0.5) {
            let at = g.after(opened, 48);
            g.push(SourceKind::Github, GITHUB_REPO, EventKind::PrComment, github(p), at, &id, None);
        }
        return;
    }
    for reviewer in reviewers(&mut g.rng, people, author, month) {
        let comments = g.rng.gen_range(1..=2);
        for c in 0..comments {
            let kind = if c == comments - 1 && g.rng.gen_bool(0.5) {
                EventKind::PrReview
            } else {
                EventKind::PrComment
            };
            let at = g.after(last, 96);
            last = at;
            g.push(SourceKind::Github, GITHUB_REPO, kind, github(reviewer), at, &id, None);
        }
    }
    let fate: f64 = g.rng.gen();
    let at = g.after(last, 24 * 10);
    if fate < 0.8 {
        g.push(SourceKind::Github, GITHUB_REPO, EventKind::PrMerged, github(p), at, &id, None);
    } else if fate < 0.9 {
        g.push(SourceKind::Github, GITHUB_REPO, EventKind::PrClosed, github(p), at, &id, None);
    }
}

fn issue(g: &mut Gen, people: &[Person], author: usize, month: u32, number: &mut u64) {
    *number += 1;
    let id = format!("i{number}");
    let p = &people[author];
    let opened = g.instant(month);
    let reactions = g.rng.gen_range(0..3);
    g.push(SourceKind::Github, GITHUB_REPO, EventKind::IssueOpened, github(p), opened, &id, Some(reactions));
    let mut last = opened;
    if g.rng.gen_bool(0.2) {
        let at = g.after(opened, 72);
        g.push(SourceKind::Github, GITHUB_REPO, EventKind::IssueComment, github(p), at, &id, None);
        return;
    }
    for responder in reviewers(&mut g.rng, people, author, month).into_iter().take(2) {
        let at = g.after(last, 24 * 6);
        last = at;
        g.push(SourceKind::Github, GITHUB_REPO, EventKind::IssueComment, github(responder), at, &id, None);
    }
    if g.rng.gen_bool(0.6) {
        let at = g.after(last, 24 * 5);
        g.push(SourceKind::Github, GITHUB_REPO, EventKind::IssueClosed, github(p), at, &id, None);
    }
}

/// Every fixture file keyed by file name.
pub fn generate() -> BTreeMap<&'static str, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let people = people(&mut rng);
    let mut g = Gen {
        rng,
        events: Vec::new(),
        next_native: 0,
    };
    let (mut pr, mut issues, mut question) = (0u64, 0u64, 0u64);

    for (i, p) in people.iter().enumerate() {
        for month in p.first..=p.last {
            match p.role {
                Role::Core | Role::Regular => {
                    let pr_rate = if p.role == Role::Core { 0.25 } else { 0.3 };
                    if month == p.first || g.rng.gen_bool(pr_rate) {
                        pull_request(&mut g, &people, i, month, &mut pr);
                    }
                    if let Some(profile) = git(p) {
                        for _ in 0..g.rng.gen_range(0..=1) {
                            let at = g.instant(month);
                            let sha = format!("{:040x}", g.rng.gen::<u128>());
                            g.push(SourceKind::Git, GIT_REPO, EventKind::Commit, profile.clone(), at, &sha, None);
                        }
                    }
                    if g.rng.gen_bool(0.15) {
                        issue(&mut g, &people, i, month, &mut issues);
                    }
                }
                Role::OneTime => {
                    if i % 2 == 0 {
                        pull_request(&mut g, &people, i, month, &mut pr);
                    } else {
                        issue(&mut g, &people, i, month, &mut issues);
                    }
                }
                Role::Isolated => pull_request(&mut g, &people, i, month, &mut pr),
                Role::QaOnly => {
                    question += 1;
                    let q = format!("q{question}");
                    let at = g.instant(month);
                    g.push(SourceKind::QaForum, QA_REPO, EventKind::QaQuestion, qa(p), at, &q, None);
                    let answerer = &people[g.rng.gen_range(0..8)];
                    let at = g.after(at, 24 * 3);
                    g.push(SourceKind::QaForum, QA_REPO, EventKind::QaAnswer, qa(answerer), at, &q, None);
                }
            }
        }
    }
    // A maintainer keeps the lights on until the end of the range.
    let at = end_of_range() - Duration::hours(2);
    if let Some(profile) = git(&people[0]) {
        g.push(SourceKind::Git, GIT_REPO, EventKind::Commit, profile, at, &format!("{:040x}", 1), None);
    }
    // Dependency update PRs from a bot, reviewed by maintainers.
    for month in (0..MONTHS).step_by(3) {
        pr += 1;
        let id = pr.to_string();
        let opened = g.instant(month);
        g.push(SourceKind::Github, GITHUB_REPO, EventKind::PrOpened, bot("dependabot[bot]"), opened, &id, Some(0));
        let reviewer = &people[g.rng.gen_range(0..8)];
        let at = g.after(opened, 48);
        g.push(SourceKind::Github, GITHUB_REPO, EventKind::PrReview, github(reviewer), at, &id, None);
        let at = g.after(at, 4);
        g.push(SourceKind::Github, GITHUB_REPO, EventKind::PrMerged, github(reviewer), at, &id, None);
    }

    tapestry_core::ingest::sort_events(&mut g.events);
    let mut files = BTreeMap::new();
    let mut ndjson = String::new();
    for e in &g.events {
        ndjson.push_str(&serde_json::to_string(e).unwrap());
        ndjson.push('\n');
    }
    files.insert("events.ndjson", ndjson);
    files.insert("names.csv", names_csv(&people, &mut g.rng));
    files.insert("overrides.csv", overrides_csv(&people));
    files.insert("domains.json", domains_json());
    files.insert("identity_rules.json", rules_json(&people));
    files.insert("tapestry.toml", CONFIG.to_string());
    files
}

fn names_csv(people: &[Person], rng: &mut ChaCha8Rng) -> String {
    let mut out = String::from("full_name,origin,gender,probability\n");
    for (i, p) in people.iter().enumerate() {
        // A few names the dictionary has never seen.
        if i % 11 == 10 {
            continue;
        }
        let first = p.full_name.split(' ').next().unwrap();
        let gender = if WOMEN.contains(&first) { "female" } else { "male" };
        let probability = match i {
            3 => 0.89,
            4 => 0.90,
            5 => 0.95,
            _ if i % 9 == 8 => rng.gen_range(0.55..0.85),
            _ => rng.gen_range(0.91..0.995),
        };
        let origin = ORIGINS[i % ORIGINS.len()];
        out.push_str(&format!("{},{origin},{gender},{probability:.3}\n", p.full_name));
        // A weaker reading under another origin that must not win.
        if i % 6 == 0 {
            let other = if gender == "female" { "male" } else { "female" };
            out.push_str(&format!("{},{},{other},0.600\n", p.full_name, ORIGINS[(i + 1) % ORIGINS.len()]));
        }
    }
    out
}

fn overrides_csv(people: &[Person]) -> String {
    format!(
        "identity_key,gender\n{},female\ngithub:{},non-binary\n",
        people[3].handle, people[12].handle
    )
}

fn domains_json() -> String {
    let corporate: BTreeMap<&str, &str> = CORPORATE.into_iter().collect();
    let value = serde_json::json!({
        "corporate": corporate,
        "freemail": FREEMAIL,
        "unlisted_domains_are_orgs": false,
    });
    let mut s = serde_json::to_string_pretty(&value).unwrap();
    s.push('\n');
    s
}

fn rules_json(people: &[Person]) -> String {
    let moved = &people[1];
    let qa_person = &people[0];
    let value = serde_json::json!({
        "manual_merges": [
            {
                "id": "moved-company",
                "profiles": [
                    format!("github:{}", moved.handle),
                    format!("git:<{}>", moved.git_email.as_ref().unwrap()),
                ],
            },
            [
                format!("github:{}", qa_person.handle),
                format!("qa_forum:{}", qa_person.full_name.to_lowercase()),
            ],
        ],
        "manual_splits": [],
        "bot_patterns": ["*[bot]", "*-bot"],
        "bot_list": [],
    });
    let mut s = serde_json::to_string_pretty(&value).unwrap();
    s.push('\n');
    s
}

const CONFIG: &str = r#"# Standard fixture project. Paths are relative to this file.
project = "tapestry-demo"
store = "store"
domains = "domains.json"
identity_rules = "identity_rules.json"
gender_dictionary = "names.csv"
overrides = "overrides.csv"
threshold = 0.9

[[sources]]
kind = "fixture"
locator = "events.ndjson"
"#;
