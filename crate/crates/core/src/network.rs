//! Pull-request communication network.
//!
//! Contributors are nodes; two contributors are linked when they took part
//! in the same PR (as author, commenter or reviewer), and the edge weight is
//! the number of distinct PRs they share, not the number of comments.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::identity::IdentityId;
use crate::metrics::{group_of, prs_needing_attention, AttentionRow, Dataset, FilterSpec, Lens};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: IdentityId,
    pub name: String,
    pub group: String,
    /// PRs authored inside the window.
    pub size: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    /// Always the smaller of the two ids.
    pub source: IdentityId,
    pub target: IdentityId,
    pub weight: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommunicationGraph {
    pub lens: Lens,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

impl CommunicationGraph {
    /// Weight between two nodes in either order; 0 when unlinked.
    pub fn weight(&self, a: &IdentityId, b: &IdentityId) -> u64 {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        self.edges
            .binary_search_by(|e| (&e.source, &e.target).cmp(&(lo, hi)))
            .map(|i| self.edges[i].weight)
            .unwrap_or(0)
    }

    pub fn degree(&self, id: &IdentityId) -> usize {
        self.edges
            .iter()
            .filter(|e| &e.source == id || &e.target == id)
            .count()
    }

    pub fn isolated_nodes(&self) -> BTreeSet<&IdentityId> {
        let linked: BTreeSet<&IdentityId> = self
            .edges
            .iter()
            .flat_map(|e| [&e.source, &e.target])
            .collect();
        self.nodes
            .iter()
            .map(|n| &n.id)
            .filter(|id| !linked.contains(id))
            .collect()
    }
}

/// Builds the graph over PRs opened in the window by authors in the group
/// filter. Bots never appear.
pub fn build_pr_network(ds: &Dataset, filter: &FilterSpec) -> CommunicationGraph {
    let mut authored: BTreeMap<&IdentityId, u64> = BTreeMap::new();
    let mut participants: BTreeSet<&IdentityId> = BTreeSet::new();
    let mut weights: BTreeMap<(&IdentityId, &IdentityId), u64> = BTreeMap::new();

    for (pr, author, _) in ds.authored_in(ds.pull_requests(), filter) {
        *authored.entry(&author.identity_id).or_default() += 1;
        let mut people: BTreeSet<&IdentityId> = pr
            .interactions
            .iter()
            .map(|i| &i.identity)
            .filter(|id| ds.is_human(id))
            .collect();
        people.insert(&author.identity_id);
        let people: Vec<&IdentityId> = people.into_iter().collect();
        for (i, a) in people.iter().enumerate() {
            for b in &people[i + 1..] {
                *weights.entry((a, b)).or_default() += 1;
            }
        }
        participants.extend(people);
    }

    let nodes = participants
        .into_iter()
        .map(|id| {
            let identity = ds.identity(id).expect("participants are registered");
            Node {
                id: id.clone(),
                name: identity.display_name.clone(),
                group: group_of(identity, filter.lens),
                size: authored.get(id).copied().unwrap_or(0),
            }
        })
        .collect();
    let edges = weights
        .into_iter()
        .map(|((a, b), weight)| Edge {
            source: a.clone(),
            target: b.clone(),
            weight,
        })
        .collect();
    CommunicationGraph {
        lens: filter.lens,
        nodes,
        edges,
    }
}

/// Uncommented PRs of contributors who have no link in `graph`.
pub fn isolated_contributors(
    graph: &CommunicationGraph,
    ds: &Dataset,
    filter: &FilterSpec,
) -> Vec<AttentionRow> {
    let isolated = graph.isolated_nodes();
    prs_needing_attention(ds, filter)
        .into_iter()
        .filter(|row| isolated.contains(&row.author_id))
        .collect()
}

/// Connected components, largest first; ties broken by smallest member.
pub fn connected_components(graph: &CommunicationGraph) -> Vec<BTreeSet<IdentityId>> {
    let index: BTreeMap<&IdentityId, usize> =
        graph.nodes.iter().enumerate().map(|(i, n)| (&n.id, i)).collect();
    let mut parent: Vec<usize> = (0..graph.nodes.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for e in &graph.edges {
        let (Some(&a), Some(&b)) = (index.get(&e.source), index.get(&e.target)) else {
            continue;
        };
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut groups: BTreeMap<usize, BTreeSet<IdentityId>> = BTreeMap::new();
    for (i, node) in graph.nodes.iter().enumerate() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().insert(node.id.clone());
    }
    let mut out: Vec<BTreeSet<IdentityId>> = groups.into_values().collect();
    out.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.first().cmp(&b.first())));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::EventKind;
    use crate::metrics::testkit::*;

    fn id_of(ds: &Dataset, user: &str) -> IdentityId {
        ds.registry()
            .iter()
            .find(|i| i.usernames().any(|u| u == user))
            .unwrap()
            .identity_id
            .clone()
    }

    #[test]
    fn minimal_graph() {
        let ds = Builder::new()
            .event("a", EventKind::PrOpened, "1", at(2023, 1, 1))
            .event("b", EventKind::PrReview, "1", at(2023, 1, 2))
            .build();
        let g = build_pr_network(&ds, &FilterSpec::default());
        assert_eq!(g.nodes.len(), 2);
        assert_eq!(g.edges.len(), 1);
        assert_eq!(g.weight(&id_of(&ds, "a"), &id_of(&ds, "b")), 1);
        assert_eq!(g.weight(&id_of(&ds, "b"), &id_of(&ds, "a")), 1);
    }

    #[test]
    fn weight_counts_prs_not_comments() {
        let mut b = Builder::new()
            .event("a", EventKind::PrOpened, "1", at(2023, 1, 1))
            .event("a", EventKind::PrOpened, "2", at(2023, 1, 1));
        for i in 0..7 {
            let pr = if i < 4 { "1" } else { "2" };
            b = b.event("b", EventKind::PrComment, pr, at(2023, 1, 2 + i));
        }
        let ds = b.build();
        let g = build_pr_network(&ds, &FilterSpec::default());
        assert_eq!(g.weight(&id_of(&ds, "a"), &id_of(&ds, "b")), 2);
    }

    #[test]
    fn triangle_and_isolate() {
        let ds = Builder::new()
            .event("a", EventKind::PrOpened, "1", at(2023, 1, 1))
            .event("b", EventKind::PrComment, "1", at(2023, 1, 2))
            .event("b", EventKind::PrOpened, "2", at(2023, 1, 1))
            .event("c", EventKind::PrComment, "2", at(2023, 1, 2))
            .event("c", EventKind::PrOpened, "3", at(2023, 1, 1))
            .event("a", EventKind::PrReview, "3", at(2023, 1, 2))
            .event("d", EventKind::PrOpened, "4", at(2023, 1, 1))
            .event("renovate[bot]", EventKind::PrComment, "4", at(2023, 1, 2))
            .build();
        let filter = FilterSpec::default();
        let g = build_pr_network(&ds, &filter);
        assert_eq!(g.nodes.len(), 4);
        assert!(g.edges.iter().all(|e| e.weight == 1 && e.source < e.target));
        assert_eq!(g.edges.len(), 3);
        let sizes: Vec<usize> = connected_components(&g).iter().map(BTreeSet::len).collect();
        assert_eq!(sizes, [3, 1]);
        let isolated = isolated_contributors(&g, &ds, &filter);
        assert_eq!(isolated.len(), 1);
        assert_eq!(isolated[0].artifact_id, "4");
    }

    #[test]
    fn empty_graph() {
        let ds = Builder::new().build();
        let g = build_pr_network(&ds, &FilterSpec::default());
        assert!(g.nodes.is_empty());
        assert!(connected_components(&g).is_empty());
    }

    #[test]
    fn two_pairs() {
        let ds = Builder::new()
            .event("a", EventKind::PrOpened, "1", at(2023, 1, 1))
            .event("b", EventKind::PrComment, "1", at(2023, 1, 2))
            .event("c", EventKind::PrOpened, "2", at(2023, 1, 1))
            .event("d", EventKind::PrComment, "2", at(2023, 1, 2))
            .build();
        let g = build_pr_network(&ds, &FilterSpec::default());
        let sizes: Vec<usize> = connected_components(&g).iter().map(BTreeSet::len).collect();
        assert_eq!(sizes, [2, 2]);
    }

    #[test]
    fn wire_shape() {
        let ds = Builder::new()
            .event("a", EventKind::PrOpened, "1", at(2023, 1, 1))
            .build();
        let json = serde_json::to_value(build_pr_network(&ds, &FilterSpec::default())).unwrap();
        let node = &json["nodes"][0];
        assert_eq!(node["name"], "a");
        assert_eq!(node["group"], "all");
        assert_eq!(node["size"], 1);
        assert!(json["edges"].as_array().unwrap().is_empty());
    }
}
