//! Co-occurrence graphs over synonym clusters.
//!
//! Nodes are clusters; an edge's weight counts the distinct papers in which
//! both endpoint clusters have at least one mention. Co-occurrence is
//! cross-category only, at whole-paper granularity, and isolated nodes are
//! kept so frequency reporting stays complete.

mod export;

pub use export::{export_graph, import_graph, ExportFormat};

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::clustering::SynonymCluster;
use crate::error::{Error, Result};
use crate::extraction::{Category, Mention};

/// Which clusters participate: all three categories, or the
/// objective-dataset bipartite view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GraphView {
    ThreeElement,
    ObjectiveDataset,
}

impl GraphView {
    fn includes(&self, category: Category) -> bool {
        match self {
            GraphView::ThreeElement => true,
            GraphView::ObjectiveDataset => {
                matches!(category, Category::Objective | Category::Dataset)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphNode {
    pub cluster_id: String,
    pub category: Category,
    pub label: String,
    pub paper_freq: usize,
}

/// Undirected edge; endpoints are cluster ids with `a` ordered before `b`
/// by node sort order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub a: String,
    pub b: String,
    pub weight: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CooccurrenceGraph {
    pub view: GraphView,
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
}

impl CooccurrenceGraph {
    pub fn node_index(&self) -> HashMap<&str, usize> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.cluster_id.as_str(), i))
            .collect()
    }
}

fn node_sort_key(n: &GraphNode) -> (Category, &str, &str) {
    (n.category, n.label.as_str(), n.cluster_id.as_str())
}

/// Build the co-occurrence graph for `view`.
///
/// Every mention must map to exactly one cluster through its
/// (category, normalized) pair; for each paper, every cross-category pair of
/// clusters present in that paper adds 1 to the pair's weight.
pub fn build_cooccurrence(
    clusters: &[SynonymCluster],
    mentions: &[Mention],
    view: GraphView,
) -> Result<CooccurrenceGraph> {
    let mut member_to_cluster: HashMap<(Category, &str), &SynonymCluster> = HashMap::new();
    for cluster in clusters {
        for member in &cluster.members {
            member_to_cluster.insert((cluster.category, member.as_str()), cluster);
        }
    }

    // Clusters present per paper, validated over all mentions first.
    let mut per_paper: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut cluster_category: HashMap<&str, Category> = HashMap::new();
    for mention in mentions {
        let cluster = member_to_cluster
            .get(&(mention.category, mention.normalized.as_str()))
            .ok_or_else(|| {
                Error::DataIntegrity(format!(
                    "mention '{}' ({}, paper '{}') maps to no cluster",
                    mention.surface, mention.category, mention.paper_id
                ))
            })?;
        if view.includes(cluster.category) {
            per_paper
                .entry(mention.paper_id.as_str())
                .or_default()
                .insert(cluster.id.as_str());
            cluster_category.insert(cluster.id.as_str(), cluster.category);
        }
    }

    let mut nodes: Vec<GraphNode> = clusters
        .iter()
        .filter(|c| view.includes(c.category))
        .map(|c| GraphNode {
            cluster_id: c.id.clone(),
            category: c.category,
            label: c.label.clone(),
            paper_freq: c.paper_freq,
        })
        .collect();
    nodes.sort_by(|x, y| node_sort_key(x).cmp(&node_sort_key(y)));
    let order: HashMap<&str, usize> = nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.cluster_id.as_str(), i))
        .collect();

    let mut weights: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for present in per_paper.values() {
        let ids: Vec<&str> = present.iter().copied().collect();
        for (i, &a) in ids.iter().enumerate() {
            for &b in &ids[i + 1..] {
                if cluster_category[a] == cluster_category[b] {
                    continue;
                }
                let (ka, kb) = (order[a], order[b]);
                let key = if ka < kb { (ka, kb) } else { (kb, ka) };
                *weights.entry(key).or_default() += 1;
            }
        }
    }
    let edges: Vec<GraphEdge> = weights
        .into_iter()
        .map(|((ka, kb), weight)| GraphEdge {
            a: nodes[ka].cluster_id.clone(),
            b: nodes[kb].cluster_id.clone(),
            weight,
        })
        .collect();

    Ok(CooccurrenceGraph { view, nodes, edges })
}

/// Top-k cluster labels of a category by paper frequency, descending, ties
/// broken lexicographically.
pub fn top_frequencies(
    clusters: &[SynonymCluster],
    category: Category,
    k: usize,
) -> Vec<(String, usize)> {
    let mut ranked: Vec<(String, usize)> = clusters
        .iter()
        .filter(|c| c.category == category)
        .map(|c| (c.label.clone(), c.paper_freq))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(k);
    ranked
}
