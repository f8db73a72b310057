//! Ward agglomerative clustering and synonym-cluster assembly.
//!
//! Mentions are clustered per category over the vectors of their distinct
//! normalized surfaces. Merge heights are Euclidean Ward distances, so a
//! singleton pair merges at exactly the distance between its points; cutting
//! the dendrogram at a height threshold yields the flat synonym clusters.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingVector;
use crate::error::{Error, Result};
use crate::extraction::{Category, Mention};

/// One agglomeration: clusters `left` and `right` merge into `merged` at
/// Ward distance `height`. Leaves are 0..n-1; merged ids continue from n in
/// step order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeStep {
    pub left: usize,
    pub right: usize,
    pub merged: usize,
    pub height: f64,
    pub size: usize,
}

/// A stepwise dendrogram: `leaf_count - 1` merges with non-decreasing
/// heights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub leaf_count: usize,
    pub steps: Vec<MergeStep>,
}

/// A consolidated group of synonymous mentions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynonymCluster {
    pub id: String,
    pub category: Category,
    pub label: String,
    pub members: Vec<String>,
    pub paper_freq: usize,
}

/// Ward hierarchical clustering of `points`.
///
/// Singleton-pair distances are Euclidean; after a merge, distances to the
/// new cluster follow the Lance-Williams recurrence for Ward linkage on
/// squared distances. Each step merges the minimum-distance pair, ties
/// broken by the lexicographically smallest (min id, max id) pair.
pub fn ward_cluster(points: &[Vec<f64>]) -> Result<Dendrogram> {
    let n = points.len();
    if n == 0 {
        return Err(Error::InvalidArgument("ward_cluster needs >= 1 point".into()));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::InvalidArgument(
            "ward_cluster points must share one dimension".into(),
        ));
    }
    let mut steps = Vec::with_capacity(n.saturating_sub(1));
    if n == 1 {
        return Ok(Dendrogram {
            leaf_count: 1,
            steps,
        });
    }

    // Dense squared-distance matrix over all 2n-1 cluster ids.
    let total = 2 * n - 1;
    let mut sq = vec![0.0f64; total * total];
    for i in 0..n {
        for j in (i + 1)..n {
            let d2: f64 = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            sq[i * total + j] = d2;
            sq[j * total + i] = d2;
        }
    }
    let mut active: Vec<usize> = (0..n).collect(); // kept sorted ascending
    let mut sizes = vec![1usize; total];

    for merged in n..total {
        // Scanning pairs in lexicographic id order makes "strictly less"
        // implement the (min id, max id) tie-break.
        let (mut bi, mut bj, mut bd) = (0usize, 0usize, f64::INFINITY);
        for (ai, &i) in active.iter().enumerate() {
            for &j in &active[ai + 1..] {
                let d2 = sq[i * total + j];
                if d2 < bd {
                    (bi, bj, bd) = (i, j, d2);
                }
            }
        }
        let (i, j, d2) = (bi, bj, bd);
        let (ni, nj) = (sizes[i] as f64, sizes[j] as f64);
        for &k in &active {
            if k == i || k == j {
                continue;
            }
            let nk = sizes[k] as f64;
            let dki = sq[k * total + i];
            let dkj = sq[k * total + j];
            let updated =
                (((ni + nk) * dki + (nj + nk) * dkj - nk * d2) / (ni + nj + nk)).max(0.0);
            sq[k * total + merged] = updated;
            sq[merged * total + k] = updated;
        }
        active.retain(|&c| c != i && c != j);
        active.push(merged);
        sizes[merged] = sizes[i] + sizes[j];
        steps.push(MergeStep {
            left: i,
            right: j,
            merged,
            height: d2.max(0.0).sqrt(),
            size: sizes[merged],
        });
    }
    Ok(Dendrogram {
        leaf_count: n,
        steps,
    })
}

/// Flatten a dendrogram by applying every merge with height strictly below
/// `threshold`. Leaf groups come back sorted by their smallest member.
pub fn cut_dendrogram(d: &Dendrogram, threshold: f64) -> Vec<Vec<usize>> {
    let total = d.leaf_count + d.steps.len();
    let mut parent: Vec<usize> = (0..total).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for step in &d.steps {
        if step.height < threshold {
            let (l, r) = (find(&mut parent, step.left), find(&mut parent, step.right));
            parent[l] = step.merged;
            parent[r] = step.merged;
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for leaf in 0..d.leaf_count {
        let root = find(&mut parent, leaf);
        groups.entry(root).or_default().push(leaf);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort_by_key(|g| g[0]);
    out
}

/// Consolidate mentions into [`SynonymCluster`]s.
///
/// Clustering runs independently per category over one vector per distinct
/// normalized surface (from `vectors`, keyed by normalized surface). The
/// cluster label is the most frequent surface form among member mentions,
/// ties going to the lexicographically smaller surface; `paper_freq` counts
/// distinct papers containing any member.
pub fn make_clusters(
    mentions: &[Mention],
    vectors: &HashMap<String, EmbeddingVector>,
    threshold: f64,
) -> Result<Vec<SynonymCluster>> {
    if threshold <= 0.0 {
        return Err(Error::InvalidArgument("cluster threshold must be > 0".into()));
    }
    let mut clusters = Vec::new();
    for category in Category::ALL {
        let of_category: Vec<&Mention> =
            mentions.iter().filter(|m| m.category == category).collect();
        if of_category.is_empty() {
            continue;
        }
        let mut surfaces: Vec<String> = of_category
            .iter()
            .map(|m| m.normalized.clone())
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        surfaces.sort();
        let points: Vec<Vec<f64>> = surfaces
            .iter()
            .map(|s| {
                vectors
                    .get(s)
                    .map(|v| v.coords())
                    .ok_or_else(|| Error::DataIntegrity(format!("no vector for surface '{s}'")))
            })
            .collect::<Result<_>>()?;
        let dendrogram = ward_cluster(&points)?;
        let groups = cut_dendrogram(&dendrogram, threshold);

        let mut built: Vec<(String, Vec<String>, usize)> = Vec::new();
        for group in groups {
            let members: Vec<String> = {
                let mut m: Vec<String> = group.iter().map(|&i| surfaces[i].clone()).collect();
                m.sort();
                m
            };
            let member_set: HashSet<&str> = members.iter().map(|s| s.as_str()).collect();
            let mut surface_counts: BTreeMap<&str, usize> = BTreeMap::new();
            let mut papers: HashSet<&str> = HashSet::new();
            for m in &of_category {
                if member_set.contains(m.normalized.as_str()) {
                    *surface_counts.entry(m.surface.as_str()).or_default() += 1;
                    papers.insert(m.paper_id.as_str());
                }
            }
            // BTreeMap iteration is lexicographic, so "strictly greater"
            // keeps the smaller surface on ties.
            let label = surface_counts
                .iter()
                .fold(("", 0usize), |best, (&s, &c)| if c > best.1 { (s, c) } else { best })
                .0
                .to_string();
            built.push((label, members, papers.len()));
        }
        built.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        for (idx, (label, members, paper_freq)) in built.into_iter().enumerate() {
            clusters.push(SynonymCluster {
                id: format!("{}-{idx:03}", category.slug()),
                category,
                label,
                members,
                paper_freq,
            });
        }
    }
    Ok(clusters)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SectionKind;

    fn mention(paper: &str, category: Category, surface: &str) -> Mention {
        Mention {
            paper_id: paper.into(),
            category,
            surface: surface.into(),
            normalized: crate::extraction::normalize(surface),
            section_kind: SectionKind::Other,
        }
    }

    #[test]
    fn identical_points_merge_at_height_zero() {
        let d = ward_cluster(&[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        assert_eq!(d.steps.len(), 1);
        assert_eq!(d.steps[0].height, 0.0);
        assert_eq!(d.steps[0].size, 2);
        assert_eq!((d.steps[0].left, d.steps[0].right, d.steps[0].merged), (0, 1, 2));
    }

    #[test]
    fn three_collinear_points_match_hand_evaluation() {
        let d = ward_cluster(&[vec![0.0, 0.0], vec![0.0, 1.0], vec![0.0, 10.0]]).unwrap();
        assert_eq!(d.steps.len(), 2);
        assert_eq!((d.steps[0].left, d.steps[0].right), (0, 1));
        assert!((d.steps[0].height - 1.0).abs() < 1e-12);
        assert_eq!((d.steps[1].left, d.steps[1].right), (2, 3));
        assert!((d.steps[1].height - (361.0f64 / 3.0).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn single_point_has_no_steps() {
        let d = ward_cluster(&[vec![5.0]]).unwrap();
        assert_eq!(d.leaf_count, 1);
        assert!(d.steps.is_empty());
    }

    #[test]
    fn no_points_is_invalid() {
        assert!(matches!(
            ward_cluster(&[]).unwrap_err(),
            Error::InvalidArgument(_)
        ));
    }

    #[test]
    fn mismatched_dimensions_are_invalid() {
        assert!(matches!(
            ward_cluster(&[vec![0.0], vec![0.0, 1.0]]).unwrap_err(),
            Error::InvalidArgument(_)
        ));
    }

    #[test]
    fn cut_at_threshold_splits_as_derived() {
        let d = ward_cluster(&[vec![0.0, 0.0], vec![0.0, 1.0], vec![0.0, 10.0]]).unwrap();
        assert_eq!(cut_dendrogram(&d, 5.0), vec![vec![0, 1], vec![2]]);
        assert_eq!(cut_dendrogram(&d, f64::INFINITY), vec![vec![0, 1, 2]]);
        assert_eq!(cut_dendrogram(&d, 0.5), vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn cut_threshold_is_exclusive() {
        let d = ward_cluster(&[vec![0.0], vec![1.0]]).unwrap();
        // Height equals the threshold: the merge is not applied.
        assert_eq!(cut_dendrogram(&d, 1.0), vec![vec![0], vec![1]]);
    }

    fn fixture_vectors() -> HashMap<String, EmbeddingVector> {
        let mut v = HashMap::new();
        v.insert("svm".into(), EmbeddingVector::unit(&[1.0, 0.0, 0.0]).unwrap());
        v.insert(
            "support vector machine".into(),
            EmbeddingVector::unit(&[1.0, 0.1, 0.0]).unwrap(),
        );
        v.insert("lstm".into(), EmbeddingVector::unit(&[0.0, 1.0, 0.0]).unwrap());
        v.insert("sp500".into(), EmbeddingVector::unit(&[0.0, 0.0, 1.0]).unwrap());
        v
    }

    #[test]
    fn synonyms_cluster_with_frequency_label() {
        let mentions = vec![
            mention("p1", Category::Method, "SVM"),
            mention("p2", Category::Method, "SVM"),
            mention("p3", Category::Method, "Support Vector Machine"),
        ];
        let clusters = make_clusters(&mentions, &fixture_vectors(), 0.7).unwrap();
        assert_eq!(clusters.len(), 1);
        let c = &clusters[0];
        assert_eq!(c.label, "SVM");
        assert_eq!(c.members, vec!["support vector machine", "svm"]);
        assert_eq!(c.paper_freq, 3);
        assert_eq!(c.id, "met-000");
    }

    #[test]
    fn single_mention_is_a_singleton_cluster() {
        let mentions = vec![mention("p1", Category::Dataset, "SP500")];
        let clusters = make_clusters(&mentions, &fixture_vectors(), 0.7).unwrap();
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].paper_freq, 1);
        assert_eq!(clusters[0].members, vec!["sp500"]);
    }

    #[test]
    fn categories_never_share_clusters() {
        let mut vectors = fixture_vectors();
        vectors.insert("shared".into(), EmbeddingVector::unit(&[0.5, 0.5, 0.0]).unwrap());
        let mentions = vec![
            mention("p1", Category::Method, "shared"),
            mention("p1", Category::Dataset, "shared"),
        ];
        let clusters = make_clusters(&mentions, &vectors, 10.0).unwrap();
        assert_eq!(clusters.len(), 2);
        assert_ne!(clusters[0].category, clusters[1].category);
    }

    #[test]
    fn label_tie_breaks_lexicographically() {
        let mut vectors = HashMap::new();
        vectors.insert("aa".into(), EmbeddingVector::unit(&[1.0, 0.0]).unwrap());
        vectors.insert("ab".into(), EmbeddingVector::unit(&[1.0, 0.05]).unwrap());
        let mentions = vec![
            mention("p1", Category::Method, "ab"),
            mention("p2", Category::Method, "aa"),
        ];
        let clusters = make_clusters(&mentions, &vectors, 0.7).unwrap();
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].label, "aa");
    }

    #[test]
    fn missing_vector_is_a_data_integrity_error() {
        let mentions = vec![mention("p1", Category::Method, "unknown surface")];
        let err = make_clusters(&mentions, &fixture_vectors(), 0.7).unwrap_err();
        assert!(matches!(err, Error::DataIntegrity(_)));
    }
}
