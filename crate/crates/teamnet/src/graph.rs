//! Per-project collaboration graphs and the structural primitives the
//! inclusion metrics are built on.
//!
//! A [`TeamGraph`] is the person-to-person projection of past shared
//! projects: nodes are the focal project's roster, and an edge of weight `w`
//! means the pair worked together on `w` projects released strictly before
//! the focal year. Nodes are stored sorted by `person_id`, so node indices
//! give a deterministic order that does not depend on roster order.
//!
//! The heavier operations take a [`GraphView`] (edges + genders) so callers
//! can recompute gender-dependent metrics under relabelled genders without
//! rebuilding structure.

use std::collections::BTreeSet;
use std::collections::HashMap;
use std::io::Write;

use crate::corpus::{Corpus, Gender, ProjectIdx};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TeamNode {
    pub person_id: String,
    pub gender: Gender,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TeamGraph {
    nodes: Vec<TeamNode>,
    edges: Vec<Edge>,
    focal_year: i32,
}

/// Borrowed structure + genders; the unit all metric computations run on.
#[derive(Debug, Clone, Copy)]
pub struct GraphView<'a> {
    pub n: usize,
    pub edges: &'a [Edge],
    pub genders: &'a [Gender],
}

impl TeamGraph {
    /// Build a graph from explicit parts. Nodes are re-sorted by person id
    /// and edges normalized to `a < b` in the sorted index space.
    pub fn new(nodes: Vec<(String, Gender)>, edges: Vec<(usize, usize, u32)>, focal_year: i32) -> Self {
        let mut order: Vec<usize> = (0..nodes.len()).collect();
        order.sort_by(|&i, &j| nodes[i].0.cmp(&nodes[j].0));
        let mut rank = vec![0usize; nodes.len()];
        for (new_idx, &old_idx) in order.iter().enumerate() {
            rank[old_idx] = new_idx;
        }
        let sorted_nodes: Vec<TeamNode> = order
            .iter()
            .map(|&i| TeamNode {
                person_id: nodes[i].0.clone(),
                gender: nodes[i].1,
            })
            .collect();
        let mut sorted_edges: Vec<Edge> = edges
            .into_iter()
            .filter(|&(a, b, _)| a != b)
            .map(|(a, b, w)| {
                let (a, b) = (rank[a], rank[b]);
                let (a, b) = if a < b { (a, b) } else { (b, a) };
                Edge { a, b, weight: w }
            })
            .collect();
        sorted_edges.sort_by_key(|e| (e.a, e.b));
        TeamGraph {
            nodes: sorted_nodes,
            edges: sorted_edges,
            focal_year,
        }
    }

    pub fn nodes(&self) -> &[TeamNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn focal_year(&self) -> i32 {
        self.focal_year
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn genders(&self) -> Vec<Gender> {
        self.nodes.iter().map(|n| n.gender).collect()
    }

    pub fn view<'a>(&'a self, genders: &'a [Gender]) -> GraphView<'a> {
        debug_assert_eq!(genders.len(), self.nodes.len());
        GraphView {
            n: self.nodes.len(),
            edges: &self.edges,
            genders,
        }
    }

    /// Debug export: one `i\tj\tweight\tgender_i\tgender_j` line per edge.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for e in &self.edges {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                self.nodes[e.a].person_id,
                self.nodes[e.b].person_id,
                e.weight,
                self.nodes[e.a].gender.as_str(),
                self.nodes[e.b].gender.as_str()
            )?;
        }
        Ok(())
    }
}

/// Project the focal project's roster onto a weighted collaboration graph.
///
/// Edge weight = number of shared projects released strictly before the
/// focal year. Roster members without prior shared projects stay isolates.
pub fn project_team_graph(corpus: &Corpus, project: ProjectIdx) -> TeamGraph {
    let focal = corpus.project(project);
    let year = focal.release_year;

    let nodes: Vec<(String, Gender)> = focal
        .roster
        .iter()
        .map(|c| {
            let p = corpus.person(c.person);
            (p.person_id.clone(), p.gender)
        })
        .collect();

    // Group roster members by shared prior project: a prior project with k
    // roster members contributes one count to each of its k*(k-1)/2 pairs.
    let mut by_prior: HashMap<ProjectIdx, Vec<usize>> = HashMap::new();
    for (i, c) in focal.roster.iter().enumerate() {
        for &prior in corpus.career(c.person) {
            if corpus.project(prior).release_year >= year {
                break;
            }
            by_prior.entry(prior).or_default().push(i);
        }
    }
    let mut weights: HashMap<(usize, usize), u32> = HashMap::new();
    for members in by_prior.values() {
        for (k, &i) in members.iter().enumerate() {
            for &j in &members[k + 1..] {
                let key = if i < j { (i, j) } else { (j, i) };
                *weights.entry(key).or_insert(0) += 1;
            }
        }
    }
    let edges: Vec<(usize, usize, u32)> = weights.into_iter().map(|((a, b), w)| (a, b, w)).collect();
    TeamGraph::new(nodes, edges, year)
}

fn adjacency(view: GraphView<'_>) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); view.n];
    for e in view.edges {
        adj[e.a].push(e.b);
        adj[e.b].push(e.a);
    }
    adj
}

/// Partition nodes into connected components. Components are listed by
/// their smallest node index; members are sorted ascending.
pub fn connected_components(view: GraphView<'_>) -> Vec<Vec<usize>> {
    let adj = adjacency(view);
    let mut seen = vec![false; view.n];
    let mut components = Vec::new();
    for start in 0..view.n {
        if seen[start] {
            continue;
        }
        let mut queue = vec![start];
        seen[start] = true;
        let mut members = Vec::new();
        while let Some(u) = queue.pop() {
            members.push(u);
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push(v);
                }
            }
        }
        members.sort_unstable();
        components.push(members);
    }
    components
}

/// Hop-count eccentricity of every node in a connected component.
///
/// Shortest paths are unweighted; edge weights play no role in centrality.
pub fn eccentricity(view: GraphView<'_>, component: &[usize]) -> Result<Vec<(usize, u32)>> {
    let adj = adjacency(view);
    let mut ecc = Vec::with_capacity(component.len());
    let in_component: BTreeSet<usize> = component.iter().copied().collect();
    let mut dist: Vec<Option<u32>> = vec![None; view.n];
    for &source in component {
        dist.iter_mut().for_each(|d| *d = None);
        dist[source] = Some(0);
        let mut frontier = std::collections::VecDeque::from([source]);
        let mut reached = 1usize;
        let mut max_d = 0u32;
        while let Some(u) = frontier.pop_front() {
            let du = dist[u].unwrap();
            max_d = max_d.max(du);
            for &v in &adj[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    reached += 1;
                    frontier.push_back(v);
                }
            }
        }
        if reached < in_component.len() || component.iter().any(|&c| dist[c].is_none()) {
            return Err(Error::Numeric(format!(
                "eccentricity: component containing node {source} is not connected"
            )));
        }
        ecc.push((source, max_d));
    }
    Ok(ecc)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JordanCenter {
    /// Nodes whose eccentricity equals the radius of the largest component.
    pub nodes: BTreeSet<usize>,
    pub radius: u32,
    /// Size of the component the center was computed on.
    pub component_size: usize,
}

/// Jordan center of the largest connected component.
///
/// Ties on component size break toward the component whose minimum node
/// index is smallest (node order is person-id order). Returns `None` when
/// every node is an isolate.
pub fn jordan_center(view: GraphView<'_>) -> Option<JordanCenter> {
    if view.edges.is_empty() {
        return None;
    }
    let components = connected_components(view);
    let largest = components
        .iter()
        .max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0])))?;
    let ecc = eccentricity(view, largest).expect("component from partition is connected");
    let radius = ecc.iter().map(|&(_, e)| e).min()?;
    let nodes = ecc
        .iter()
        .filter(|&&(_, e)| e == radius)
        .map(|&(n, _)| n)
        .collect();
    Some(JordanCenter {
        nodes,
        radius,
        component_size: largest.len(),
    })
}

/// Newman's categorical assortativity over the female/male mixing matrix.
///
/// Each eligible edge (both endpoints of known gender) contributes its
/// weight to both orientations of the 2x2 joint matrix, which is then
/// normalized. `None` when no eligible edge exists; `1.0` by convention
/// when all eligible edges fall within a single class.
pub fn assortativity(view: GraphView<'_>, weighted: bool) -> Option<f64> {
    // m[i][j]: 0 = female, 1 = male.
    let mut m = [[0.0f64; 2]; 2];
    let mut total = 0.0;
    for e in view.edges {
        let (ga, gb) = (view.genders[e.a], view.genders[e.b]);
        let (ia, ib) = match (class_of(ga), class_of(gb)) {
            (Some(a), Some(b)) => (a, b),
            _ => continue,
        };
        let w = if weighted { e.weight as f64 } else { 1.0 };
        m[ia][ib] += w;
        m[ib][ia] += w;
        total += 2.0 * w;
    }
    if total == 0.0 {
        return None;
    }
    for row in &mut m {
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    let trace = m[0][0] + m[1][1];
    let a0 = m[0][0] + m[0][1];
    let a1 = m[1][0] + m[1][1];
    let sum_sq = a0 * a0 + a1 * a1;
    if (1.0 - sum_sq).abs() < 1e-15 {
        // Single represented class: fully segregated by convention.
        return Some(1.0);
    }
    Some((trace - sum_sq) / (1.0 - sum_sq))
}

fn class_of(g: Gender) -> Option<usize> {
    match g {
        Gender::Female => Some(0),
        Gender::Male => Some(1),
        Gender::Unknown => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse::{RawCredit, RawProject};
    use crate::corpus::CorpusConfig;

    fn g(nodes: &[Gender], edges: &[(usize, usize, u32)]) -> TeamGraph {
        let nodes = nodes
            .iter()
            .enumerate()
            .map(|(i, &g)| (format!("n{i}"), g))
            .collect();
        TeamGraph::new(nodes, edges.to_vec(), 2000)
    }

    fn raw_project(id: &str, year: i32) -> RawProject {
        RawProject {
            row: 0,
            project_id: id.into(),
            title: String::new(),
            release_year: year,
            firm_id: "f".into(),
            publisher_id: "p".into(),
            countries_released: 1,
            platforms: vec!["pc".into()],
            style_elements: vec!["s1".into()],
            exclude_flag: false,
        }
    }

    fn raw_credit(project: &str, person: &str) -> RawCredit {
        RawCredit {
            row: 0,
            project_id: project.into(),
            person_id: person.into(),
            full_name: String::new(),
            role: String::new(),
            gender_label: Some(Gender::Male),
            award_flag: false,
        }
    }

    fn toy_corpus(projects: &[(&str, i32, &[&str])]) -> Corpus {
        let raw_projects = projects
            .iter()
            .map(|&(id, year, _)| raw_project(id, year))
            .collect();
        let raw_credits = projects
            .iter()
            .flat_map(|&(id, _, members)| members.iter().map(move |m| raw_credit(id, m)))
            .collect();
        let (corpus, _) =
            crate::corpus::build_corpus(raw_projects, raw_credits, None, &CorpusConfig::default())
                .unwrap();
        corpus
    }

    #[test]
    fn pair_sharing_two_prior_projects_has_weight_two() {
        let corpus = toy_corpus(&[
            ("a", 1995, &["x", "y"]),
            ("b", 1996, &["x", "y"]),
            ("c", 1998, &["x", "y", "z"]),
        ]);
        let focal = corpus.project_idx("c").unwrap();
        let g = project_team_graph(&corpus, focal);
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edges()[0].weight, 2);
    }

    #[test]
    fn focal_project_itself_never_counts() {
        let corpus = toy_corpus(&[("only", 1998, &["x", "y"])]);
        let g = project_team_graph(&corpus, corpus.project_idx("only").unwrap());
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn same_year_shared_project_is_excluded() {
        // Brute-force expectation on a 3-project toy corpus: only the
        // strictly earlier shared project contributes.
        let corpus = toy_corpus(&[
            ("early", 1995, &["x", "y"]),
            ("same_year", 1998, &["x", "y"]),
            ("focal", 1998, &["x", "y"]),
        ]);
        let focal = corpus.project_idx("focal").unwrap();
        let g = project_team_graph(&corpus, focal);
        let mut expect = 0;
        for p in corpus.history() {
            if p.project_id != "focal" && p.release_year < 1998 {
                expect += 1; // x and y are both on every project here
            }
        }
        assert_eq!(g.edges()[0].weight, expect);
        assert_eq!(g.edges()[0].weight, 1);
    }

    #[test]
    fn graph_independent_of_roster_order() {
        let corpus_a = toy_corpus(&[("a", 1995, &["x", "y", "z"]), ("b", 1998, &["x", "y", "z"])]);
        let corpus_b = toy_corpus(&[("a", 1995, &["z", "x", "y"]), ("b", 1998, &["y", "z", "x"])]);
        let ga = project_team_graph(&corpus_a, corpus_a.project_idx("b").unwrap());
        let gb = project_team_graph(&corpus_b, corpus_b.project_idx("b").unwrap());
        assert_eq!(ga, gb);
    }

    #[test]
    fn components_edgeless_and_triangle() {
        let edgeless = g(&[Gender::Male; 4], &[]);
        let genders = edgeless.genders();
        assert_eq!(connected_components(edgeless.view(&genders)).len(), 4);

        let triangle = g(&[Gender::Male; 3], &[(0, 1, 1), (1, 2, 1), (0, 2, 1)]);
        let genders = triangle.genders();
        let comps = connected_components(triangle.view(&genders));
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].len(), 3);

        let with_isolate = g(&[Gender::Male; 4], &[(0, 1, 1), (1, 2, 1), (0, 2, 1)]);
        let genders = with_isolate.genders();
        let mut sizes: Vec<usize> = connected_components(with_isolate.view(&genders))
            .iter()
            .map(|c| c.len())
            .collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![1, 3]);
    }

    #[test]
    fn eccentricity_on_path_and_cycle() {
        let path = g(&[Gender::Male; 3], &[(0, 1, 1), (1, 2, 1)]);
        let genders = path.genders();
        let ecc = eccentricity(path.view(&genders), &[0, 1, 2]).unwrap();
        assert_eq!(ecc, vec![(0, 2), (1, 1), (2, 2)]);

        let single = g(&[Gender::Male], &[]);
        let genders = single.genders();
        assert_eq!(eccentricity(single.view(&genders), &[0]).unwrap(), vec![(0, 0)]);

        // 4-cycle: brute-force all-pairs shortest paths give ecc 2 everywhere.
        let cycle = g(&[Gender::Male; 4], &[(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 0, 1)]);
        let genders = cycle.genders();
        for &(_, e) in &eccentricity(cycle.view(&genders), &[0, 1, 2, 3]).unwrap() {
            assert_eq!(e, 2);
        }
    }

    #[test]
    fn eccentricity_rejects_disconnected_component() {
        let two = g(&[Gender::Male; 3], &[(0, 1, 1)]);
        let genders = two.genders();
        assert!(eccentricity(two.view(&genders), &[0, 1, 2]).is_err());
    }

    #[test]
    fn jordan_center_cases() {
        let path = g(&[Gender::Male; 3], &[(0, 1, 1), (1, 2, 1)]);
        let genders = path.genders();
        let c = jordan_center(path.view(&genders)).unwrap();
        assert_eq!(c.radius, 1);
        assert_eq!(c.nodes.iter().copied().collect::<Vec<_>>(), vec![1]);

        let complete = g(
            &[Gender::Male; 4],
            &[(0, 1, 1), (0, 2, 1), (0, 3, 1), (1, 2, 1), (1, 3, 1), (2, 3, 1)],
        );
        let genders = complete.genders();
        assert_eq!(jordan_center(complete.view(&genders)).unwrap().nodes.len(), 4);

        let isolates = g(&[Gender::Male; 3], &[]);
        let genders = isolates.genders();
        assert!(jordan_center(isolates.view(&genders)).is_none());
    }

    #[test]
    fn jordan_center_uses_largest_component() {
        // Components of sizes 5 (path) and 3 (triangle); center must come
        // from the 5-path, matching a brute force run restricted to it.
        let graph = g(
            &[Gender::Male; 8],
            &[(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 4, 1), (5, 6, 1), (6, 7, 1), (5, 7, 1)],
        );
        let genders = graph.genders();
        let c = jordan_center(graph.view(&genders)).unwrap();
        assert_eq!(c.component_size, 5);
        assert_eq!(c.nodes.iter().copied().collect::<Vec<_>>(), vec![2]);
        let ecc = eccentricity(graph.view(&genders), &[0, 1, 2, 3, 4]).unwrap();
        let radius = ecc.iter().map(|&(_, e)| e).min().unwrap();
        assert_eq!(c.radius, radius);
        for &n in &c.nodes {
            assert_eq!(ecc.iter().find(|&&(m, _)| m == n).unwrap().1, radius);
        }
    }

    #[test]
    fn assortativity_segregated_cliques_is_one() {
        let graph = g(
            &[Gender::Female, Gender::Female, Gender::Male, Gender::Male],
            &[(0, 1, 3), (2, 3, 2)],
        );
        let genders = graph.genders();
        assert_eq!(assortativity(graph.view(&genders), true), Some(1.0));
    }

    #[test]
    fn assortativity_complete_bipartite_is_minus_one() {
        let graph = g(
            &[Gender::Female, Gender::Female, Gender::Male, Gender::Male],
            &[(0, 2, 1), (0, 3, 1), (1, 2, 1), (1, 3, 1)],
        );
        let genders = graph.genders();
        let r = assortativity(graph.view(&genders), true).unwrap();
        assert!((r + 1.0).abs() < 1e-12);
    }

    #[test]
    fn assortativity_ignores_isolates_and_unknowns() {
        let base = g(
            &[Gender::Female, Gender::Male, Gender::Female, Gender::Male],
            &[(0, 1, 2), (2, 3, 1), (0, 2, 1)],
        );
        let genders = base.genders();
        let r_base = assortativity(base.view(&genders), true).unwrap();

        let with_extras = g(
            &[
                Gender::Female,
                Gender::Male,
                Gender::Female,
                Gender::Male,
                Gender::Unknown,
                Gender::Female,
            ],
            &[(0, 1, 2), (2, 3, 1), (0, 2, 1), (4, 0, 7)],
        );
        let genders = with_extras.genders();
        let r_extras = assortativity(with_extras.view(&genders), true).unwrap();
        assert!((r_base - r_extras).abs() < 1e-15);
    }

    #[test]
    fn assortativity_weight_scale_invariant() {
        let edges = [(0usize, 1usize, 2u32), (1, 2, 3), (2, 3, 1), (0, 3, 4)];
        let genders = [Gender::Female, Gender::Male, Gender::Female, Gender::Male];
        let g1 = g(&genders, &edges);
        let scaled: Vec<(usize, usize, u32)> =
            edges.iter().map(|&(a, b, w)| (a, b, w * 5)).collect();
        let g2 = g(&genders, &scaled);
        let gv1 = g1.genders();
        let gv2 = g2.genders();
        let r1 = assortativity(g1.view(&gv1), true).unwrap();
        let r2 = assortativity(g2.view(&gv2), true).unwrap();
        assert!((r1 - r2).abs() < 1e-15);
    }

    #[test]
    fn no_eligible_edges_is_undefined() {
        let graph = g(
            &[Gender::Unknown, Gender::Unknown, Gender::Female],
            &[(0, 1, 5)],
        );
        let genders = graph.genders();
        assert_eq!(assortativity(graph.view(&genders), true), None);
    }
}
