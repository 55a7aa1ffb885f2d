//! Composition-model construction.
//!
//! Starting from the node of an initial service, a service `B` is attached
//! after a node `A` when `B` can consume something `A` has produced so far
//! (`T_A^o ∩ B.inputs ≠ ∅`) and `B` contributes at least one new output
//! (`B.outputs ⊄ T_A^o`). The new node carries the cumulative sets
//! `T_A^i ∪ B.inputs` and `T_A^o ∪ B.outputs`. This is applied until no new
//! node or edge appears.
//!
//! Because cumulative outputs grow strictly along every edge, the resulting
//! graph is acyclic and construction always terminates.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::types::{Catalog, Service, ServiceName, TypeSet};

/// A graph vertex. Identity is the full triple, so the same service may
/// appear in several nodes with different cumulative sets.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Node {
    pub service: ServiceName,
    /// Cumulative inputs (`T^i`).
    pub cum_inputs: TypeSet,
    /// Cumulative outputs (`T^o`).
    pub cum_outputs: TypeSet,
}

impl Node {
    pub fn new(service: ServiceName, cum_inputs: TypeSet, cum_outputs: TypeSet) -> Self {
        Self {
            service,
            cum_inputs,
            cum_outputs,
        }
    }
}

impl fmt::Debug for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "< {}, {}, {} >",
            self.service, self.cum_inputs, self.cum_outputs
        )
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// An edge between two nodes, by index into [`CompositionModel::nodes`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompositionModel {
    catalog: Arc<Catalog>,
    initial: usize,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    preds: Vec<Vec<usize>>,
    succs: Vec<Vec<usize>>,
    by_service: BTreeMap<ServiceName, Vec<usize>>,
}

impl CompositionModel {
    /// Assembles a model from raw parts without checking any invariant.
    ///
    /// Nodes are put into canonical order and edges are re-indexed to match;
    /// duplicate nodes collapse and edges referring to out-of-range indices
    /// are dropped. Use [`check_model`] to validate the result.
    pub fn from_parts(
        catalog: Arc<Catalog>,
        initial: Node,
        nodes: impl IntoIterator<Item = Node>,
        edges: impl IntoIterator<Item = (Node, Node)>,
    ) -> Self {
        let mut set: BTreeSet<Node> = nodes.into_iter().collect();
        set.insert(initial.clone());
        let nodes: Vec<Node> = set.into_iter().collect();
        let index = |n: &Node| nodes.binary_search(n).ok();
        let edges: Vec<Edge> = edges
            .into_iter()
            .filter_map(|(s, t)| {
                Some(Edge {
                    source: index(&s)?,
                    target: index(&t)?,
                })
            })
            .collect();
        let initial = index(&initial).expect("initial was inserted");
        Self::from_indexed(catalog, initial, nodes, edges)
    }

    fn from_indexed(
        catalog: Arc<Catalog>,
        initial: usize,
        nodes: Vec<Node>,
        mut edges: Vec<Edge>,
    ) -> Self {
        edges.sort();
        let mut preds = vec![Vec::new(); nodes.len()];
        let mut succs = vec![Vec::new(); nodes.len()];
        let mut by_service: BTreeMap<ServiceName, Vec<usize>> = BTreeMap::new();
        for e in &edges {
            preds[e.target].push(e.source);
            succs[e.source].push(e.target);
        }
        for (i, n) in nodes.iter().enumerate() {
            by_service.entry(n.service.clone()).or_default().push(i);
        }
        Self {
            catalog,
            initial,
            nodes,
            edges,
            preds,
            succs,
            by_service,
        }
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn catalog_name(&self) -> &ServiceName {
        self.catalog.name()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn initial_node(&self) -> &Node {
        &self.nodes[self.initial]
    }

    /// Nodes in canonical order: by service name, then cumulative inputs,
    /// then cumulative outputs.
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Edges sorted by (source, target) index.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, idx: usize) -> &Node {
        &self.nodes[idx]
    }

    pub fn index_of(&self, node: &Node) -> Option<usize> {
        self.nodes.binary_search(node).ok()
    }

    pub fn predecessors(&self, idx: usize) -> &[usize] {
        &self.preds[idx]
    }

    pub fn successors(&self, idx: usize) -> &[usize] {
        &self.succs[idx]
    }

    pub fn has_edge(&self, source: usize, target: usize) -> bool {
        self.edges.binary_search(&Edge { source, target }).is_ok()
    }

    /// Indices of the nodes belonging to `service`, in canonical order.
    pub fn nodes_of(&self, service: &str) -> &[usize] {
        self.by_service.get(service).map_or(&[], Vec::as_slice)
    }

    /// Whether this model was built from a catalog equal to `catalog`.
    pub fn built_from(&self, catalog: &Catalog) -> bool {
        std::ptr::eq(&*self.catalog, catalog) || *self.catalog == *catalog
    }

    pub fn edge_nodes(&self) -> impl Iterator<Item = (&Node, &Node)> + '_ {
        self.edges
            .iter()
            .map(|e| (&self.nodes[e.source], &self.nodes[e.target]))
    }
}

pub fn initial_node(service: &Service) -> Node {
    Node::new(
        service.name().clone(),
        service.inputs().clone(),
        service.outputs().clone(),
    )
}

/// The node reached by invoking `service` after `node`, if the attach
/// conditions hold.
pub fn attach_candidate(node: &Node, service: &Service) -> Option<Node> {
    let callable = !node.cum_outputs.is_disjoint_from(service.inputs());
    let adds_new = !service.outputs().is_subset_of(&node.cum_outputs);
    (callable && adds_new).then(|| {
        Node::new(
            service.name().clone(),
            node.cum_inputs.union(service.inputs()),
            node.cum_outputs.union(service.outputs()),
        )
    })
}

pub fn build_model(catalog: &Catalog, init_name: &str) -> Result<CompositionModel> {
    build_model_shared(Arc::new(catalog.clone()), init_name)
}

/// Same as [`build_model`] but shares an already reference-counted catalog.
pub fn build_model_shared(catalog: Arc<Catalog>, init_name: &str) -> Result<CompositionModel> {
    let init_service = catalog
        .get(init_name)
        .ok_or_else(|| Error::UnknownInitialService(init_name.to_owned()))?;
    let init = initial_node(init_service);

    let mut nodes: BTreeSet<Node> = BTreeSet::new();
    let mut edges: BTreeSet<(Node, Node)> = BTreeSet::new();
    // Attachment depends only on the (node, service) pair, so every node needs
    // to be swept against the catalog exactly once.
    let mut pending: VecDeque<Node> = VecDeque::new();
    nodes.insert(init.clone());
    pending.push_back(init.clone());

    while let Some(a) = pending.pop_front() {
        for b in catalog.services().iter().filter(|s| s.name() != init_name) {
            let Some(n) = attach_candidate(&a, b) else {
                continue;
            };
            if nodes.insert(n.clone()) {
                pending.push_back(n.clone());
            }
            edges.insert((a.clone(), n));
        }
    }

    Ok(CompositionModel::from_parts(catalog, init, nodes, edges))
}

/// One full pass of the attach step over every (node, service) pair of
/// `model`. Returns the nodes and edges that would be new. A model built by
/// [`build_model`] is a fixpoint, so both are empty.
pub fn sweep_once(model: &CompositionModel) -> (Vec<Node>, Vec<(Node, Node)>) {
    let init_name = model.initial_node().service.clone();
    let known_edges: BTreeSet<(&Node, &Node)> = model.edge_nodes().collect();
    let mut new_nodes = BTreeSet::new();
    let mut new_edges = BTreeSet::new();
    for a in model.nodes() {
        for b in model
            .catalog()
            .services()
            .iter()
            .filter(|s| *s.name() != init_name)
        {
            if let Some(n) = attach_candidate(a, b) {
                if model.index_of(&n).is_none() {
                    new_nodes.insert(n.clone());
                }
                if !known_edges.contains(&(a, &n)) {
                    new_edges.insert((a.clone(), n));
                }
            }
        }
    }
    (
        new_nodes.into_iter().collect(),
        new_edges.into_iter().collect(),
    )
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering. Node `nK` is the K-th node in canonical order; the
/// initial node has a doubled border.
pub fn to_dot(model: &CompositionModel) -> String {
    let mut out = format!(
        "digraph \"{}\" {{\n",
        dot_escape(model.catalog_name().as_str())
    );
    out.push_str("  node [shape=box];\n");
    for (i, n) in model.nodes().iter().enumerate() {
        let label = format!(
            "{}\\nTi: {}\\nTo: {}",
            dot_escape(n.service.as_str()),
            dot_escape(&n.cum_inputs.canonical()),
            dot_escape(&n.cum_outputs.canonical())
        );
        if i == model.initial() {
            out.push_str(&format!("  n{i} [label=\"{label}\", peripheries=2];\n"));
        } else {
            out.push_str(&format!("  n{i} [label=\"{label}\"];\n"));
        }
    }
    for e in model.edges() {
        out.push_str(&format!("  n{} -> n{};\n", e.source, e.target));
    }
    out.push_str("}\n");
    out
}

#[derive(Serialize)]
struct JsonNode<'a> {
    service: &'a str,
    ti: String,
    to: String,
}

#[derive(Serialize)]
struct JsonModel<'a> {
    initial: usize,
    nodes: Vec<JsonNode<'a>>,
    edges: Vec<[usize; 2]>,
}

/// JSON export: `{"initial": i, "nodes": [{"service","ti","to"}], "edges": [[s, t]]}`
/// with node indices matching [`to_dot`].
pub fn to_json(model: &CompositionModel) -> String {
    let doc = JsonModel {
        initial: model.initial(),
        nodes: model
            .nodes()
            .iter()
            .map(|n| JsonNode {
                service: n.service.as_str(),
                ti: n.cum_inputs.canonical(),
                to: n.cum_outputs.canonical(),
            })
            .collect(),
        edges: model.edges().iter().map(|e| [e.source, e.target]).collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("model JSON always serializes");
    out.push('\n');
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    UnknownService { node: Node },
    OwnSetsNotCovered { node: Node },
    InitialNameReused { node: Node },
    NoIncomingEdge { node: Node },
    Unreachable { node: Node },
    SelfLoop { node: Node },
    DuplicateEdge { source: Node, target: Node },
    NotCallable { source: Node, target: Node },
    NoNewOutputs { source: Node, target: Node },
    NotCumulative { source: Node, target: Node },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::UnknownService { node } => {
                write!(f, "node {node} names a service missing from the catalog")
            }
            Self::OwnSetsNotCovered { node } => {
                write!(
                    f,
                    "node {node} does not contain its service's own inputs/outputs"
                )
            }
            Self::InitialNameReused { node } => write!(
                f,
                "non-initial node {node} carries the initial service name"
            ),
            Self::NoIncomingEdge { node } => {
                write!(f, "non-initial node {node} has no incoming edge")
            }
            Self::Unreachable { node } => {
                write!(f, "node {node} is unreachable from the initial node")
            }
            Self::SelfLoop { node } => write!(f, "self loop on {node}"),
            Self::DuplicateEdge { source, target } => {
                write!(f, "duplicate edge {source} -> {target}")
            }
            Self::NotCallable { source, target } => {
                write!(f, "edge {source} -> {target}: target service consumes nothing the source produced")
            }
            Self::NoNewOutputs { source, target } => {
                write!(
                    f,
                    "edge {source} -> {target}: target service adds no new output"
                )
            }
            Self::NotCumulative { source, target } => {
                write!(f, "edge {source} -> {target}: target sets are not the unions of source and service sets")
            }
        }
    }
}

/// Checks every structural invariant of a composition model against the
/// catalog it carries. An empty result means the model is well formed.
pub fn check_model(model: &CompositionModel) -> Vec<Violation> {
    let catalog = model.catalog();
    let init_name = &model.initial_node().service;
    let mut out = Vec::new();

    for (i, n) in model.nodes().iter().enumerate() {
        match catalog.get(n.service.as_str()) {
            None => out.push(Violation::UnknownService { node: n.clone() }),
            Some(s) => {
                if !s.inputs().is_subset_of(&n.cum_inputs)
                    || !s.outputs().is_subset_of(&n.cum_outputs)
                {
                    out.push(Violation::OwnSetsNotCovered { node: n.clone() });
                }
            }
        }
        if i != model.initial() && n.service == *init_name {
            out.push(Violation::InitialNameReused { node: n.clone() });
        }
    }

    let mut seen = BTreeSet::new();
    for e in model.edges() {
        let (a, b) = (model.node(e.source), model.node(e.target));
        if !seen.insert(*e) {
            out.push(Violation::DuplicateEdge {
                source: a.clone(),
                target: b.clone(),
            });
            continue;
        }
        if e.source == e.target {
            out.push(Violation::SelfLoop { node: a.clone() });
            continue;
        }
        let Some(svc) = catalog.get(b.service.as_str()) else {
            continue;
        };
        if a.cum_outputs.is_disjoint_from(svc.inputs()) {
            out.push(Violation::NotCallable {
                source: a.clone(),
                target: b.clone(),
            });
        }
        if svc.outputs().is_subset_of(&a.cum_outputs) {
            out.push(Violation::NoNewOutputs {
                source: a.clone(),
                target: b.clone(),
            });
        }
        if b.cum_inputs != a.cum_inputs.union(svc.inputs())
            || b.cum_outputs != a.cum_outputs.union(svc.outputs())
        {
            out.push(Violation::NotCumulative {
                source: a.clone(),
                target: b.clone(),
            });
        }
    }

    let mut reached = vec![false; model.nodes().len()];
    let mut stack = vec![model.initial()];
    reached[model.initial()] = true;
    while let Some(i) = stack.pop() {
        for &j in model.successors(i) {
            if !reached[j] {
                reached[j] = true;
                stack.push(j);
            }
        }
    }
    for (i, n) in model.nodes().iter().enumerate() {
        if i == model.initial() || reached[i] {
            continue;
        }
        if model.predecessors(i).is_empty() {
            out.push(Violation::NoIncomingEdge { node: n.clone() });
        } else {
            out.push(Violation::Unreachable { node: n.clone() });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog_io::parse_catalog_text;

    const WEATHER: &str = "collection weather-ws
s1 : city -> longitude latitude
s2 : longitude latitude -> weather
s3 : zipcode -> longitude latitude
s4 : zipcode -> weather
s5 : longitude latitude road -> zipcode
s6 : city -> zipcode
";

    fn weather() -> Catalog {
        parse_catalog_text(WEATHER).unwrap()
    }

    fn node(s: &str, ti: &str, to: &str) -> Node {
        Node::new(s.parse().unwrap(), ti.parse().unwrap(), to.parse().unwrap())
    }

    #[test]
    fn initial_node_copies_own_sets() {
        let c = weather();
        assert_eq!(
            initial_node(c.get("s1").unwrap()),
            node("s1", "city", "latitude,longitude")
        );
        assert_eq!(
            initial_node(c.get("s4").unwrap()),
            node("s4", "zipcode", "weather")
        );
    }

    #[test]
    fn attach_examples() {
        let c = weather();
        let s1 = node("s1", "city", "latitude,longitude");
        assert_eq!(
            attach_candidate(&s1, c.get("s2").unwrap()),
            Some(node(
                "s2",
                "city,latitude,longitude",
                "latitude,longitude,weather"
            ))
        );
        assert_eq!(attach_candidate(&s1, c.get("s3").unwrap()), None);
        let s5 = node(
            "s5",
            "city,latitude,longitude,road",
            "latitude,longitude,zipcode",
        );
        assert_eq!(attach_candidate(&s5, c.get("s3").unwrap()), None);
        // a service never re-attaches to its own node
        assert_eq!(attach_candidate(&s5, c.get("s5").unwrap()), None);
    }

    #[test]
    fn single_service_catalog() {
        let c = parse_catalog_text("only : a -> b").unwrap();
        let m = build_model(&c, "only").unwrap();
        assert_eq!(m.nodes(), [node("only", "a", "b")]);
        assert!(m.edges().is_empty());
    }

    #[test]
    fn nothing_consumes_initial_outputs() {
        let c = parse_catalog_text("a : x -> y\nb : z -> w\nc : w -> y").unwrap();
        let m = build_model(&c, "a").unwrap();
        assert_eq!(m.nodes().len(), 1);
        assert!(m.edges().is_empty());
        assert!(check_model(&m).is_empty());
    }

    #[test]
    fn unknown_initial() {
        assert_eq!(
            build_model(&weather(), "s9"),
            Err(Error::UnknownInitialService("s9".into()))
        );
    }

    #[test]
    fn weather_model_is_fixpoint_and_valid() {
        let m = build_model(&weather(), "s1").unwrap();
        assert_eq!(m.nodes().len(), 6);
        assert_eq!(m.edges().len(), 5);
        assert!(check_model(&m).is_empty());
        let (n, e) = sweep_once(&m);
        assert!(n.is_empty() && e.is_empty());
    }

    #[test]
    fn late_nodes_get_attached() {
        // c only attaches to the node created by b, which appears after c is
        // first considered in catalog order
        let cat = parse_catalog_text("a : x -> y\nc : z -> w\nb : y -> z").unwrap();
        let m = build_model(&cat, "a").unwrap();
        let names: Vec<_> = m.nodes().iter().map(|n| n.service.as_str()).collect();
        assert_eq!(names, ["a", "b", "c"]);
        assert_eq!(m.edges().len(), 2);
    }

    #[test]
    fn check_detects_dangling_node() {
        let m = build_model(&weather(), "s1").unwrap();
        let mut nodes = m.nodes().to_vec();
        nodes.push(node("s4", "zipcode", "weather"));
        let edges: Vec<_> = m
            .edge_nodes()
            .map(|(a, b)| (a.clone(), b.clone()))
            .collect();
        let bad = CompositionModel::from_parts(
            m.catalog().clone().into(),
            m.initial_node().clone(),
            nodes,
            edges,
        );
        let v = check_model(&bad);
        assert_eq!(
            v,
            [Violation::NoIncomingEdge {
                node: node("s4", "zipcode", "weather")
            }]
        );
    }

    #[test]
    fn check_detects_non_cumulative_target() {
        let m = build_model(&weather(), "s1").unwrap();
        let wrong = node(
            "s2",
            "city,latitude,longitude",
            "latitude,longitude,weather,zipcode",
        );
        let mut nodes = m.nodes().to_vec();
        nodes.push(wrong.clone());
        let mut edges: Vec<_> = m
            .edge_nodes()
            .map(|(a, b)| (a.clone(), b.clone()))
            .collect();
        edges.push((m.initial_node().clone(), wrong));
        let bad = CompositionModel::from_parts(
            m.catalog().clone().into(),
            m.initial_node().clone(),
            nodes,
            edges,
        );
        let v = check_model(&bad);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(matches!(v[0], Violation::NotCumulative { .. }));
    }

    #[test]
    fn check_detects_bad_attachment() {
        let c = weather();
        let init = node("s1", "city", "latitude,longitude");
        let s4 = node("s4", "city,zipcode", "latitude,longitude,weather");
        let bad = CompositionModel::from_parts(c.into(), init.clone(), [s4.clone()], [(init, s4)]);
        let v = check_model(&bad);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(matches!(v[0], Violation::NotCallable { .. }));
    }

    #[test]
    fn dot_shape() {
        let m = build_model(&weather(), "s1").unwrap();
        let dot = to_dot(&m);
        assert!(dot.starts_with("digraph \"weather-ws\" {\n"));
        assert_eq!(dot.matches("[label=").count(), 6);
        assert_eq!(dot.matches(" -> ").count(), 5);
        assert_eq!(dot.matches("peripheries=2").count(), 1);
        assert!(
            dot.contains("n0 [label=\"s1\\nTi: city\\nTo: latitude,longitude\", peripheries=2];")
        );
        assert_eq!(dot, to_dot(&build_model(&weather(), "s1").unwrap()));

        let single = build_model(&parse_catalog_text("only : a -> b").unwrap(), "only").unwrap();
        let dot = to_dot(&single);
        assert_eq!(dot.matches("[label=").count(), 1);
        assert_eq!(dot.matches(" -> ").count(), 0);
    }

    #[test]
    fn json_export_shape() {
        let m = build_model(&weather(), "s1").unwrap();
        let v: serde_json::Value = serde_json::from_str(&to_json(&m)).unwrap();
        assert_eq!(v["initial"], 0);
        assert_eq!(v["nodes"].as_array().unwrap().len(), 6);
        assert_eq!(v["edges"].as_array().unwrap().len(), 5);
        assert_eq!(v["nodes"][0]["service"], "s1");
        assert_eq!(v["nodes"][0]["ti"], "city");
        assert_eq!(v["nodes"][0]["to"], "latitude,longitude");
    }
}
