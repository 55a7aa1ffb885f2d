//! Composition-plan search.
//!
//! Plans are built backwards. A search starts from a state holding the full
//! catalog and the request's required types with an empty chain:
//!
//! * **seed**: any node `n` of a still-available service may start a chain
//!   if the provided types are contained in `n`'s cumulative inputs and `n`'s
//!   cumulative outputs cover everything still required. The service's own
//!   outputs are then crossed off the required set.
//! * **extend**: a node `n` with an edge `n → head` to the current head of
//!   the chain may be prepended under the same two conditions, evaluated
//!   against the remaining required set.
//!
//! A state whose remaining required set is empty is a solution and is not
//! extended further. The state space is explored breadth-first with
//! duplicate states discarded.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet, VecDeque};

use crate::affinity::fully_covers;
use crate::error::{Error, Result};
use crate::model::{CompositionModel, Node};
use crate::types::{Catalog, ServiceName, TypeSet};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Request {
    pub provided: TypeSet,
    pub required: TypeSet,
}

impl Request {
    pub fn new(provided: TypeSet, required: TypeSet) -> Self {
        Self { provided, required }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SearchState {
    remaining_services: BTreeSet<ServiceName>,
    remaining_required: TypeSet,
    /// Node indices, source first. The head of construction is `chain[0]`.
    chain: Vec<usize>,
}

impl SearchState {
    pub fn initial(catalog: &Catalog, request: &Request) -> Self {
        Self {
            remaining_services: catalog
                .services()
                .iter()
                .map(|s| s.name().clone())
                .collect(),
            remaining_required: request.required.clone(),
            chain: Vec::new(),
        }
    }

    pub fn remaining_services(&self) -> &BTreeSet<ServiceName> {
        &self.remaining_services
    }

    pub fn remaining_required(&self) -> &TypeSet {
        &self.remaining_required
    }

    pub fn chain(&self) -> &[usize] {
        &self.chain
    }

    /// Service names along the chain, source first.
    pub fn invocations<'m>(&self, model: &'m CompositionModel) -> Vec<&'m ServiceName> {
        self.chain.iter().map(|&i| &model.node(i).service).collect()
    }

    pub fn is_goal(&self) -> bool {
        self.remaining_required.is_empty()
    }

    fn to_plan(&self, model: &CompositionModel) -> Plan {
        let chain: Vec<Node> = self.chain.iter().map(|&i| model.node(i).clone()).collect();
        Plan {
            services: chain.iter().map(|n| n.service.clone()).collect(),
            chain,
        }
    }
}

/// A linear invocation sequence, source first, with its witnessing nodes.
///
/// Plans order by length, then service sequence, then chain.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Plan {
    pub services: Vec<ServiceName>,
    pub chain: Vec<Node>,
}

impl Plan {
    pub fn empty() -> Self {
        Self {
            services: Vec::new(),
            chain: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.services.len()
    }

    pub fn is_empty(&self) -> bool {
        self.services.is_empty()
    }

    pub fn service_names(&self) -> Vec<&str> {
        self.services.iter().map(ServiceName::as_str).collect()
    }
}

impl Ord for Plan {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.services.cmp(&other.services))
            .then_with(|| self.chain.cmp(&other.chain))
    }
}

impl PartialOrd for Plan {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Distinct states generated, including the initial one.
    pub states_explored: usize,
    pub solutions: usize,
}

fn admissible(request: &Request, remaining: &TypeSet, node: &Node) -> bool {
    request.provided.is_subset_of(&node.cum_inputs) && fully_covers(remaining, node)
}

fn advance(
    catalog: &Catalog,
    state: &SearchState,
    service: &ServiceName,
    node_idx: usize,
) -> SearchState {
    let own_outputs = catalog
        .get(service.as_str())
        .expect("remaining services come from the catalog")
        .outputs();
    let mut remaining_services = state.remaining_services.clone();
    remaining_services.remove(service);
    let mut chain = Vec::with_capacity(state.chain.len() + 1);
    chain.push(node_idx);
    chain.extend_from_slice(&state.chain);
    SearchState {
        remaining_services,
        remaining_required: state.remaining_required.remove(own_outputs),
        chain,
    }
}

/// Chains of length one, from the initial state.
pub fn seed_states(
    model: &CompositionModel,
    catalog: &Catalog,
    request: &Request,
) -> Vec<SearchState> {
    successors(
        model,
        catalog,
        request,
        &SearchState::initial(catalog, request),
    )
}

/// States reachable by prepending one node to a non-empty chain.
pub fn extend_state(
    model: &CompositionModel,
    catalog: &Catalog,
    request: &Request,
    state: &SearchState,
) -> Vec<SearchState> {
    if state.chain.is_empty() {
        return Vec::new();
    }
    successors(model, catalog, request, state)
}

/// All one-step successors of `state`, in (service name, node) order.
pub fn successors(
    model: &CompositionModel,
    catalog: &Catalog,
    request: &Request,
    state: &SearchState,
) -> Vec<SearchState> {
    if state.is_goal() {
        return Vec::new();
    }
    let candidates: Vec<usize> = match state.chain.first() {
        None => state
            .remaining_services
            .iter()
            .flat_map(|s| model.nodes_of(s.as_str()).iter().copied())
            .collect(),
        // predecessors are sorted by index, i.e. by (service name, node)
        Some(&head) => model
            .predecessors(head)
            .iter()
            .copied()
            .filter(|&p| state.remaining_services.contains(&model.node(p).service))
            .collect(),
    };
    candidates
        .into_iter()
        .filter(|&i| admissible(request, &state.remaining_required, model.node(i)))
        .map(|i| advance(catalog, state, &model.node(i).service, i))
        .collect()
}

/// Enumerates composition plans for `request`, breadth first.
///
/// Plans come back in canonical order. With `max_plans`, the search stops as
/// soon as that many solutions have been found; the stats still describe the
/// states generated up to that point.
pub fn find_plans(
    model: &CompositionModel,
    catalog: &Catalog,
    request: &Request,
    max_plans: Option<usize>,
) -> Result<(Vec<Plan>, SearchStats)> {
    if !model.built_from(catalog) {
        return Err(Error::ModelCatalogMismatch(catalog.name().to_string()));
    }
    let limit = max_plans.unwrap_or(usize::MAX);
    let initial = SearchState::initial(catalog, request);
    let mut seen: HashSet<SearchState> = HashSet::new();
    let mut plans = Vec::new();
    let mut queue = VecDeque::new();

    seen.insert(initial.clone());
    if initial.is_goal() {
        if limit > 0 {
            plans.push(Plan::empty());
        }
    } else {
        queue.push_back(initial);
    }

    'search: while let Some(state) = queue.pop_front() {
        if plans.len() >= limit {
            break;
        }
        for next in successors(model, catalog, request, &state) {
            if seen.contains(&next) {
                continue;
            }
            seen.insert(next.clone());
            if next.is_goal() {
                plans.push(next.to_plan(model));
                if plans.len() >= limit {
                    break 'search;
                }
            } else {
                queue.push_back(next);
            }
        }
    }

    plans.sort();
    let stats = SearchStats {
        states_explored: seen.len(),
        solutions: plans.len(),
    };
    Ok((plans, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog_io::parse_catalog_text;
    use crate::model::build_model;

    fn weather() -> Catalog {
        parse_catalog_text(
            "collection weather-ws
s1 : city -> longitude latitude
s2 : longitude latitude -> weather
s3 : zipcode -> longitude latitude
s4 : zipcode -> weather
s5 : longitude latitude road -> zipcode
s6 : city -> zipcode",
        )
        .unwrap()
    }

    fn req(provided: &str, required: &str) -> Request {
        Request::new(provided.parse().unwrap(), required.parse().unwrap())
    }

    fn node(s: &str, ti: &str, to: &str) -> Node {
        Node::new(s.parse().unwrap(), ti.parse().unwrap(), to.parse().unwrap())
    }

    fn s2a() -> Node {
        node(
            "s2",
            "city,latitude,longitude",
            "latitude,longitude,weather",
        )
    }
    fn s2b() -> Node {
        node(
            "s2",
            "city,latitude,longitude,road",
            "latitude,longitude,weather,zipcode",
        )
    }
    fn s5b() -> Node {
        node(
            "s5",
            "city,latitude,longitude,road",
            "latitude,longitude,weather,zipcode",
        )
    }
    fn s4() -> Node {
        node(
            "s4",
            "city,latitude,longitude,road,zipcode",
            "latitude,longitude,weather,zipcode",
        )
    }

    #[test]
    fn seeds_are_goal_covering_nodes() {
        let c = weather();
        let m = build_model(&c, "s1").unwrap();
        let r = req("city", "longitude,latitude,weather");
        let seeds = seed_states(&m, &c, &r);
        let heads: Vec<Node> = seeds.iter().map(|s| m.node(s.chain()[0]).clone()).collect();
        assert_eq!(heads, [s2a(), s2b(), s4(), s5b()]);

        let at_s2a = &seeds[0];
        assert_eq!(
            at_s2a.remaining_required().canonical(),
            "latitude,longitude"
        );
        assert!(!at_s2a.remaining_services().contains("s2"));
        assert_eq!(at_s2a.remaining_services().len(), 5);

        assert!(seed_states(&m, &c, &req("city", "road")).is_empty());
    }

    #[test]
    fn extensions_follow_edges_backwards() {
        let c = weather();
        let m = build_model(&c, "s1").unwrap();
        let r = req("city", "longitude,latitude,weather");
        let seeds = seed_states(&m, &c, &r);

        let next = extend_state(&m, &c, &r, &seeds[0]);
        assert_eq!(next.len(), 1);
        assert!(next[0].is_goal());
        assert_eq!(next[0].invocations(&m), ["s1", "s2"]);

        // s2(b) <- s5(a) <- s1
        let next = extend_state(&m, &c, &r, &seeds[1]);
        assert_eq!(next.len(), 1);
        assert_eq!(next[0].invocations(&m), ["s5", "s2"]);
        assert_eq!(
            next[0].remaining_required().canonical(),
            "latitude,longitude"
        );
        let last = extend_state(&m, &c, &r, &next[0]);
        assert_eq!(last[0].invocations(&m), ["s1", "s5", "s2"]);
        assert!(last[0].is_goal());

        // s5(b) <- s2(a) <- s1
        let next = extend_state(&m, &c, &r, &seeds[3]);
        assert_eq!(next[0].invocations(&m), ["s2", "s5"]);
        let last = extend_state(&m, &c, &r, &next[0]);
        assert_eq!(last[0].invocations(&m), ["s1", "s2", "s5"]);

        assert!(extend_state(&m, &c, &r, &SearchState::initial(&c, &r)).is_empty());
    }

    #[test]
    fn weather_plans_and_states() {
        let c = weather();
        let m = build_model(&c, "s1").unwrap();
        let (plans, stats) =
            find_plans(&m, &c, &req("city", "longitude,latitude,weather"), None).unwrap();
        let names: Vec<Vec<&str>> = plans.iter().map(Plan::service_names).collect();
        assert_eq!(
            names,
            [
                vec!["s1", "s2"],
                vec!["s1", "s2", "s5"],
                vec!["s1", "s5", "s2"],
                vec!["s1", "s5", "s4"],
            ]
        );
        assert_eq!(
            stats,
            SearchStats {
                states_explored: 12,
                solutions: 4
            }
        );
        assert_eq!(
            plans[0].chain,
            [node("s1", "city", "latitude,longitude"), s2a()]
        );
    }

    #[test]
    fn empty_goal_is_single_empty_plan() {
        let c = weather();
        let m = build_model(&c, "s1").unwrap();
        let (plans, stats) = find_plans(&m, &c, &req("city", ""), None).unwrap();
        assert_eq!(plans, [Plan::empty()]);
        assert_eq!(
            stats,
            SearchStats {
                states_explored: 1,
                solutions: 1
            }
        );
    }

    #[test]
    fn unreachable_goal_has_no_plans() {
        let c = weather();
        let m = build_model(&c, "s1").unwrap();
        let (plans, stats) = find_plans(&m, &c, &req("city", "road"), None).unwrap();
        assert!(plans.is_empty());
        assert_eq!(stats.states_explored, 1);
    }

    #[test]
    fn max_plans_truncates() {
        let c = weather();
        let m = build_model(&c, "s1").unwrap();
        let (plans, stats) =
            find_plans(&m, &c, &req("city", "longitude,latitude,weather"), Some(1)).unwrap();
        assert_eq!(plans.len(), 1);
        assert_eq!(stats.solutions, 1);
        assert!(stats.states_explored < 12);
        let (plans, _) =
            find_plans(&m, &c, &req("city", "longitude,latitude,weather"), Some(0)).unwrap();
        assert!(plans.is_empty());
    }

    #[test]
    fn mismatched_catalog_is_rejected() {
        let c = weather();
        let m = build_model(&c, "s1").unwrap();
        let other = parse_catalog_text("s1 : city -> longitude latitude").unwrap();
        assert!(matches!(
            find_plans(&m, &other, &req("city", "weather"), None),
            Err(Error::ModelCatalogMismatch(_))
        ));
    }
}
