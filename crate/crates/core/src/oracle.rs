//! Cross-checking tools for the planner.
//!
//! [`enumerate_plans_bruteforce`] re-derives plan sets by plain recursion
//! over the model's node and edge lists, without state deduplication and
//! without any of the planner's machinery. [`forward_executability`] runs a
//! plan left to right and reports inputs that are never available, which the
//! plan semantics themselves do not require. [`random_catalog`] and
//! [`random_request`] produce small deterministic instances for property
//! tests.

use std::collections::BTreeSet;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::CompositionModel;
use crate::planner::{Plan, Request};
use crate::types::{Catalog, Service, ServiceName, TypeName, TypeSet};

struct Enumeration<'a> {
    model: &'a CompositionModel,
    catalog: &'a Catalog,
    request: &'a Request,
    found: BTreeSet<Plan>,
}

impl Enumeration<'_> {
    /// `sink_first` holds node indices from the sink backwards.
    fn walk(
        &mut self,
        sink_first: &mut Vec<usize>,
        used: &mut Vec<ServiceName>,
        remaining: TypeSet,
    ) {
        if remaining.is_empty() {
            let chain: Vec<_> = sink_first
                .iter()
                .rev()
                .map(|&i| self.model.nodes()[i].clone())
                .collect();
            let services = chain.iter().map(|n| n.service.clone()).collect();
            self.found.insert(Plan { services, chain });
            return;
        }
        let head = *sink_first.last().expect("walk starts from a sink");
        let sources: Vec<usize> = self
            .model
            .edges()
            .iter()
            .filter(|e| e.target == head)
            .map(|e| e.source)
            .collect();
        for src in sources {
            let node = &self.model.nodes()[src];
            if used.contains(&node.service) {
                continue;
            }
            let Some(service) = self.catalog.get(node.service.as_str()) else {
                continue;
            };
            if !self.request.provided.is_subset_of(&node.cum_inputs)
                || !remaining.is_subset_of(&node.cum_outputs)
            {
                continue;
            }
            sink_first.push(src);
            used.push(node.service.clone());
            self.walk(sink_first, used, remaining.remove(service.outputs()));
            used.pop();
            sink_first.pop();
        }
    }
}

/// Every plan for `request`, found by exhaustive recursion; canonically
/// sorted and free of duplicates.
pub fn enumerate_plans_bruteforce(
    model: &CompositionModel,
    catalog: &Catalog,
    request: &Request,
) -> Vec<Plan> {
    if request.required.is_empty() {
        return vec![Plan::empty()];
    }
    let mut e = Enumeration {
        model,
        catalog,
        request,
        found: BTreeSet::new(),
    };
    for (i, node) in model.nodes().iter().enumerate() {
        let Some(service) = catalog.get(node.service.as_str()) else {
            continue;
        };
        if request.provided.is_subset_of(&node.cum_inputs)
            && request.required.is_subset_of(&node.cum_outputs)
        {
            let remaining = request.required.remove(service.outputs());
            e.walk(&mut vec![i], &mut vec![node.service.clone()], remaining);
        }
    }
    e.found.into_iter().collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepReport {
    pub position: usize,
    pub service: ServiceName,
    /// Own inputs of the service not available when it runs.
    pub missing: TypeSet,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExecutabilityReport {
    pub steps: Vec<StepReport>,
}

impl ExecutabilityReport {
    pub fn executable(&self) -> bool {
        self.steps.iter().all(|s| s.missing.is_empty())
    }

    pub fn missing_at(&self, position: usize) -> Option<&TypeSet> {
        self.steps.get(position).map(|s| &s.missing)
    }

    /// Steps with at least one missing input.
    pub fn blocked(&self) -> impl Iterator<Item = &StepReport> + '_ {
        self.steps.iter().filter(|s| !s.missing.is_empty())
    }
}

/// Simulates `plan` left to right from `provided`.
pub fn forward_executability<S: AsRef<str>>(
    plan: &[S],
    catalog: &Catalog,
    provided: &TypeSet,
) -> Result<ExecutabilityReport> {
    let mut available = provided.clone();
    let mut steps = Vec::with_capacity(plan.len());
    for (position, name) in plan.iter().enumerate() {
        let service = catalog
            .get(name.as_ref())
            .ok_or_else(|| Error::UnknownService(name.as_ref().to_owned()))?;
        steps.push(StepReport {
            position,
            service: service.name().clone(),
            missing: service.inputs().remove(&available),
        });
        available = available.union(service.outputs());
    }
    Ok(ExecutabilityReport { steps })
}

fn pick(rng: &mut ChaCha8Rng, universe: &[TypeName], max: usize) -> TypeSet {
    let k = rng.gen_range(1..=max.min(universe.len()));
    index::sample(rng, universe.len(), k)
        .into_iter()
        .map(|i| universe[i].clone())
        .collect()
}

fn universe(n_types: usize) -> Vec<TypeName> {
    (0..n_types)
        .map(|i| TypeName::new(&format!("t{i}")).expect("valid token"))
        .collect()
}

/// A catalog of `n_services` services over the types `t0..t{n_types-1}`,
/// each with 1 to 3 inputs and 1 to 3 outputs. Same seed, same catalog.
///
/// Panics if either count is zero.
pub fn random_catalog(seed: u64, n_services: usize, n_types: usize) -> Catalog {
    assert!(
        n_services >= 1 && n_types >= 1,
        "random_catalog needs at least one service and one type"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let types = universe(n_types);
    let services = (0..n_services).map(|i| {
        let name = ServiceName::new(&format!("s{i}")).expect("valid token");
        let inputs = pick(&mut rng, &types, 3);
        let outputs = pick(&mut rng, &types, 3);
        Service::new(name, inputs, outputs).expect("non-empty by construction")
    });
    let name = ServiceName::new(&format!("random-{seed}")).expect("valid token");
    Catalog::new(name, services).expect("distinct names by construction")
}

/// A request over the types used by `catalog`. Half of the time the provided
/// set is some service's own inputs, otherwise a random subset; the required
/// set has 1 to 3 members.
pub fn random_request(seed: u64, catalog: &Catalog) -> Request {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let types: Vec<TypeName> = catalog
        .services()
        .iter()
        .flat_map(|s| s.inputs().iter().chain(s.outputs().iter()))
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if types.is_empty() {
        return Request::new(TypeSet::new(), TypeSet::new());
    }
    let provided = if rng.gen_bool(0.5) && !catalog.is_empty() {
        let i = rng.gen_range(0..catalog.len());
        catalog.services()[i].inputs().clone()
    } else {
        pick(&mut rng, &types, 2)
    };
    let required = pick(&mut rng, &types, 3);
    Request::new(provided, required)
}

/// Plans present in only one of two canonically comparable plan sets.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PlanSetDiff {
    pub only_left: Vec<Plan>,
    pub only_right: Vec<Plan>,
}

impl PlanSetDiff {
    pub fn is_empty(&self) -> bool {
        self.only_left.is_empty() && self.only_right.is_empty()
    }
}

pub fn diff_plan_sets(left: &[Plan], right: &[Plan]) -> PlanSetDiff {
    let l: BTreeSet<&Plan> = left.iter().collect();
    let r: BTreeSet<&Plan> = right.iter().collect();
    PlanSetDiff {
        only_left: l.difference(&r).map(|p| (*p).clone()).collect(),
        only_right: r.difference(&l).map(|p| (*p).clone()).collect(),
    }
}
