//! Exact affinity measures.
//!
//! `aff(A, B) = |A.outputs ∩ B.inputs| / |B.inputs|` measures how much of
//! what `B` consumes is supplied by `A`. The request variant measures how much
//! of a required type set a node has already produced. Both are exact
//! rationals in `[0, 1]`.

use crate::error::{Error, Result};
use crate::model::Node;
use crate::types::{Catalog, Rational, Service, TypeSet};

/// Two services compose when some output of `a` is an input of `b`.
pub fn can_compose(a: &Service, b: &Service) -> bool {
    !a.outputs().is_disjoint_from(b.inputs())
}

pub fn service_affinity(a: &Service, b: &Service) -> Result<Rational> {
    if a.name() == b.name() {
        return Err(Error::SameService(a.name().to_string()));
    }
    Ok(fraction(a.outputs().overlap(b.inputs()), b.inputs().card()))
}

pub fn request_node_affinity(required: &TypeSet, node: &Node) -> Result<Rational> {
    if required.is_empty() {
        return Err(Error::EmptyRequired);
    }
    Ok(fraction(
        required.overlap(&node.cum_outputs),
        required.card(),
    ))
}

/// `request_node_affinity(required, node) == 1`, decided by cardinality
/// equality. `false` for an empty `required`.
pub fn fully_covers(required: &TypeSet, node: &Node) -> bool {
    !required.is_empty() && required.overlap(&node.cum_outputs) == required.card()
}

fn fraction(numer: usize, denom: usize) -> Rational {
    Rational::new(numer as u64, denom as u64)
}

/// `aff(row, column)` for every ordered pair of distinct services, in catalog
/// order. Diagonal entries are `None`.
pub fn affinity_matrix(catalog: &Catalog) -> Vec<Vec<Option<Rational>>> {
    let services = catalog.services();
    services
        .iter()
        .map(|a| {
            services
                .iter()
                .map(|b| service_affinity(a, b).ok())
                .collect()
        })
        .collect()
}
