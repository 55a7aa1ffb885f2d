//! Graph-based automatic composition of typed web services.
//!
//! A catalog of atomic services (name, input types, output types) is turned
//! into a *composition model*: a directed acyclic graph whose nodes pair a
//! service with the cumulative input and output types gathered along the path
//! from an initial service. Composition plans for a request are then found by
//! a backward breadth-first search over that graph.
//!
//! ```
//! use compograph::{catalog_io, model, planner::{self, Request}, TypeSet};
//!
//! let catalog = catalog_io::parse_catalog_text(
//!     "s1 : city -> longitude latitude\n\
//!      s2 : longitude latitude -> weather\n",
//! ).unwrap();
//! let model = model::build_model(&catalog, "s1").unwrap();
//! let request = Request::new(
//!     "city".parse::<TypeSet>().unwrap(),
//!     "latitude,longitude,weather".parse().unwrap(),
//! );
//! let (plans, _stats) = planner::find_plans(&model, &catalog, &request, None).unwrap();
//! assert_eq!(plans[0].service_names(), ["s1", "s2"]);
//! ```

pub mod affinity;
pub mod catalog_io;
pub mod cli;
mod error;
pub mod model;
pub mod oracle;
pub mod planner;
mod types;

pub use error::{Error, Result};
pub use types::{Catalog, Rational, Service, ServiceName, TypeName, TypeSet};
