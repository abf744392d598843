//! Flows with global Poincaré sections, their Poincaré maps, suspensions of
//! homeomorphisms, and numerical checks of the adjunction between the two
//! constructions.
//!
//! ```
//! use std::collections::BTreeMap;
//! use flowsection::{catalog_get, Point, System};
//!
//! let System::Sectioned(phi1) = catalog_get("annulus_phi1", &BTreeMap::new()).unwrap() else {
//!     unreachable!()
//! };
//! let x = Point::new(vec![1.5, 0.0]);
//! assert!((phi1.return_time(&x).unwrap() - 2.0).abs() < 1e-8);
//! ```

pub mod catalog;
pub mod category;
pub mod config;
pub mod error;
pub mod expr;
pub mod report;
pub mod sampling;
pub mod section;
pub mod space;
pub mod suspension;
pub mod systems;

pub use catalog::{catalog_entries, catalog_get, System};
pub use error::{Error, Result};
pub use expr::{parse, Expr};
pub use report::CheckReport;
pub use section::{Crossing, GlobalSectionSystem, Section};
pub use space::{CoordKind, Point, Space, Tolerances};
pub use suspension::{suspend_morphism, suspend_system, TorusPoint};
pub use systems::{check_flow_laws, FlowSystem, MapSystem};
