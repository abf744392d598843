//! User-defined systems from JSON documents.
//!
//! ```json
//! {
//!   "name": "my_rotation",
//!   "space": {"coords": [{"kind": "line", "lo": -2, "hi": 2}, {"kind": "line", "lo": -2, "hi": 2}]},
//!   "kind": "flow-closed",
//!   "exprs": ["x1*cos(w*t) - x2*sin(w*t)", "x1*sin(w*t) + x2*cos(w*t)"],
//!   "domain": "(x1^2 + x2^2 - 1) * (4 - x1^2 - x2^2)",
//!   "section": {"g": "x2", "domain": "x1", "orientation": 0},
//!   "params": {"w": 3.0}
//! }
//! ```

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::catalog::System;
use crate::error::{Error, Result};
use crate::expr::{parse, Expr};
use crate::section::GlobalSectionSystem;
use crate::space::Space;
use crate::systems::{FlowSystem, MapSystem, DEFAULT_ODE_STEP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    Map,
    FlowClosed,
    FlowOde,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectionConfig {
    pub g: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
    #[serde(default)]
    pub orientation: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub space: Space,
    pub kind: SystemKind,
    pub exprs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inverse_exprs: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub section: Option<SectionConfig>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    /// Flow domain predicate: points with a positive value belong to the phase space.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
}

fn default_name() -> String {
    "user".to_string()
}

fn parse_all(what: &str, src: &[String]) -> Result<Vec<Expr>> {
    src.iter()
        .map(|s| parse(s).map_err(|e| Error::Config(format!("{what}: `{s}`: {e}"))))
        .collect()
}

fn parse_one(what: &str, src: &str) -> Result<Expr> {
    parse(src).map_err(|e| Error::Config(format!("{what}: `{src}`: {e}")))
}

impl SystemConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn build(&self) -> Result<System> {
        let exprs = parse_all("exprs", &self.exprs)?;
        match self.kind {
            SystemKind::Map => {
                if self.section.is_some() || self.domain.is_some() || self.step.is_some() {
                    return Err(Error::Config("maps take no section, domain or step".into()));
                }
                let inverse = self
                    .inverse_exprs
                    .as_ref()
                    .ok_or_else(|| Error::Config("maps need inverse_exprs".into()))?;
                let inverse = parse_all("inverse_exprs", inverse)?;
                Ok(System::Map(MapSystem::from_exprs(
                    self.name.clone(),
                    self.space.clone(),
                    exprs,
                    inverse,
                    self.params.clone(),
                )?))
            }
            SystemKind::FlowClosed | SystemKind::FlowOde => {
                if self.inverse_exprs.is_some() {
                    return Err(Error::Config("flows take no inverse_exprs".into()));
                }
                let mut fl = if self.kind == SystemKind::FlowClosed {
                    if self.step.is_some() {
                        return Err(Error::Config("closed-form flows take no step".into()));
                    }
                    FlowSystem::closed_form(
                        self.name.clone(),
                        self.space.clone(),
                        exprs,
                        self.params.clone(),
                    )?
                } else {
                    FlowSystem::ode(
                        self.name.clone(),
                        self.space.clone(),
                        exprs,
                        self.step.unwrap_or(DEFAULT_ODE_STEP),
                        self.params.clone(),
                    )?
                };
                if let Some(d) = &self.domain {
                    fl = fl.with_domain(parse_one("domain", d)?)?;
                }
                match &self.section {
                    None => Ok(System::Flow(fl)),
                    Some(s) => {
                        let g = parse_one("section.g", &s.g)?;
                        let domain = s
                            .domain
                            .as_deref()
                            .map(|d| parse_one("section.domain", d))
                            .transpose()?;
                        Ok(System::Sectioned(Arc::new(GlobalSectionSystem::level(
                            fl,
                            g,
                            domain,
                            s.orientation,
                        )?)))
                    }
                }
            }
        }
    }
}
