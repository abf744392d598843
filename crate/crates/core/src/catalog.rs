//! Built-in example systems, addressable by name.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{parse, Expr};
use crate::section::GlobalSectionSystem;
use crate::space::{CoordKind, Space};
use crate::suspension::suspend_system;
use crate::systems::{FlowSystem, MapSystem, DEFAULT_ODE_STEP};

/// Prefix selecting the suspension of a catalog map, e.g. `suspension:circle_rotation`.
pub const SUSPENSION_PREFIX: &str = "suspension:";

const ANNULUS_DOMAIN: &str = "(x1^2 + x2^2 - 1) * (4 - x1^2 - x2^2)";

#[derive(Debug, Clone)]
pub enum System {
    Map(MapSystem),
    Flow(FlowSystem),
    Sectioned(Arc<GlobalSectionSystem>),
}

impl System {
    pub fn kind(&self) -> &'static str {
        match self {
            System::Map(_) => "map",
            System::Flow(_) => "flow",
            System::Sectioned(_) => "flow with section",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: f64,
    pub min: f64,
    pub max: f64,
    /// Zero is excluded even when it lies in `[min, max]`.
    pub nonzero: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub kind: &'static str,
    pub description: &'static str,
    pub params: Vec<ParamSpec>,
}

fn param(name: &'static str, default: f64, min: f64, max: f64) -> ParamSpec {
    ParamSpec {
        name,
        default,
        min,
        max,
        nonzero: false,
    }
}

/// Every named entry. Each catalog map `m` is also available as
/// `suspension:m`, with the same parameters.
pub fn catalog_entries() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            name: "annulus_phi1",
            kind: "flow with section",
            description: "z e^{iπt} on 1 < |z| < 2, section on the positive real axis",
            params: vec![],
        },
        CatalogEntry {
            name: "annulus_phi2",
            kind: "flow with section",
            description: "z e^{2πit} on 1 < |z| < 2, section on the positive real axis",
            params: vec![],
        },
        CatalogEntry {
            name: "annulus_radial_speed",
            kind: "flow with section",
            description: "z e^{i|z|t}: angular speed r, return time 2π/r",
            params: vec![],
        },
        CatalogEntry {
            name: "annulus_rotation_ode",
            kind: "flow with section",
            description: "rigid rotation x' = -ωy, y' = ωx integrated with RK4",
            params: vec![
                ParamSpec {
                    nonzero: true,
                    ..param("omega", 2.0 * std::f64::consts::PI, 0.0, 100.0)
                },
                ParamSpec {
                    nonzero: true,
                    ..param("step", DEFAULT_ODE_STEP, 0.0, 0.1)
                },
            ],
        },
        CatalogEntry {
            name: "circle_rotation",
            kind: "map",
            description: "x ↦ x + α on the circle ℝ/ℤ",
            params: vec![param("alpha", 0.1, -1.0, 1.0)],
        },
        CatalogEntry {
            name: "interval_identity",
            kind: "map",
            description: "identity on the interval (1, 2)",
            params: vec![],
        },
        CatalogEntry {
            name: "plane_translation",
            kind: "flow with section",
            description: "negative example: translation along x1, tangent to the section x2 = 0",
            params: vec![],
        },
        CatalogEntry {
            name: "broken_flow",
            kind: "flow",
            description: "negative example: x + t², which violates the group law",
            params: vec![],
        },
    ]
}

fn exprs(src: &[&str]) -> Vec<Expr> {
    src.iter()
        .map(|s| parse(s).expect("catalog expression"))
        .collect()
}

fn resolve(entry: &CatalogEntry, given: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>> {
    if let Some(unknown) = given
        .keys()
        .find(|k| !entry.params.iter().any(|p| p.name == k.as_str()))
    {
        return Err(Error::Parameter {
            name: unknown.clone(),
            reason: format!("`{}` has no such parameter", entry.name),
        });
    }
    let mut out = BTreeMap::new();
    for p in &entry.params {
        let v = given.get(p.name).copied().unwrap_or(p.default);
        if !v.is_finite() || v < p.min || v > p.max || (p.nonzero && v == 0.0) {
            return Err(Error::Parameter {
                name: p.name.to_string(),
                reason: format!(
                    "{v} outside [{}, {}]{}",
                    p.min,
                    p.max,
                    if p.nonzero { " excluding 0" } else { "" }
                ),
            });
        }
        out.insert(p.name.to_string(), v);
    }
    Ok(out)
}

fn annulus_space() -> Space {
    Space::new(vec![
        CoordKind::bounded(-2.0, 2.0),
        CoordKind::bounded(-2.0, 2.0),
    ])
    .expect("annulus box")
}

fn annulus_section(flow: FlowSystem) -> Result<System> {
    let flow = flow.with_domain(parse(ANNULUS_DOMAIN)?)?;
    let sys = GlobalSectionSystem::level(flow, parse("x2")?, Some(parse("x1")?), 0)?;
    Ok(System::Sectioned(Arc::new(sys)))
}

fn annulus_closed_form(name: &str, angle: &str) -> Result<System> {
    let fl = FlowSystem::closed_form(
        name,
        annulus_space(),
        exprs(&[
            &format!("x1*cos({angle}) - x2*sin({angle})"),
            &format!("x1*sin({angle}) + x2*cos({angle})"),
        ]),
        BTreeMap::new(),
    )?;
    annulus_section(fl)
}

/// Builds a catalog system; `params` override the documented defaults.
pub fn catalog_get(name: &str, params: &BTreeMap<String, f64>) -> Result<System> {
    if let Some(base) = name.strip_prefix(SUSPENSION_PREFIX) {
        return match catalog_get(base, params)? {
            System::Map(m) => Ok(System::Sectioned(Arc::new(suspend_system(&m)?))),
            _ => Err(Error::UnknownSystem(format!(
                "{name} ({base} is not a map)"
            ))),
        };
    }
    let entries = catalog_entries();
    let entry = entries
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownSystem(name.to_string()))?;
    let p = resolve(entry, params)?;
    match name {
        "annulus_phi1" => annulus_closed_form(name, "pi*t"),
        "annulus_phi2" => annulus_closed_form(name, "2*pi*t"),
        "annulus_radial_speed" => annulus_closed_form(name, "sqrt(x1^2 + x2^2)*t"),
        "annulus_rotation_ode" => {
            let step = p["step"];
            let mut field_params = p.clone();
            field_params.remove("step");
            let fl = FlowSystem::ode(
                name,
                annulus_space(),
                exprs(&["-omega*x2", "omega*x1"]),
                step,
                field_params,
            )?;
            annulus_section(fl)
        }
        "circle_rotation" => Ok(System::Map(MapSystem::from_exprs(
            name,
            Space::circle(1.0)?,
            exprs(&["x1 + alpha"]),
            exprs(&["x1 - alpha"]),
            p,
        )?)),
        "interval_identity" => Ok(System::Map(MapSystem::from_exprs(
            name,
            Space::new(vec![CoordKind::bounded(1.0, 2.0)])?,
            exprs(&["x1"]),
            exprs(&["x1"]),
            p,
        )?)),
        "plane_translation" => {
            let fl = FlowSystem::closed_form(name, Space::line(2), exprs(&["x1 + t", "x2"]), p)?;
            Ok(System::Sectioned(Arc::new(GlobalSectionSystem::level(
                fl,
                parse("x2")?,
                None,
                0,
            )?)))
        }
        "broken_flow" => Ok(System::Flow(FlowSystem::closed_form(
            name,
            Space::line(1),
            exprs(&["x1 + t^2"]),
            p,
        )?)),
        _ => unreachable!("entry listed without a builder"),
    }
}

/// Names of the catalog map systems and their suspensions.
pub fn catalog_map_names() -> Vec<&'static str> {
    catalog_entries()
        .into_iter()
        .filter(|e| e.kind == "map")
        .map(|e| e.name)
        .collect()
}

/// Names of every catalog flow with a global section, including the
/// suspensions of the catalog maps. Negative examples are excluded.
pub fn catalog_section_names() -> Vec<String> {
    let mut out: Vec<String> = catalog_entries()
        .into_iter()
        .filter(|e| e.kind == "flow with section" && e.name != "plane_translation")
        .map(|e| e.name.to_string())
        .collect();
    out.extend(
        catalog_map_names()
            .into_iter()
            .map(|m| format!("{SUSPENSION_PREFIX}{m}")),
    );
    out
}
