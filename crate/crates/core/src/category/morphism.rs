use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::section::GlobalSectionSystem;
use crate::space::Point;
use crate::suspension::TorusPoint;
use crate::systems::{check_free_vars, eval_exprs, MapSystem, Params};

use super::counit::{k_eval, k_inverse, OrbitCells};

/// The space part `h` of a morphism.
#[derive(Clone)]
pub enum PointMap {
    Identity,
    /// Per-coordinate expressions in the source coordinates `x1..xn`.
    Exprs {
        exprs: Arc<Vec<Expr>>,
        params: Params,
    },
    /// `[x, t] ↦ [h(x), t]` on mapping tori.
    Suspended(Arc<PointMap>),
    /// `x ↦ [x, 0]`.
    Unit,
    /// `[x, 0] ↦ x`.
    UnitInverse,
    /// `[x, t] ↦ Φ(x, t T_Φ(x))` from `ΣP(Φ, X, S)` to `(Φ, X, S)`.
    Counit(Arc<GlobalSectionSystem>),
    /// Inverse of [`PointMap::Counit`].
    CounitInverse(Arc<GlobalSectionSystem>),
    /// Apply the first map, then the second.
    Compose(Arc<PointMap>, Arc<PointMap>),
}

impl fmt::Debug for PointMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointMap::Identity => f.write_str("id"),
            PointMap::Exprs { exprs, .. } => {
                let parts: Vec<String> = exprs.iter().map(|e| e.to_string()).collect();
                write!(f, "[{}]", parts.join(", "))
            }
            PointMap::Suspended(h) => write!(f, "susp({h:?})"),
            PointMap::Unit => f.write_str("l"),
            PointMap::UnitInverse => f.write_str("l⁻¹"),
            PointMap::Counit(s) => write!(f, "k[{}]", s.name()),
            PointMap::CounitInverse(s) => write!(f, "k⁻¹[{}]", s.name()),
            PointMap::Compose(a, b) => write!(f, "{b:?} ∘ {a:?}"),
        }
    }
}

impl PointMap {
    /// Raw image of `x`; the owning morphism canonicalizes it in its target.
    pub fn apply(&self, x: &Point) -> Result<Point> {
        match self {
            PointMap::Identity => Ok(x.clone()),
            PointMap::Exprs { exprs, params } => Ok(Point(eval_exprs(exprs, &x.0, None, params)?)),
            PointMap::Suspended(h) => {
                let p = TorusPoint::from_point(x);
                Ok(TorusPoint::new(h.apply(&p.base)?, p.height).to_point())
            }
            PointMap::Unit => Ok(TorusPoint::new(x.clone(), 0.0).to_point()),
            PointMap::UnitInverse => Ok(TorusPoint::from_point(x).base),
            PointMap::Counit(sys) => k_eval(sys, &TorusPoint::from_point(x)),
            PointMap::CounitInverse(sys) => Ok(k_inverse(sys, x)?.to_point()),
            PointMap::Compose(a, b) => b.apply(&a.apply(x)?),
        }
    }

    pub fn then(self, next: PointMap) -> PointMap {
        match (self, next) {
            (PointMap::Identity, b) => b,
            (a, PointMap::Identity) => a,
            (a, b) => PointMap::Compose(Arc::new(a), Arc::new(b)),
        }
    }
}

/// The time part `τ(x, t)` of a weak morphism.
#[derive(Clone)]
pub enum TimeReparam {
    /// `τ(x, t) = t`: the morphism is a flow morphism.
    Identity,
    /// An expression in the source coordinates and `t`.
    ClosedForm { expr: Arc<Expr>, params: Params },
    /// `τ([x, t], s) = ∫₀^{s+t} R_Φ(x)(u) du − t T_Φ(x)`, the time part of the counit.
    SectionDerived(Arc<GlobalSectionSystem>),
    /// Time part of the inverse of the counit: solves `τ(k⁻¹(y), u) = s` for `u`.
    SectionDerivedInverse(Arc<GlobalSectionSystem>),
    /// `τ₂(h₁(x), τ₁(x, t))`.
    Compose {
        first_map: Arc<PointMap>,
        first: Arc<TimeReparam>,
        second: Arc<TimeReparam>,
    },
}

impl fmt::Debug for TimeReparam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeReparam::Identity => f.write_str("t"),
            TimeReparam::ClosedForm { expr, .. } => write!(f, "{expr}"),
            TimeReparam::SectionDerived(s) => write!(f, "τ[{}]", s.name()),
            TimeReparam::SectionDerivedInverse(s) => write!(f, "τ⁻¹[{}]", s.name()),
            TimeReparam::Compose { first, second, .. } => write!(f, "{second:?} ∘ {first:?}"),
        }
    }
}

impl TimeReparam {
    pub fn eval(&self, x: &Point, t: f64) -> Result<f64> {
        Ok(self.eval_many(x, &[t])?[0])
    }

    /// `τ(x, t)` for every `t` in `ts`, sharing return-time data along the
    /// orbit of `x`.
    pub fn eval_many(&self, x: &Point, ts: &[f64]) -> Result<Vec<f64>> {
        match self {
            TimeReparam::Identity => Ok(ts.to_vec()),
            TimeReparam::ClosedForm { expr, params } => ts
                .iter()
                .map(|&t| {
                    Ok(eval_exprs(std::slice::from_ref(expr.as_ref()), &x.0, Some(t), params)?[0])
                })
                .collect(),
            TimeReparam::SectionDerived(sys) => {
                let p = TorusPoint::from_point(x);
                let mut cells = OrbitCells::new(sys, &p.base)?;
                let offset = if p.height == 0.0 {
                    0.0
                } else {
                    p.height * cells.forward_time(0)?
                };
                ts.iter()
                    .map(|&s| Ok(cells.integral(s + p.height)? - offset))
                    .collect()
            }
            TimeReparam::SectionDerivedInverse(sys) => {
                let p = k_inverse(sys, x)?;
                let mut cells = OrbitCells::new(sys, &p.base)?;
                let offset = if p.height == 0.0 {
                    0.0
                } else {
                    p.height * cells.forward_time(0)?
                };
                ts.iter()
                    .map(|&u| Ok(cells.integral_inverse(u + offset)? - p.height))
                    .collect()
            }
            TimeReparam::Compose {
                first_map,
                first,
                second,
            } => {
                let y = first_map.apply(x)?;
                let us = first.eval_many(x, ts)?;
                second.eval_many(&y, &us)
            }
        }
    }
}

fn same_map_system(a: &MapSystem, b: &MapSystem) -> bool {
    a.name() == b.name() && a.space() == b.space()
}

pub(crate) fn same_section_system(a: &GlobalSectionSystem, b: &GlobalSectionSystem) -> bool {
    std::ptr::eq(a, b) || (a.name() == b.name() && a.flow().space() == b.flow().space())
}

/// A morphism `h: (f, X) → (g, Y)` of map systems.
#[derive(Debug, Clone)]
pub struct MapMorphism {
    source: MapSystem,
    target: MapSystem,
    map: PointMap,
}

impl MapMorphism {
    pub fn new(source: MapSystem, target: MapSystem, map: PointMap) -> Self {
        MapMorphism {
            source,
            target,
            map,
        }
    }

    pub fn from_exprs(
        source: MapSystem,
        target: MapSystem,
        exprs: Vec<Expr>,
        params: BTreeMap<String, f64>,
    ) -> Result<Self> {
        if exprs.len() != target.dim() {
            return Err(Error::InvalidSystem(format!(
                "morphism has {} component(s) for a {}-dimensional target",
                exprs.len(),
                target.dim()
            )));
        }
        check_free_vars(&exprs, source.dim(), false, &params)?;
        Ok(MapMorphism {
            source,
            target,
            map: PointMap::Exprs {
                exprs: Arc::new(exprs),
                params: Arc::new(params),
            },
        })
    }

    pub fn identity(m: MapSystem) -> Self {
        MapMorphism {
            source: m.clone(),
            target: m,
            map: PointMap::Identity,
        }
    }

    pub fn source(&self) -> &MapSystem {
        &self.source
    }

    pub fn target(&self) -> &MapSystem {
        &self.target
    }

    pub fn map(&self) -> &PointMap {
        &self.map
    }

    pub fn apply(&self, x: &Point) -> Result<Point> {
        self.target.canonicalize(&self.map.apply(x)?.0)
    }

    /// `self ∘ first`.
    pub fn compose(&self, first: &MapMorphism) -> Result<MapMorphism> {
        if !same_map_system(first.target(), &self.source) {
            return Err(Error::Mismatch(format!(
                "cannot compose {} → {} after {} → {}",
                self.source.name(),
                self.target.name(),
                first.source.name(),
                first.target.name()
            )));
        }
        Ok(MapMorphism {
            source: first.source.clone(),
            target: self.target.clone(),
            map: first.map.clone().then(self.map.clone()),
        })
    }
}

/// A weak morphism `(h, τ)` between flows with global sections. With
/// `τ = Identity` it is a flow morphism.
#[derive(Debug, Clone)]
pub struct WeakMorphism {
    source: Arc<GlobalSectionSystem>,
    target: Arc<GlobalSectionSystem>,
    map: PointMap,
    tau: TimeReparam,
}

impl WeakMorphism {
    pub fn new(
        source: Arc<GlobalSectionSystem>,
        target: Arc<GlobalSectionSystem>,
        map: PointMap,
        tau: TimeReparam,
    ) -> Self {
        WeakMorphism {
            source,
            target,
            map,
            tau,
        }
    }

    /// `h` from expressions (identity when `None`), `τ` from an expression in
    /// the source coordinates and `t` (the identity reparametrization when `None`).
    pub fn from_exprs(
        source: Arc<GlobalSectionSystem>,
        target: Arc<GlobalSectionSystem>,
        h: Option<Vec<Expr>>,
        tau: Option<Expr>,
        params: BTreeMap<String, f64>,
    ) -> Result<Self> {
        let src_dim = source.flow().space().dim();
        let map = match h {
            None => {
                if src_dim != target.flow().space().dim() {
                    return Err(Error::Mismatch(
                        "identity between spaces of different dimension".into(),
                    ));
                }
                PointMap::Identity
            }
            Some(exprs) => {
                if exprs.len() != target.flow().space().dim() {
                    return Err(Error::InvalidSystem(format!(
                        "morphism has {} component(s) for a {}-dimensional target",
                        exprs.len(),
                        target.flow().space().dim()
                    )));
                }
                check_free_vars(&exprs, src_dim, false, &params)?;
                PointMap::Exprs {
                    exprs: Arc::new(exprs),
                    params: Arc::new(params.clone()),
                }
            }
        };
        let tau = match tau {
            None => TimeReparam::Identity,
            Some(e) => {
                check_free_vars([&e], src_dim, true, &params)?;
                TimeReparam::ClosedForm {
                    expr: Arc::new(e),
                    params: Arc::new(params),
                }
            }
        };
        Ok(WeakMorphism::new(source, target, map, tau))
    }

    pub fn identity(sys: Arc<GlobalSectionSystem>) -> Self {
        WeakMorphism::new(sys.clone(), sys, PointMap::Identity, TimeReparam::Identity)
    }

    pub fn source(&self) -> &Arc<GlobalSectionSystem> {
        &self.source
    }

    pub fn target(&self) -> &Arc<GlobalSectionSystem> {
        &self.target
    }

    pub fn map(&self) -> &PointMap {
        &self.map
    }

    pub fn tau(&self) -> &TimeReparam {
        &self.tau
    }

    pub fn is_flow_morphism(&self) -> bool {
        matches!(self.tau, TimeReparam::Identity)
    }

    pub fn apply(&self, x: &Point) -> Result<Point> {
        self.target.flow().canonicalize(&self.map.apply(x)?.0)
    }

    pub fn time(&self, x: &Point, t: f64) -> Result<f64> {
        self.tau.eval(x, t)
    }

    /// `(h₂ ∘ h₁, τ₂ ∘ τ₁)` with `τ₂∘τ₁(x, t) = τ₂(h₁(x), τ₁(x, t))`.
    pub fn compose(&self, first: &WeakMorphism) -> Result<WeakMorphism> {
        if !same_section_system(&first.target, &self.source) {
            return Err(Error::Mismatch(format!(
                "cannot compose {} → {} after {} → {}",
                self.source.name(),
                self.target.name(),
                first.source.name(),
                first.target.name()
            )));
        }
        let tau = match (&first.tau, &self.tau) {
            (TimeReparam::Identity, TimeReparam::Identity) => TimeReparam::Identity,
            (t1, TimeReparam::Identity) => t1.clone(),
            _ => TimeReparam::Compose {
                first_map: Arc::new(first.map.clone()),
                first: Arc::new(first.tau.clone()),
                second: Arc::new(self.tau.clone()),
            },
        };
        Ok(WeakMorphism {
            source: first.source.clone(),
            target: self.target.clone(),
            map: first.map.clone().then(self.map.clone()),
            tau,
        })
    }
}

/// `w2 ∘ w1`.
pub fn weak_compose(w2: &WeakMorphism, w1: &WeakMorphism) -> Result<WeakMorphism> {
    w2.compose(w1)
}
