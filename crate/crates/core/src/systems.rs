//! Map dynamical systems `(f, X)` and flows `(Φ, X)`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::expr::{Env, Expr};
use crate::report::{CheckReport, ReportBuilder};
use crate::section::GlobalSectionSystem;
use crate::space::{CoordKind, Point, Space};
use crate::suspension::{self, TorusPoint};

pub type Params = Arc<BTreeMap<String, f64>>;

/// Default RK4 step for ODE-defined flows.
pub const DEFAULT_ODE_STEP: f64 = 1e-3;

/// Half-width of the sampling window for line coordinates without a box.
const UNBOUNDED_SAMPLE_HALF_WIDTH: f64 = 1.0;

/// Binds `x1..xn` to a state vector, `t` to an optional time, and everything
/// else to named parameters.
pub(crate) struct StateEnv<'a> {
    pub state: &'a [f64],
    pub time: Option<f64>,
    pub params: &'a BTreeMap<String, f64>,
}

impl Env for StateEnv<'_> {
    fn get(&self, name: &str) -> Option<f64> {
        if name == "t" {
            if let Some(t) = self.time {
                return Some(t);
            }
        }
        if let Some(idx) = coord_index(name) {
            if idx >= 1 && idx <= self.state.len() {
                return Some(self.state[idx - 1]);
            }
        }
        self.params.get(name).copied()
    }
}

fn coord_index(name: &str) -> Option<usize> {
    let digits = name.strip_prefix('x')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Rejects expressions that mention anything besides state coordinates,
/// (optionally) time, and declared parameters.
pub(crate) fn check_free_vars<'a>(
    exprs: impl IntoIterator<Item = &'a Expr>,
    dim: usize,
    allow_time: bool,
    params: &BTreeMap<String, f64>,
) -> Result<()> {
    for e in exprs {
        for v in e.free_variables() {
            let ok = match coord_index(&v) {
                Some(i) => i >= 1 && i <= dim,
                None => (allow_time && v == "t") || params.contains_key(&v),
            };
            if !ok {
                return Err(Error::InvalidSystem(format!(
                    "unknown variable `{v}` in `{e}`"
                )));
            }
        }
    }
    Ok(())
}

pub(crate) fn eval_exprs(
    exprs: &[Expr],
    state: &[f64],
    time: Option<f64>,
    params: &BTreeMap<String, f64>,
) -> Result<Vec<f64>> {
    let env = StateEnv {
        state,
        time,
        params,
    };
    exprs.iter().map(|e| Ok(e.evaluate(&env)?)).collect()
}

pub(crate) fn sample_space<R: Rng + ?Sized>(space: &Space, rng: &mut R) -> Result<Point> {
    let raw: Vec<f64> = space
        .coords()
        .iter()
        .map(|c| match *c {
            CoordKind::Line {
                lo: Some(lo),
                hi: Some(hi),
            } => rng.gen_range(lo..hi),
            CoordKind::Line { .. } => {
                rng.gen_range(-UNBOUNDED_SAMPLE_HALF_WIDTH..UNBOUNDED_SAMPLE_HALF_WIDTH)
            }
            CoordKind::Circle { period } => rng.gen_range(0.0..period),
        })
        .collect();
    space.canonicalize(&raw)
}

#[derive(Clone)]
pub enum MapLaw {
    /// Per-coordinate expressions in `x1..xn` and parameters.
    Exprs {
        forward: Arc<Vec<Expr>>,
        inverse: Arc<Vec<Expr>>,
        params: Params,
    },
    /// The first-return map of a flow on its section; the inverse is the
    /// first-return map of the reversed flow.
    Poincare(Arc<GlobalSectionSystem>),
}

impl fmt::Debug for MapLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapLaw::Exprs {
                forward,
                inverse,
                params,
            } => f
                .debug_struct("Exprs")
                .field(
                    "forward",
                    &forward.iter().map(|e| e.to_string()).collect::<Vec<_>>(),
                )
                .field(
                    "inverse",
                    &inverse.iter().map(|e| e.to_string()).collect::<Vec<_>>(),
                )
                .field("params", params)
                .finish(),
            MapLaw::Poincare(sys) => f.debug_tuple("Poincare").field(&sys.name()).finish(),
        }
    }
}

/// A homeomorphism `f: X → X` together with its inverse.
#[derive(Debug, Clone)]
pub struct MapSystem {
    name: String,
    space: Space,
    law: MapLaw,
}

impl MapSystem {
    pub fn from_exprs(
        name: impl Into<String>,
        space: Space,
        forward: Vec<Expr>,
        inverse: Vec<Expr>,
        params: BTreeMap<String, f64>,
    ) -> Result<Self> {
        let dim = space.dim();
        for (what, list) in [("forward", &forward), ("inverse", &inverse)] {
            if list.len() != dim {
                return Err(Error::InvalidSystem(format!(
                    "{what} map has {} component(s) for a {dim}-dimensional space",
                    list.len()
                )));
            }
        }
        check_free_vars(forward.iter().chain(&inverse), dim, false, &params)?;
        Ok(MapSystem {
            name: name.into(),
            space,
            law: MapLaw::Exprs {
                forward: Arc::new(forward),
                inverse: Arc::new(inverse),
                params: Arc::new(params),
            },
        })
    }

    /// `P(Φ, X, S)`: the Poincaré map as an object of the map category. Its
    /// points are points of the flow's space lying on `S`.
    pub fn poincare(sys: Arc<GlobalSectionSystem>) -> Self {
        MapSystem {
            name: format!("P({})", sys.name()),
            space: sys.flow().space().clone(),
            law: MapLaw::Poincare(sys),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn law(&self) -> &MapLaw {
        &self.law
    }

    pub fn canonicalize(&self, raw: &[f64]) -> Result<Point> {
        match &self.law {
            MapLaw::Poincare(sys) => sys.flow().canonicalize(raw),
            MapLaw::Exprs { .. } => self.space.canonicalize(raw),
        }
    }

    pub fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        match &self.law {
            MapLaw::Poincare(sys) => sys.flow().distance(p, q),
            MapLaw::Exprs { .. } => self.space.distance(p, q),
        }
    }

    pub fn forward(&self, x: &Point) -> Result<Point> {
        self.space.check_dim(x.dim())?;
        match &self.law {
            MapLaw::Exprs {
                forward, params, ..
            } => self.canonicalize(&eval_exprs(forward, &x.0, None, params)?),
            MapLaw::Poincare(sys) => sys.poincare_map(x),
        }
    }

    pub fn backward(&self, x: &Point) -> Result<Point> {
        self.space.check_dim(x.dim())?;
        match &self.law {
            MapLaw::Exprs {
                inverse, params, ..
            } => self.canonicalize(&eval_exprs(inverse, &x.0, None, params)?),
            MapLaw::Poincare(sys) => sys.poincare_inverse(x),
        }
    }

    /// `fⁿ(x)`; negative `n` iterates the inverse.
    pub fn apply(&self, x: &Point, n: i64) -> Result<Point> {
        let mut y = self.canonicalize(&x.0)?;
        for _ in 0..n.unsigned_abs() {
            y = if n > 0 {
                self.forward(&y)?
            } else {
                self.backward(&y)?
            };
        }
        Ok(y)
    }

    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Point> {
        match &self.law {
            MapLaw::Exprs { .. } => sample_space(&self.space, rng),
            MapLaw::Poincare(sys) => sys.sample_section_point(rng),
        }
    }

    /// Sampled homeomorphism check: `f∘f⁻¹ ≈ id` and `f⁻¹∘f ≈ id`.
    pub fn inverse_check(&self, samples: &[Point], tol: f64) -> CheckReport {
        let mut report = ReportBuilder::new(format!("inverse laws of {}", self.name), tol);
        for (i, x) in samples.iter().enumerate() {
            let r = (|| {
                let a = self.distance(&self.forward(&self.backward(x)?)?, x)?;
                let b = self.distance(&self.backward(&self.forward(x)?)?, x)?;
                Ok(a.max(b))
            })();
            report.record(i, &x.0, r);
        }
        report.finish()
    }
}

#[derive(Clone)]
pub enum FlowLaw {
    /// Per-coordinate expressions in `x1..xn`, `t` and parameters.
    ClosedForm(Arc<Vec<Expr>>),
    /// Autonomous vector field integrated by fixed-step RK4.
    Ode { field: Arc<Vec<Expr>>, step: f64 },
    /// The suspension flow of a map on its mapping torus.
    Suspension(MapSystem),
}

impl fmt::Debug for FlowLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowLaw::ClosedForm(exprs) => f
                .debug_tuple("ClosedForm")
                .field(&exprs.iter().map(|e| e.to_string()).collect::<Vec<_>>())
                .finish(),
            FlowLaw::Ode { field, step } => f
                .debug_struct("Ode")
                .field(
                    "field",
                    &field.iter().map(|e| e.to_string()).collect::<Vec<_>>(),
                )
                .field("step", step)
                .finish(),
            FlowLaw::Suspension(m) => f.debug_tuple("Suspension").field(&m.name()).finish(),
        }
    }
}

/// A flow `Φ: X × ℝ → X`.
#[derive(Debug, Clone)]
pub struct FlowSystem {
    name: String,
    space: Space,
    law: FlowLaw,
    params: Params,
    /// Positive on the phase space proper (e.g. the open annulus).
    domain: Option<Arc<Expr>>,
    reversed: bool,
}

impl FlowSystem {
    pub fn closed_form(
        name: impl Into<String>,
        space: Space,
        exprs: Vec<Expr>,
        params: BTreeMap<String, f64>,
    ) -> Result<Self> {
        if exprs.len() != space.dim() {
            return Err(Error::InvalidSystem(format!(
                "flow has {} component(s) for a {}-dimensional space",
                exprs.len(),
                space.dim()
            )));
        }
        check_free_vars(&exprs, space.dim(), true, &params)?;
        Ok(FlowSystem {
            name: name.into(),
            space,
            law: FlowLaw::ClosedForm(Arc::new(exprs)),
            params: Arc::new(params),
            domain: None,
            reversed: false,
        })
    }

    pub fn ode(
        name: impl Into<String>,
        space: Space,
        field: Vec<Expr>,
        step: f64,
        params: BTreeMap<String, f64>,
    ) -> Result<Self> {
        if field.len() != space.dim() {
            return Err(Error::InvalidSystem(format!(
                "vector field has {} component(s) for a {}-dimensional space",
                field.len(),
                space.dim()
            )));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidSystem(format!(
                "ODE step must be positive, got {step}"
            )));
        }
        check_free_vars(&field, space.dim(), false, &params)?;
        Ok(FlowSystem {
            name: name.into(),
            space,
            law: FlowLaw::Ode {
                field: Arc::new(field),
                step,
            },
            params: Arc::new(params),
            domain: None,
            reversed: false,
        })
    }

    /// The suspension flow `Σf` on the mapping torus of `m`; its states are
    /// `base ++ [height]`.
    pub fn suspension(m: MapSystem) -> Self {
        FlowSystem {
            name: format!("Σ({})", m.name()),
            space: m.space().extended(CoordKind::bounded(0.0, 1.0)),
            law: FlowLaw::Suspension(m),
            params: Arc::new(BTreeMap::new()),
            domain: None,
            reversed: false,
        }
    }

    pub fn with_domain(mut self, domain: Expr) -> Result<Self> {
        check_free_vars([&domain], self.space.dim(), false, &self.params)?;
        self.domain = Some(Arc::new(domain));
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn law(&self) -> &FlowLaw {
        &self.law
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn is_reversed(&self) -> bool {
        self.reversed
    }

    pub fn domain(&self) -> Option<&Expr> {
        self.domain.as_deref()
    }

    /// `Ψ(x, t) := Φ(x, −t)`.
    pub fn reverse(&self) -> FlowSystem {
        FlowSystem {
            reversed: !self.reversed,
            ..self.clone()
        }
    }

    pub fn canonicalize(&self, raw: &[f64]) -> Result<Point> {
        match &self.law {
            FlowLaw::Suspension(m) => {
                self.space.check_dim(raw.len())?;
                let (base, h) = raw.split_at(raw.len() - 1);
                let base = m.canonicalize(base)?;
                if !h[0].is_finite() {
                    return Err(Error::NonFinite {
                        coord: raw.len() - 1,
                        value: h[0],
                    });
                }
                Ok(suspension::torus_canonicalize(m, &base, h[0])?.to_point())
            }
            _ => self.space.canonicalize(raw),
        }
    }

    /// Distance on states; for suspensions this is the seam-aware distance
    /// on the mapping torus.
    pub fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        match &self.law {
            FlowLaw::Suspension(m) => {
                self.space.check_dim(p.dim())?;
                self.space.check_dim(q.dim())?;
                suspension::torus_distance(
                    m,
                    &TorusPoint::from_point(p),
                    &TorusPoint::from_point(q),
                )
            }
            _ => self.space.distance(p, q),
        }
    }

    /// True iff `x` lies in the box and satisfies the domain predicate.
    pub fn contains(&self, x: &Point) -> Result<bool> {
        self.space.check_dim(x.dim())?;
        if self.space.box_violation(x).is_some() {
            return Ok(false);
        }
        if let Some(d) = &self.domain {
            let env = StateEnv {
                state: &x.0,
                time: None,
                params: &self.params,
            };
            return Ok(d.evaluate(&env)? > 0.0);
        }
        Ok(true)
    }

    pub fn eval(&self, x: &Point, t: f64) -> Result<Point> {
        self.space.check_dim(x.dim())?;
        if !t.is_finite() {
            return Err(Error::NonFinite { coord: 0, value: t });
        }
        let t = if self.reversed { -t } else { t };
        let out = match &self.law {
            FlowLaw::ClosedForm(exprs) => {
                self.space
                    .canonicalize(&eval_exprs(exprs, &x.0, Some(t), &self.params)?)?
            }
            FlowLaw::Ode { field, step } => self
                .space
                .canonicalize(&self.integrate(field, &x.0, t, *step)?)?,
            FlowLaw::Suspension(m) => {
                return Ok(
                    suspension::suspension_eval(m, &TorusPoint::from_point(x), t)?.to_point(),
                )
            }
        };
        if let Some((coord, value, lo, hi)) = self.space.box_violation(&out) {
            return Err(Error::OutOfBounds {
                coord,
                value,
                lo,
                hi,
            });
        }
        Ok(out)
    }

    /// Classical RK4 with `⌈|t|/step⌉` equal steps; negative time integrates
    /// the negated field forward.
    fn integrate(&self, field: &[Expr], x: &[f64], t: f64, step: f64) -> Result<Vec<f64>> {
        if t == 0.0 {
            return Ok(x.to_vec());
        }
        let sign = t.signum();
        // the guard keeps t = k·step from rounding up to k + 1 steps
        let n = (t.abs() / step * (1.0 - 1e-12)).ceil().max(1.0);
        let h = t.abs() / n;
        let rhs = |y: &[f64]| -> Result<Vec<f64>> {
            let mut v = eval_exprs(field, y, None, &self.params)?;
            v.iter_mut().for_each(|c| *c *= sign);
            Ok(v)
        };
        let axpy = |y: &[f64], k: &[f64], a: f64| -> Vec<f64> {
            y.iter().zip(k).map(|(y, k)| y + a * k).collect()
        };
        let mut y = x.to_vec();
        for _ in 0..n as u64 {
            let k1 = rhs(&y)?;
            let k2 = rhs(&axpy(&y, &k1, h / 2.0))?;
            let k3 = rhs(&axpy(&y, &k2, h / 2.0))?;
            let k4 = rhs(&axpy(&y, &k3, h))?;
            for i in 0..y.len() {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                coord: i,
                value: y[i],
            });
        }
        Ok(y)
    }

    /// Uniform in the box (or the default window for unbounded lines),
    /// rejected until the domain predicate holds.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Point> {
        if let FlowLaw::Suspension(m) = &self.law {
            let base = m.sample_point(rng)?;
            return Ok(TorusPoint::new(base, rng.gen_range(0.0..1.0)).to_point());
        }
        for _ in 0..10_000 {
            let p = sample_space(&self.space, rng)?;
            if self.contains(&p)? {
                return Ok(p);
            }
        }
        Err(Error::InvalidSystem(format!(
            "{}: no point of the domain found by rejection sampling",
            self.name
        )))
    }
}

/// Residuals of `Φ(x, 0) = x` and `Φ(Φ(x, t), s) = Φ(x, t + s)` over
/// samples `(x, t, s)`.
pub fn check_flow_laws(fl: &FlowSystem, samples: &[(Point, f64, f64)], tol: f64) -> CheckReport {
    let mut report = ReportBuilder::new(format!("flow laws of {}", fl.name()), tol);
    for (i, (x, t, s)) in samples.iter().enumerate() {
        let r = (|| {
            let x = fl.canonicalize(&x.0)?;
            let identity = fl.distance(&fl.eval(&x, 0.0)?, &x)?;
            let nested = fl.eval(&fl.eval(&x, *t)?, *s)?;
            let direct = fl.eval(&x, t + s)?;
            Ok(identity.max(fl.distance(&nested, &direct)?))
        })();
        let mut sample = x.0.clone();
        sample.extend([*t, *s]);
        report.record(i, &sample, r);
    }
    report.finish()
}
