//! Global Poincaré sections, crossing detection, return times, and the
//! first-return map with its inverse.
//!
//! A section is the zero set of a scalar function `g`, optionally cut down
//! by a domain predicate. Crossings are found by marching the orbit with
//! step `dt`, bracketing sign changes of `g`, bisecting to `tol_time` and
//! finishing with one secant step inside the final bracket. Crossings
//! closer together than `dt` can be missed; [`close_pairs`] lists pairs of
//! reported crossings within `2·dt` of each other so callers can flag them.
//!
//! Suspension flows use the seam `{[x, 0]}` of the mapping torus, whose
//! crossings are computed exactly from the height coordinate.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::report::{CheckReport, ReportBuilder};
use crate::space::{Point, Tolerances};
use crate::suspension::TorusPoint;
use crate::systems::{check_free_vars, FlowLaw, FlowSystem, MapSystem, StateEnv};

#[derive(Clone)]
pub enum Section {
    /// `S = {g = 0, domain > 0}`.
    Level { g: Expr, domain: Option<Expr> },
    /// The zero-height seam of a mapping torus.
    TorusSeam,
}

impl fmt::Debug for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Section::Level { g, domain } => f
                .debug_struct("Level")
                .field("g", &g.to_string())
                .field("domain", &domain.as_ref().map(|d| d.to_string()))
                .finish(),
            Section::TorusSeam => f.write_str("TorusSeam"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub time: f64,
    pub point: Point,
    /// Sign of `d/dt g(Φ(x, t))` at the crossing.
    pub direction: i8,
}

/// Pairs of consecutive crossings closer than `2·dt`, where a third crossing
/// may have gone undetected.
pub fn close_pairs(crossings: &[Crossing], dt: f64) -> Vec<(f64, f64)> {
    crossings
        .windows(2)
        .filter(|w| w[1].time - w[0].time < 2.0 * dt)
        .map(|w| (w[0].time, w[1].time))
        .collect()
}

/// A flow together with a global Poincaré section: the triple `(Φ, X, S)`.
#[derive(Debug, Clone)]
pub struct GlobalSectionSystem {
    flow: FlowSystem,
    section: Arc<Section>,
    /// `+1`/`-1` admits only crossings with that direction, `0` admits both.
    orientation: i8,
    tol: Tolerances,
}

impl GlobalSectionSystem {
    pub fn level(flow: FlowSystem, g: Expr, domain: Option<Expr>, orientation: i8) -> Result<Self> {
        if !(-1..=1).contains(&orientation) {
            return Err(Error::InvalidSystem(format!(
                "orientation must be -1, 0 or 1, got {orientation}"
            )));
        }
        if matches!(flow.law(), FlowLaw::Suspension(_)) {
            return Err(Error::InvalidSystem(
                "suspension flows carry their own section; use suspend_system".into(),
            ));
        }
        check_free_vars(
            [&g].into_iter().chain(domain.as_ref()),
            flow.space().dim(),
            false,
            flow.params(),
        )?;
        Ok(GlobalSectionSystem {
            flow,
            section: Arc::new(Section::Level { g, domain }),
            orientation,
            tol: Tolerances::default(),
        })
    }

    pub(crate) fn torus(flow: FlowSystem) -> Self {
        debug_assert!(matches!(flow.law(), FlowLaw::Suspension(_)));
        GlobalSectionSystem {
            flow,
            section: Arc::new(Section::TorusSeam),
            orientation: 0,
            tol: Tolerances::default(),
        }
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Result<Self> {
        tol.validate()?;
        self.tol = tol;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        self.flow.name()
    }

    pub fn flow(&self) -> &FlowSystem {
        &self.flow
    }

    pub fn section(&self) -> &Section {
        &self.section
    }

    pub fn orientation(&self) -> i8 {
        self.orientation
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    /// The base map when this is a suspension.
    pub fn suspension_base(&self) -> Option<&MapSystem> {
        match self.flow.law() {
            FlowLaw::Suspension(m) => Some(m),
            _ => None,
        }
    }

    /// Same section, reversed flow `Ψ(x, t) = Φ(x, −t)`; admitted crossing
    /// directions flip with the time direction.
    pub fn reversed(&self) -> GlobalSectionSystem {
        GlobalSectionSystem {
            flow: self.flow.reverse(),
            section: self.section.clone(),
            orientation: -self.orientation,
            tol: self.tol,
        }
    }

    /// `g(x)`; on a mapping torus the signed offset from the seam.
    pub fn section_value(&self, x: &Point) -> Result<f64> {
        match &*self.section {
            Section::Level { g, .. } => Ok(g.evaluate(&self.env(x))?),
            Section::TorusSeam => {
                let h = x.0[x.dim() - 1];
                Ok(if h < 0.5 { h } else { h - 1.0 })
            }
        }
    }

    fn env<'a>(&'a self, x: &'a Point) -> StateEnv<'a> {
        StateEnv {
            state: &x.0,
            time: None,
            params: self.flow.params(),
        }
    }

    fn in_section_domain(&self, x: &Point) -> Result<bool> {
        match &*self.section {
            Section::Level {
                domain: Some(d), ..
            } => Ok(d.evaluate(&self.env(x))? > 0.0),
            _ => Ok(true),
        }
    }

    pub fn on_section(&self, x: &Point) -> Result<bool> {
        self.flow.space().check_dim(x.dim())?;
        Ok(self.section_value(x)?.abs() <= self.tol.tol_space && self.in_section_domain(x)?)
    }

    fn require_on_section(&self, x: &Point) -> Result<()> {
        if self.on_section(x)? {
            Ok(())
        } else {
            Err(Error::NotOnSection(x.0.clone()))
        }
    }

    /// Admitted crossings of the orbit of `x` with times in `(t0, t1]`,
    /// sorted by time and at least `t_min` apart.
    pub fn crossing_detect(&self, x: &Point, t0: f64, t1: f64) -> Result<Vec<Crossing>> {
        if t0.is_nan() || t1.is_nan() || t0 >= t1 {
            return Err(Error::InvalidSystem(format!(
                "crossing window needs t0 < t1, got ({t0}, {t1})"
            )));
        }
        self.scan(x, t0, t1, None)
    }

    fn scan(&self, x: &Point, t0: f64, t1: f64, limit: Option<usize>) -> Result<Vec<Crossing>> {
        match &*self.section {
            Section::Level { .. } => self.scan_level(x, t0, t1, limit),
            Section::TorusSeam => self.scan_seam(x, t0, t1, limit),
        }
    }

    fn scan_level(
        &self,
        x: &Point,
        t0: f64,
        t1: f64,
        limit: Option<usize>,
    ) -> Result<Vec<Crossing>> {
        let tol = &self.tol;
        let mut out: Vec<Crossing> = Vec::new();
        let mut ta = t0;
        let mut ya = if t0 == 0.0 {
            self.flow.canonicalize(&x.0)?
        } else {
            self.flow.eval(x, t0)?
        };
        let mut ga = self.section_value(&ya)?;
        while ta < t1 {
            let tb = (ta + tol.dt).min(t1);
            let yb = self.flow.eval(&ya, tb - ta)?;
            let gb = self.section_value(&yb)?;
            let found = if ga == 0.0 {
                None
            } else if gb == 0.0 {
                Some((tb, yb.clone(), -ga.signum()))
            } else if (ga < 0.0) != (gb < 0.0) {
                let (tc, yc) = self.refine(ta, &ya, ga, tb, gb)?;
                Some((tc, yc, (gb - ga).signum()))
            } else {
                None
            };
            if let Some((tc, yc, dir)) = found {
                let dir = dir as i8;
                let spaced = out.last().is_none_or(|c| tc - c.time >= tol.t_min);
                if spaced
                    && (self.orientation == 0 || dir == self.orientation)
                    && self.in_section_domain(&yc)?
                {
                    out.push(Crossing {
                        time: tc,
                        point: yc,
                        direction: dir,
                    });
                    if limit.is_some_and(|l| out.len() >= l) {
                        break;
                    }
                }
            }
            ta = tb;
            ya = yb;
            ga = gb;
        }
        Ok(out)
    }

    /// Bisection on a bracketing pair down to `tol_time`, then one secant
    /// step inside the final bracket.
    fn refine(&self, ta: f64, ya: &Point, ga: f64, tb: f64, gb: f64) -> Result<(f64, Point)> {
        let (mut lo, mut hi) = (ta, tb);
        let (mut glo, mut ghi) = (ga, gb);
        let mut ylo = ya.clone();
        while hi - lo > self.tol.tol_time {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let ym = self.flow.eval(&ylo, mid - lo)?;
            let gm = self.section_value(&ym)?;
            if gm == 0.0 {
                return Ok((mid, ym));
            }
            if (gm < 0.0) == (glo < 0.0) {
                lo = mid;
                glo = gm;
                ylo = ym;
            } else {
                hi = mid;
                ghi = gm;
            }
        }
        let tc = lo + (hi - lo) * glo / (glo - ghi);
        let yc = self.flow.eval(&ylo, tc - lo)?;
        Ok((tc, yc))
    }

    /// Exact seam crossings: the height moves at unit speed, so crossings sit
    /// where it passes an integer `k`, at the point `[fᵏ(x), 0]`.
    fn scan_seam(
        &self,
        x: &Point,
        t0: f64,
        t1: f64,
        limit: Option<usize>,
    ) -> Result<Vec<Crossing>> {
        let FlowLaw::Suspension(m) = self.flow.law() else {
            unreachable!("seam sections only exist on suspension flows");
        };
        let p = TorusPoint::from_point(&self.flow.canonicalize(&x.0)?);
        let h = p.height;
        let forward = !self.flow.is_reversed();
        let sigma: i8 = if forward { 1 } else { -1 };
        // heights reached at window ends, as integers k with crossing time |k - h|
        let (first, last) = if forward {
            ((t0 + h).floor() as i64 + 1, (t1 + h).floor() as i64)
        } else {
            ((h - t0).ceil() as i64 - 1, (h - t1).ceil() as i64)
        };
        let count = if forward {
            last - first + 1
        } else {
            first - last + 1
        };
        let count = count.max(0) as usize;
        let count = limit.map_or(count, |l| count.min(l));
        let mut out = Vec::with_capacity(count);
        let mut base = if count > 0 {
            m.apply(&p.base, first)?
        } else {
            p.base.clone()
        };
        for i in 0..count as i64 {
            let k = if forward { first + i } else { first - i };
            if i > 0 {
                base = if forward {
                    m.forward(&base)?
                } else {
                    m.backward(&base)?
                };
            }
            out.push(Crossing {
                time: if forward { k as f64 - h } else { h - k as f64 },
                point: TorusPoint::new(base.clone(), 0.0).to_point(),
                direction: sigma,
            });
        }
        Ok(out)
    }

    /// `(T_Φ(x), PΦ(x))`: the first admitted crossing in `(t_min, max_horizon]`.
    pub fn first_return(&self, x: &Point) -> Result<(f64, Point)> {
        self.require_on_section(x)?;
        self.scan(x, self.tol.t_min, self.tol.max_horizon, Some(1))?
            .into_iter()
            .next()
            .map(|c| (c.time, c.point))
            .ok_or(Error::NoCrossing {
                horizon: self.tol.max_horizon,
            })
    }

    pub fn return_time(&self, x: &Point) -> Result<f64> {
        Ok(self.first_return(x)?.0)
    }

    pub fn poincare_map(&self, x: &Point) -> Result<Point> {
        Ok(self.first_return(x)?.1)
    }

    /// `(PΦ)⁻¹ = PΨ` with `Ψ` the reversed flow.
    pub fn poincare_inverse(&self, x: &Point) -> Result<Point> {
        Ok(self.reversed().first_return(x)?.1)
    }

    /// `T_Ψ(x)`, which equals `T_Φ(PΨ(x))`.
    pub fn backward_return_time(&self, x: &Point) -> Result<f64> {
        Ok(self.reversed().first_return(x)?.0)
    }

    /// First backward crossing of the orbit of `y`: `(s*, Φ(y, −s*))`, with
    /// `s* = 0` when `y` is already on the section.
    pub fn project_to_section(&self, y: &Point) -> Result<(f64, Point)> {
        let y = self.flow.canonicalize(&y.0)?;
        if self.on_section(&y)? {
            return Ok((0.0, y));
        }
        self.reversed()
            .scan(&y, 0.0, self.tol.max_horizon, Some(1))?
            .into_iter()
            .next()
            .map(|c| (c.time, c.point))
            .ok_or(Error::NoCrossing {
                horizon: self.tol.max_horizon,
            })
    }

    /// `d(PΨ(PΦ(x)), x)` and `|T_Ψ(x) − T_Φ(PΨ(x))|` over section points.
    pub fn inverse_identity_check(&self, samples: &[Point], tol: f64) -> CheckReport {
        let mut round = ReportBuilder::new(format!("PΨ ∘ PΦ = id on {}", self.name()), tol);
        let mut times = ReportBuilder::new(format!("T_Ψ = T_Φ ∘ PΨ on {}", self.name()), tol);
        for (i, x) in samples.iter().enumerate() {
            round.record(
                i,
                &x.0,
                self.poincare_map(x)
                    .and_then(|p| self.poincare_inverse(&p))
                    .and_then(|back| self.flow.distance(&back, x)),
            );
            let r = (|| {
                let back = self.poincare_inverse(x)?;
                Ok((self.backward_return_time(x)? - self.return_time(&back)?).abs())
            })();
            times.record(i, &x.0, r);
        }
        CheckReport::merge(
            format!("Poincaré inverse identities on {}", self.name()),
            &[round.finish(), times.finish()],
        )
    }

    /// Every sample must reach the section in both time directions within
    /// `horizon`, at a strictly positive time.
    pub fn recurrence_check(&self, samples: &[Point], horizon: f64) -> CheckReport {
        let mut report = ReportBuilder::new(
            format!("recurrence of {} within {horizon}", self.name()),
            0.0,
        );
        let reversed = self.reversed();
        for (i, x) in samples.iter().enumerate() {
            let r = (|| {
                let fwd = !self.scan(x, 0.0, horizon, Some(1))?.is_empty();
                let bwd = !reversed.scan(x, 0.0, horizon, Some(1))?.is_empty();
                Ok((fwd, bwd))
            })();
            match r {
                Ok((true, true)) => report.record(i, &x.0, Ok(0.0)),
                Ok((fwd, _)) => report.violation(
                    i,
                    &x.0,
                    if fwd {
                        "no backward crossing"
                    } else {
                        "no forward crossing"
                    },
                ),
                Err(e) => report.record(i, &x.0, Err(e)),
            }
        }
        report.finish()
    }

    /// `Σ_{n<k} T_Φ((PΦ)ⁿ(x))` for `k = 1..=count`.
    pub fn return_time_partial_sums(&self, x: &Point, count: usize) -> Result<Vec<f64>> {
        self.require_on_section(x)?;
        let mut out = Vec::with_capacity(count);
        let mut y = x.clone();
        let mut total = 0.0;
        for _ in 0..count {
            let (t, next) = self.first_return(&y)?;
            total += t;
            out.push(total);
            y = next;
        }
        Ok(out)
    }

    /// Sign change of `g` across `Φ(x, ±t_min/2)` and a central-difference
    /// slope above `tol_space / t_min`.
    pub fn transversality_probe(&self, x: &Point) -> Result<bool> {
        self.require_on_section(x)?;
        let delta = self.tol.t_min / 2.0;
        let ahead = self.section_value(&self.flow.eval(x, delta)?)?;
        let behind = self.section_value(&self.flow.eval(x, -delta)?)?;
        let slope = (ahead - behind).abs() / (2.0 * delta);
        Ok(ahead * behind < 0.0 && slope > self.tol.tol_space / self.tol.t_min)
    }

    /// A point of `S`: on a mapping torus `[x, 0]` for a sampled base point,
    /// otherwise a sampled phase point carried back to its last crossing.
    pub fn sample_section_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Point> {
        match self.flow.law() {
            FlowLaw::Suspension(m) => Ok(TorusPoint::new(m.sample_point(rng)?, 0.0).to_point()),
            _ => {
                let y = self.flow.sample_point(rng)?;
                Ok(self.project_to_section(&y)?.1)
            }
        }
    }
}
