//! Seeded sample generators for the law checks.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::section::GlobalSectionSystem;
use crate::space::Point;
use crate::systems::{FlowSystem, MapSystem};

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn map_points(m: &MapSystem, n: usize, seed: u64) -> Result<Vec<Point>> {
    let mut r = rng(seed);
    (0..n).map(|_| m.sample_point(&mut r)).collect()
}

pub fn flow_points(fl: &FlowSystem, n: usize, seed: u64) -> Result<Vec<Point>> {
    let mut r = rng(seed);
    (0..n).map(|_| fl.sample_point(&mut r)).collect()
}

pub fn section_points(sys: &GlobalSectionSystem, n: usize, seed: u64) -> Result<Vec<Point>> {
    let mut r = rng(seed);
    (0..n).map(|_| sys.sample_section_point(&mut r)).collect()
}

/// `(x, t, s)` with `x` in the phase space and times uniform in `[-span, span]`.
pub fn flow_law_samples(
    fl: &FlowSystem,
    n: usize,
    span: f64,
    seed: u64,
) -> Result<Vec<(Point, f64, f64)>> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| {
            Ok((
                fl.sample_point(&mut r)?,
                r.gen_range(-span..=span),
                r.gen_range(-span..=span),
            ))
        })
        .collect()
}

/// `(x, t)` with `x` in the phase space and `t` uniform in `[-span, span]`.
pub fn timed_points(fl: &FlowSystem, n: usize, span: f64, seed: u64) -> Result<Vec<(Point, f64)>> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| Ok((fl.sample_point(&mut r)?, r.gen_range(-span..=span))))
        .collect()
}

/// `(x, t, s)` with `x` on the section, `t ∈ [0, 1)` and `s ∈ [-span, span]`.
pub fn torus_samples(
    sys: &GlobalSectionSystem,
    n: usize,
    span: f64,
    seed: u64,
) -> Result<Vec<(Point, f64, f64)>> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| {
            Ok((
                sys.sample_section_point(&mut r)?,
                r.gen_range(0.0..1.0),
                r.gen_range(-span..=span),
            ))
        })
        .collect()
}

/// `(x, t, s)` with `x` in the base of a map system, `t ∈ [0, 1)`, `s ∈ [-span, span]`.
pub fn map_torus_samples(
    m: &MapSystem,
    n: usize,
    span: f64,
    seed: u64,
) -> Result<Vec<(Point, f64, f64)>> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| {
            Ok((
                m.sample_point(&mut r)?,
                r.gen_range(0.0..1.0),
                r.gen_range(-span..=span),
            ))
        })
        .collect()
}
