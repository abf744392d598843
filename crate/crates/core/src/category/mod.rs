//! Morphisms of map systems and of flows with global sections, the functors
//! `Σ` and `P` on morphisms, and the unit and counit of `Σ ⊣ P`.

mod counit;
mod laws;
mod morphism;

pub use counit::{
    counit_inverse_morphism, counit_morphism, k_eval, k_inverse, poincare_restriction,
    poincare_system, r_integral, r_integral_inverse, tau_eval, unit_inverse_morphism, unit_l,
    unit_morphism,
};
pub use laws::{
    counit_bijectivity_check, flow_morphism_check, map_morphism_check, naturality_check_k,
    naturality_check_l, period_correspondence_check, poincare_functor_on_morphism,
    promote_to_rate_preserving, rate_composition_check, rate_preserving_check, rate_scaling_check,
    section_preservation_check, section_preservation_samples, triangle_identity_1,
    triangle_identity_2, weak_morphism_check,
};
pub use morphism::{weak_compose, MapMorphism, PointMap, TimeReparam, WeakMorphism};
