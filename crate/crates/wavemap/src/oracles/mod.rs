//! Closed-form solutions and counterexample constructions.

mod counterexample;
mod exact;
mod nonscattering;
mod profile;

pub use counterexample::{
    counterexample_norms, critical_counterexample, g_hat, integrand_exponent, power_sweep, proof_integral, sinc,
    GrowthRow, GrowthTable, DEFAULT_EPSILON, LOW_CUT,
};
pub use exact::{
    free_residual, geodesic_family, geodesic_wave_map, nirenberg_inverse, nirenberg_residual, nirenberg_transform,
    riccati_blowup, riccati_closed_form, riccati_guard, s1_data, s1_exact, GuardTrip, RiccatiReport,
};
pub use nonscattering::{
    log_sweep, nonscattering_data, nonscattering_profile, nonscattering_witness, NonscatteringWitness,
    WitnessOptions, WitnessRow, DEFECT_FLOOR,
};
pub(crate) use profile::catmull_rom;
pub use profile::{log_bracket, ScalarProfile};
