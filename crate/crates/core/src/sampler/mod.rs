//! Particle kernels and the BDEC / BDLS / LEC / ULA drivers.

mod config;
mod ensemble;
mod kernels;
mod run;

pub use config::{Algorithm, SamplerConfig};
pub use ensemble::{Ensemble, Level};
pub use kernels::{
    birth_death_probability, birth_death_rates, birth_death_step, birth_death_step_scaled,
    mh_log_acceptance, mh_mixture_step, ula_step, BirthDeathStats, Noise, MAX_LANGEVIN_RETRIES,
};
pub use run::{
    run_baseline, run_bdec, NoObserver, Observer, RunOutcome, Sampler, SamplerHooks, UpdateView,
};
