//! Closed-form theory of the parametric reset.

pub mod effective;
pub mod fit;
pub mod sideband;
pub mod thermal;

pub use effective::{
    coupling_for_first_minimum, effective_eigenvalues, evolve_effective, first_minimum_time, pe_closed_form,
    reset_rate, DampingRegime, EffectiveModel, SingleExcitation,
};
pub use fit::{
    fit_curve, fit_exponential, fit_ramsey, fit_reset_trace, linear_trend, ramsey_beating, spam_rescale,
    ExponentialFit, FitReport, RamseyParams, ResetTraceFit, SlopeEstimate,
};
pub use sideband::{
    calibrate_resonance, resonance_frequency, shifted_sideband_detuning, sideband_coupling, sideband_coupling_with,
    two_tone_couplings, CouplingConvention, TwoToneCouplings,
};
pub use thermal::{
    dispersive_shift, rate_model_steady_state, thermal_dephasing, thermal_photons_for_t2, three_level_decay,
    CascadeRates, RateModel,
};
