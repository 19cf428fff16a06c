"""Gibbs samplers for Bayesian probit regression, coupling-based mixing-time
diagnostics, and closed-form convergence bounds."""

__version__ = "0.1.0"

from .bounds import (
    BoundReport,
    bound_report,
    cg_mixing_bound,
    cg_refined_bound,
    da_mixing_bound,
    intercept_design_spectral_cap,
    intercept_posterior_moments,
    lower_bound_intercept,
    prior_start_kl_log_bound,
    random_design_limits,
    recipe_bound,
    var_beta1_quadrature,
)
from .couplings import (
    CoupledPair,
    CouplingConfig,
    MeetingRecord,
    coupled_cg_sweep,
    coupled_da_marginal_step,
    coupled_da_mod_step,
    coupled_da_step,
    crn_coupling_1d,
    default_coupling_config,
    maximal_coupling_1d,
    reflection_maximal_gaussian,
    sample_meeting_time,
    sample_meeting_times,
)
from .datagen import DesignScheme, ResponseScheme, gen_design, gen_responses, standardize
from .diagnostics import TVBoundCurve, tv_bound_curve, tv_mixing_time_upper
from .model import (
    GPrior,
    GeneralSPD,
    Isotropic,
    NotPositiveDefiniteError,
    PosteriorCache,
    PriorSpec,
    ProbitModel,
    Recipe,
    ScaledIsotropic,
    build_cache,
    condition_number_bound,
    log_posterior_beta,
    zero_mean_prior,
)
from .samplers import (
    ChainState,
    RwmConfig,
    cg_site_step,
    cg_sweep,
    da_marginal_step,
    da_mod_step,
    da_step,
    run_chain,
    sample_prior_start,
)
from .special import (
    HalfLine,
    TruncNormParams,
    h,
    h_prime,
    h_second,
    std_normal_logcdf,
    truncnorm_invcdf,
    truncnorm_logpdf,
    truncnorm_sample,
)
