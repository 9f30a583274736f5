"""Optimal error intervals for scalar properties of quantum states.

The package estimates a property of a quantum state directly from measured
click counts: it samples the physical probability space, iterates a
marginal-content computation until the property likelihood is reliable over
its whole range, and reports bounded-likelihood intervals (smallest
credible intervals, maximum-likelihood intervals, the plausible interval)
around the maximum-likelihood point estimate.
"""

from .intervals import (
    DiagnosticError,
    GaussianAsymptotics,
    IntervalFamily,
    IntervalUnion,
    PointEstimates,
    PropertyPriorSpec,
    bli,
    gaussian_asymptotics,
    interval_for_target,
    ispe_range,
    plausible_interval,
    point_estimators,
    size_credibility,
)
from .marginal import (
    BetaFitPlan,
    ContentCurve,
    FitError,
    FitModel,
    LikelihoodCurve,
    ReferenceDensity,
    ReferenceResult,
    empirical_content,
    f_likelihood,
    fit_content,
    iterate_reference,
    likelihood_from_fits,
    posterior_content,
)
from .pipeline import ConfigError, PipelineConfig, PipelineResult, config_hash, run_pipeline
from .properties import (
    PROPERTIES,
    PropertyFn,
    bloch_fidelity,
    chsh_fixed,
    chsh_optimized,
    fidelity_qubit,
    property_by_name,
    purity_qubit,
)
from .sampling import (
    DensitySpec,
    SampleSet,
    SamplerSettings,
    bootstrap_unweight,
    load_samples,
    sample,
    save_samples,
)
from .statespace import (
    Counts,
    DensityMatrix,
    PhysicalityResult,
    Pom,
    Scheme,
    TAT,
    TETRAHEDRON,
    UnphysicalInputError,
    born_probabilities,
    log_point_likelihood,
    physicality,
    pom_from_json,
    pom_to_json,
    q_interval,
    reconstruct_qubit,
    simulate_clicks,
    tat_pom,
    tetrahedron_pom,
    unconstrained_scheme,
)

__version__ = "0.1.0"
