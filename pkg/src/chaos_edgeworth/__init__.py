"""Edgeworth correcting measures on Wiener chaos.

Numerical library + CLI: Hermite spectral calculus, Ornstein--Uhlenbeck
operator identities, chaos simulators (fractional-Gaussian Hermite
variations, GOE trace projections, homogeneous sums), Hermite-moment
estimation with standard errors, signed Edgeworth densities, and
KDE-based total-variation diagnostics.
"""

__version__ = "0.1.0"

from .hermite import (  # noqa: F401
    HermiteSeries,
    QuadratureRule,
    coefficients_of,
    gauss_hermite_rule,
    hermite_eval_all,
    hermite_norm_sq,
    hermite_rank,
    project_at_least,
    series_derivative,
)
from .ou import (  # noqa: F401
    SteinSolution,
    resolvent_apply,
    s_operator,
    semigroup_apply_spectral,
    stein_solve,
    t_operator,
)
from .simulate import (  # noqa: F401
    FbmHermiteModel,
    GoeTraceModel,
    HomogeneousSum,
    SampleBatch,
    complete_graph_sum,
    lindeberg_discrepancy,
    sample_fbm_hermite,
    sample_goe_trace,
    sample_homogeneous,
)
from .edgeworth import (  # noqa: F401
    EdgeworthMeasure,
    MomentVector,
    build_measure,
    density,
    estimate_moments,
    inequality_report,
    measure_expectation,
    synthetic_measure,
    var_gamma,
)
from .diagnostics import (  # noqa: F401
    DensityGrid,
    density_grid,
    kde,
    rate_regression,
    stein_discrepancy_check,
    tv_signed,
)
