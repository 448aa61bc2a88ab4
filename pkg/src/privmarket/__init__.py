"""Privacy-preserving data-collection market over a social learning graph.

Library layout:

* `model`     - market parameters, cost functions, signal sampling
* `graph`     - social graph generation, ingestion, degree statistics
* `strategy`  - equilibrium reporting strategies and privacy levels
* `mechanism` - genie-aided and peer-prediction payments
* `analytics` - closed-form moments, accuracy and payment bounds
* `sim`       - Monte Carlo engine and sweeps
* `config`/`cli` - run configuration and the command-line front end
"""

__version__ = "0.1.0"

from .model import ModelParams, CostFunction, quadratic_cost, theta1  # noqa: F401
from .graph import Graph, DegreeDistribution  # noqa: F401
from .strategy import (  # noqa: F401
    ActionDistribution,
    StrategyTable,
    bar_A,
    build_mv_strategy,
    equal_priors_tau,
    ml_estimate,
    mv_strategy_table,
    nd_baseline_strategy,
    nd_baseline_table,
    privacy_level,
    solve_xi,
    upsilon,
)
from .mechanism import (  # noqa: F401
    NON_PARTICIPATION,
    MechanismConfig,
    design_Z,
    design_Z0_Z1,
    genie_payment,
    majority_excluding,
    peer_payment,
)
from .analytics import (  # noqa: F401
    MomentSummary,
    ReportLaw,
    beta_accuracy,
    bhattacharyya,
    binom_pmf,
    binom_range,
    expected_total_payment,
    mv_moments_equal_priors,
    nd_moments,
    nu_values,
    payment_bound,
    std_normal_cdf,
)
from .sim import (  # noqa: F401
    SimResult,
    TrialResult,
    map_estimate,
    normality_probe,
    run_experiment,
    run_trial,
    sweep,
)
