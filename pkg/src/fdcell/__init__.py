"""Performance toolkit for large-scale full-duplex cellular networks with
sectorized directional antennas and passive loop-interference suppression.

Two independent engines compute the same metrics and cross-validate each
other: `fdcell.analytic` evaluates the closed-form/integral expressions by
adaptive quadrature, `fdcell.montecarlo` simulates the underlying marked
point-process model.  `fdcell.cli` drives both in batch.
"""

from .analytic import (
    MetricEstimate,
    OutageQuery,
    SumRate,
    asymptotic_outage_downlink,
    asymptotic_outage_uplink,
    evaluate_outage,
    laplace_ib_downlink,
    laplace_ib_uplink,
    laplace_iu_downlink,
    laplace_iu_uplink,
    laplace_li_uplink,
    outage_downlink,
    outage_uplink,
    rate_threshold,
    sum_rate,
)
from .model import (
    AntennaPattern,
    LiAngleModel,
    NetworkParams,
    ThinningTable,
    antenna_gains,
    db_to_linear,
    li_angle_model,
    linear_to_db,
    passive_suppression_fraction,
    thinning_table,
)
from .montecarlo import (
    SimConfig,
    TrialFixture,
    default_window_radius,
    downlink_sinr_trial,
    draw_li_term,
    estimate_outage,
    estimate_sum_rate,
    outage_from_samples,
    sample_nearest_distance,
    sample_ppp,
    sinr_samples,
    trial_rng,
    two_node_sinr_trial,
    uplink_sinr_trial,
)
from .numerics import (
    QuadratureError,
    QuadratureSpec,
    integrate_finite,
    integrate_semi_infinite,
)

__version__ = "0.1.0"
