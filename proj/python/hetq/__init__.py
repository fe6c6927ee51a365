"""Exact steady-state analysis of M|M|n queues with heterogeneous servers.

Customers are routed uniformly at random among idle servers (they cannot
tell servers apart). The closed form gives every stationary quantity
exactly; ``oracle_metrics`` (truncated-chain linear solve) and ``simulate``
(discrete-event) provide two independent cross-checks.

>>> import hetq
>>> cfg = hetq.SystemConfig(1.0, [2.0, 1.0])
>>> rep = hetq.metrics(hetq.solve(cfg))
>>> rep.busy            # slower server is busier...
[0.29411764705882354, 0.4117647058823529]
>>> rep.effective_rate  # ...but the faster one completes more work
[0.5882352941176471, 0.4117647058823529]
"""

from ._core import (
    BoundaryState,
    CoverageReport,
    Estimate,
    MetricsReport,
    PairVerdict,
    ReferenceValues,
    SimConfig,
    SimEstimates,
    StationaryDistribution,
    SystemConfig,
    balance_residual,
    boundary_state_prob,
    busy_idle_probability,
    busy_probability,
    closed_form_references,
    default_truncation,
    effective_rate,
    metrics,
    oracle_metrics,
    prob_all_busy,
    replicate,
    replication_seed,
    report_entries,
    simulate,
    solve,
    solve_in_domain,
    tail_prob,
    theorem_check,
    validate,
)

__all__ = [
    "BoundaryState",
    "CoverageReport",
    "Estimate",
    "MetricsReport",
    "PairVerdict",
    "ReferenceValues",
    "SimConfig",
    "SimEstimates",
    "StationaryDistribution",
    "SystemConfig",
    "balance_residual",
    "boundary_state_prob",
    "busy_idle_probability",
    "busy_probability",
    "closed_form_references",
    "default_truncation",
    "effective_rate",
    "metrics",
    "oracle_metrics",
    "prob_all_busy",
    "replicate",
    "replication_seed",
    "report_entries",
    "simulate",
    "solve",
    "solve_in_domain",
    "tail_prob",
    "theorem_check",
    "validate",
]

__version__ = "1.0.0"
