"""Exact local-to-global regularity checks for periodic Delone sets."""

from .core import (
    DeloneError,
    GramMatrix,
    InvalidSetError,
    MetricParameters,
    PeriodicSet,
    Radius,
    Site,
    enumerate_in_ball,
    gram_automorphisms,
    shortest_nonzero_sq_dist,
    sq_dist,
)
from .metrics import (
    UnsupportedDimensionError,
    covering_radius_sq,
    deepest_hole,
    metric_parameters,
    packing_radius_sq,
    verify_declared_R,
)
from .cluster import INFINITE, Cluster, cluster_group, equivalent, get_cluster, omega
from .reachability import family_membership, is_t_bonded, reachability_closure, reachable_set
from .regularity import (
    bounds_report,
    breakpoints,
    drop_sequence,
    local_criterion_scan,
    n_rho,
    oracle_is_regular,
    tower_check,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
