"""Intrinsic mean curvature flow on space-like manifolds, with monitors for
its monotone quantities, decay bounds and the Gauss-Bonnet-Chern formula."""

from .geometry_fields import GridChart, NegativeDeterminant, NotPositiveDefinite
from .spacelike_core import (
    ConstraintViolation,
    HomogeneousState,
    NotSpacelike,
    SpacelikeState,
    euler_characteristic,
    flat_torus,
    from_graph,
    homogeneous_flat,
    homogeneous_hyperbolic,
)
from .flow_engine import FlowConfig, TrajectoryRecord, evolve, step
from .monitors import CSV_COLUMNS, MonitorRecord, evaluate_checks

__version__ = "0.1.0"

__all__ = [
    "GridChart", "NegativeDeterminant", "NotPositiveDefinite",
    "ConstraintViolation", "HomogeneousState", "NotSpacelike", "SpacelikeState",
    "euler_characteristic", "flat_torus", "from_graph", "homogeneous_flat",
    "homogeneous_hyperbolic", "FlowConfig", "TrajectoryRecord", "evolve", "step",
    "CSV_COLUMNS", "MonitorRecord", "evaluate_checks",
]
