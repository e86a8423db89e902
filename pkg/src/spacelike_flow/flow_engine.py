"""Intrinsic mean curvature flow: right-hand sides, time stepping, trajectories.

Two forms of the flow are available on grid states:

``general``
    dg = -2 Ric + 2 h g^-1 h
    dh = lap h - Ric g^-1 h - h g^-1 Ric + 2 h g^-1 h g^-1 h - |A|^2 h

``simplified`` (equivalent whenever the Gauss equation holds)
    dg = 2 H h
    dh = lap h + 2 H h g^-1 h - |A|^2 h

Homogeneous space-form states reduce both to an ODE in ``(phi, psi)``.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import geometry_fields as gf
from . import monitors
from .spacelike_core import (
    ConstraintViolation,
    HomogeneousState,
    SpacelikeState,
    derived_scalars,
    gauss_residual,
)

__all__ = [
    "FlowAbort",
    "FlowConfig",
    "FlowTendency",
    "TrajectoryRecord",
    "tendency_general",
    "tendency_simplified",
    "tendency_homogeneous",
    "stable_timestep",
    "step",
    "checkpoint_schedule",
    "evolve",
    "scalar_evolution_residual",
]

log = logging.getLogger(__name__)

FORMS = ("general", "simplified")


class FlowAbort(RuntimeError):
    def __init__(self, reason, t, detail=""):
        self.reason = reason
        self.t = t
        super().__init__(f"flow aborted at t={t:.6g}: {reason} {detail}".strip())


@dataclass
class FlowConfig:
    """Time-stepping policy, stop conditions and checkpoint schedule.

    Checkpoints are ``checkpoint_start * 2**k`` below ``t_end``, plus
    ``t_end`` itself; the initial state is always recorded too.
    """

    t_end: float = 1.0
    form: str = "simplified"
    cfl_constant: float = 0.2
    checkpoint_start: float = 0.125
    max_steps: int = 1_000_000
    det_floor: float = 1e-10
    residual_factor: float = 10.0
    residual_offset: float = 1e-4
    residual_check_every: int = 50
    ode_dt: float = 2e-3
    keep_snapshots: bool = True

    def __post_init__(self):
        if not self.t_end > 0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if not 0 < self.cfl_constant <= 1:
            raise ValueError(f"cfl_constant must lie in (0, 1], got {self.cfl_constant}")
        if self.form not in FORMS:
            raise ValueError(f"form must be one of {FORMS}, got {self.form!r}")
        if not self.checkpoint_start > 0:
            raise ValueError("checkpoint_start must be positive")
        if self.max_steps < 1 or self.residual_check_every < 1:
            raise ValueError("max_steps and residual_check_every must be >= 1")
        if not self.ode_dt > 0:
            raise ValueError("ode_dt must be positive")

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown FlowConfig keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class FlowTendency:
    dg: np.ndarray
    dh: np.ndarray


@dataclass
class TrajectoryRecord:
    records: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    abort_reason: str | None = None
    steps: int = 0
    initial_amax2: float = 0.0
    spacing: float | None = None
    n: int = 2

    @property
    def times(self):
        return [r.t for r in self.records]

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])


def _mat(a, b):
    return np.einsum("ij...,jk...->ik...", a, b)


def _simplified_arrays(grid, g, h, ginv=None):
    if ginv is None:
        ginv = gf.metric_inverse(g)
    gamma = gf.christoffel(grid, g, ginv)
    H = np.einsum("ij...,ij...->...", ginv, h)
    hgh = gf.symmetrize(_mat(_mat(h, ginv), h))
    A2 = np.einsum("ij...,ij...->...", ginv, hgh)
    lap = gf.rough_laplacian_sym2(grid, g, h, ginv, gamma)
    dg = 2.0 * H * h
    dh = lap + 2.0 * H * hgh - A2 * h
    return gf.symmetrize(dg), gf.symmetrize(dh)


def _general_arrays(grid, g, h, ginv=None):
    if ginv is None:
        ginv = gf.metric_inverse(g)
    gamma = gf.christoffel(grid, g, ginv)
    r = gf.riemann_curvature(grid, g, ginv)
    ric = gf.ricci(r, ginv)
    hg = _mat(h, ginv)
    hgh = gf.symmetrize(_mat(hg, h))
    A2 = np.einsum("ij...,ij...->...", ginv, hgh)
    lap = gf.rough_laplacian_sym2(grid, g, h, ginv, gamma)
    ric_h = _mat(_mat(ric, ginv), h)
    dg = -2.0 * ric + 2.0 * hgh
    dh = (
        lap
        - ric_h
        - np.swapaxes(ric_h, 0, 1)
        + 2.0 * _mat(_mat(hg, hg), h)
        - A2 * h
    )
    return gf.symmetrize(dg), gf.symmetrize(dh)


_ARRAYS = {"general": _general_arrays, "simplified": _simplified_arrays}


def tendency_general(state):
    return FlowTendency(*_general_arrays(state.grid, state.g, state.h))


def tendency_simplified(state):
    return FlowTendency(*_simplified_arrays(state.grid, state.g, state.h))


def tendency_homogeneous(state, form="simplified", tol=1e-6):
    """``(dphi, dpsi)`` for ``g = phi g0``, ``h = psi g0``.

    Simplified form: ``dphi = 2 n psi^2 / phi``, ``dpsi = n psi^3 / phi^2``.
    The general form keeps the Ricci terms of the base metric explicitly,
    so it agrees with the simplified one only while ``phi = psi^2``.
    """
    if state.constraint_defect() > tol:
        raise ConstraintViolation(
            f"homogeneous state violates its constraint by {state.constraint_defect():.3e}"
        )
    return _homogeneous_rhs(state.n, state.phi, state.psi, state.base, form)


def _homogeneous_rhs(n, phi, psi, base, form):
    if form == "simplified":
        return 2.0 * n * psi**2 / phi, n * psi**3 / phi**2
    # Ric(g0) = -(n-1) g0 on the hyperbolic base, 0 on the flat one
    k = (n - 1) if base == "hyperbolic" else 0
    dphi = 2.0 * k + 2.0 * psi**2 / phi
    dpsi = 2.0 * k * psi / phi + (2.0 - n) * psi**3 / phi**2
    return dphi, dpsi


def stable_timestep(state, config):
    """Explicit step size for the parabolic part, shrinking with sup |A|^2.

    ``cfl * spacing^2 / (2n * sup lambda_max(g^-1)) / (1 + sup |A|^2)``. For
    homogeneous states there is no spatial operator and ``ode_dt / (1 + |A|^2)``
    is used instead.
    """
    if isinstance(state, HomogeneousState):
        return config.ode_dt / (1.0 + state.A2)
    ginv = state.ginv()
    lam = float(np.max(gf._eigvalsh(ginv)[-1]))
    A2 = float(np.max(derived_scalars(state, ginv, with_gradient=False).A2))
    n = state.n
    return config.cfl_constant * state.grid.spacing**2 / (2 * n * lam) / (1.0 + A2)


def _rk4(f, y, dt):
    k1 = f(y)
    k2 = f(tuple(a + 0.5 * dt * b for a, b in zip(y, k1)))
    k3 = f(tuple(a + 0.5 * dt * b for a, b in zip(y, k2)))
    k4 = f(tuple(a + dt * b for a, b in zip(y, k3)))
    return tuple(
        a + dt / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4)
        for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4)
    )


def step(state, dt, form="simplified"):
    """One classical fourth-order Runge-Kutta step of size ``dt``.

    Intermediate metrics and second fundamental forms are re-symmetrized at
    every stage; the returned state is validated (positive definite metric).
    """
    if isinstance(state, HomogeneousState):
        # stage values sit off the constraint surface by O(dt^2); no check here
        def rhs(y):
            return _homogeneous_rhs(state.n, y[0], y[1], state.base, form)

        phi, psi = _rk4(rhs, (state.phi, state.psi), dt)
        return HomogeneousState(state.n, phi, psi, state.t + dt, state.base_volume,
                                state.base_euler, state.base)

    arrays = _ARRAYS[form]
    grid = state.grid

    def rhs(y):
        g, h = gf.symmetrize(y[0]), gf.symmetrize(y[1])
        return arrays(grid, g, h)

    g, h = _rk4(rhs, (state.g, state.h), dt)
    return state.with_fields(gf.symmetrize(g), gf.symmetrize(h), state.t + dt)


def checkpoint_schedule(config):
    times = []
    t = config.checkpoint_start
    while t < config.t_end:
        times.append(t)
        t *= 2.0
    times.append(config.t_end)
    return times


def _step_integrands(state, ginv=None):
    """(int H^2 dv, (int H^n dv)^(2/n)) at one instant."""
    if isinstance(state, HomogeneousState):
        vol = state.volume
        return state.H**2 * vol, (state.H**state.n * vol) ** (2.0 / state.n)
    ds = derived_scalars(state, ginv, with_gradient=False)
    h2 = gf.integrate_density(state.grid, state.g, ds.H**2)
    mh = gf.integrate_density(state.grid, state.g, ds.H**state.n)
    return h2, max(mh, 0.0) ** (2.0 / state.n)


def evolve(state, config, sink=None):
    """Integrate the flow from ``state`` to ``config.t_end``.

    A MonitorRecord is produced for the initial state and at every
    checkpoint; steps are shortened so checkpoints are hit exactly. Abort
    conditions end the run early and are reported in ``abort_reason`` of the
    returned trajectory instead of being raised.
    """
    grid_state = isinstance(state, SpacelikeState)
    traj = TrajectoryRecord(n=state.n, spacing=state.grid.spacing if grid_state else None)
    a2_0 = derived_scalars(state, with_gradient=False).A2
    traj.initial_amax2 = float(np.max(a2_0))
    gauss0 = gauss_residual(state)[0] if grid_state else state.constraint_defect()
    ceiling = config.residual_factor * gauss0 + config.residual_offset

    acc = {"vol_rate_integral": 0.0, "mh_power_integral": 0.0}
    prev = _step_integrands(state)

    def emit(s, dt):
        rec = monitors.monitor_record(s, traj.initial_amax2, dt=dt, extra=dict(acc))
        traj.records.append(rec)
        if config.keep_snapshots:
            traj.snapshots.append(s)
        if sink is not None:
            sink(rec, s)
        return rec

    emit(state, 0.0)
    targets = checkpoint_schedule(config)
    t = state.t
    dt = 0.0
    try:
        for target in targets:
            if target <= t:
                continue
            while t < target:
                if traj.steps >= config.max_steps:
                    raise FlowAbort("max_steps", t)
                dt = stable_timestep(state, config)
                landing = t + dt >= target * (1 - 1e-12)
                if landing:
                    dt = target - t
                new = step(state, dt, config.form)
                if landing:
                    new = _with_time(new, target)
                traj.steps += 1
                cur = _step_integrands(new)
                acc["vol_rate_integral"] += 0.5 * dt * (prev[0] + cur[0])
                acc["mh_power_integral"] += 0.5 * dt * (prev[1] + cur[1])
                prev = cur
                state = new
                t = state.t
                _check_abort(state, config, ceiling, traj.steps, landing)
            emit(state, dt)
    except FlowAbort as exc:
        traj.abort_reason = exc.reason
        log.warning("%s", exc)
    except (gf.NotPositiveDefinite, gf.NegativeDeterminant) as exc:
        traj.abort_reason = "not_positive_definite"
        log.warning("flow aborted at t=%.6g: %s", t, exc)
    return traj


def _with_time(state, t):
    if isinstance(state, HomogeneousState):
        return HomogeneousState(state.n, state.phi, state.psi, t, state.base_volume,
                                state.base_euler, state.base)
    return state.with_fields(state.g, state.h, t)


def _check_abort(state, config, ceiling, steps, force):
    if isinstance(state, HomogeneousState):
        if not (math.isfinite(state.phi) and math.isfinite(state.psi)):
            raise FlowAbort("non_finite", state.t)
        if state.constraint_defect() > ceiling:
            raise FlowAbort("residual_blowup", state.t, f"defect {state.constraint_defect():.3e}")
        return
    det = gf.metric_determinant(state.g)
    if float(det.min()) < config.det_floor:
        raise FlowAbort("det_floor", state.t, f"min det g {float(det.min()):.3e}")
    if force or steps % config.residual_check_every == 0:
        res = gauss_residual(state)[0]
        if not res <= ceiling:
            raise FlowAbort("residual_blowup", state.t, f"gauss residual {res:.3e} > {ceiling:.3e}")


def _homogeneous_h_a2(state):
    return state.H, state.A2


def scalar_evolution_residual(state, dt):
    """Residuals of the scalar evolution equations for H and |A|^2.

    Compares finite-difference time derivatives against
    ``lap H - H |A|^2`` and ``lap |A|^2 - 2 |grad A|^2 - 2 |A|^4``.

    Grid states take one step of the simplified flow and compare the forward
    difference with the trapezoidal average of the right-hand sides, leaving
    O(dt^2) + O(spacing^2). Homogeneous states use a five-point centred
    difference of RK4 sub-steps (right-hand sides have no spatial terms).
    """
    if isinstance(state, HomogeneousState):
        vals = {}
        for k in (-2, -1, 1, 2):
            s = state
            for _ in range(abs(k)):
                s = step(s, math.copysign(dt, k))
            vals[k] = _homogeneous_h_a2(s)
        dH = (-vals[2][0] + 8 * vals[1][0] - 8 * vals[-1][0] + vals[-2][0]) / (12 * dt)
        dA2 = (-vals[2][1] + 8 * vals[1][1] - 8 * vals[-1][1] + vals[-2][1]) / (12 * dt)
        H, A2 = _homogeneous_h_a2(state)
        return abs(dH + H * A2), abs(dA2 + 2 * A2**2)

    def fields_and_rhs(s):
        ginv = s.ginv()
        gamma = gf.christoffel(s.grid, s.g, ginv)
        ds = derived_scalars(s, ginv, gamma)
        rhs_h = gf.scalar_laplacian(s.grid, s.g, ds.H, ginv, gamma) - ds.H * ds.A2
        rhs_a = (gf.scalar_laplacian(s.grid, s.g, ds.A2, ginv, gamma)
                 - 2 * ds.gradA2 - 2 * ds.A2**2)
        return ds.H, ds.A2, rhs_h, rhs_a

    H0, A0, rh0, ra0 = fields_and_rhs(state)
    H1, A1, rh1, ra1 = fields_and_rhs(step(state, dt, "simplified"))
    res_h = np.max(np.abs((H1 - H0) / dt - 0.5 * (rh0 + rh1)))
    res_a = np.max(np.abs((A1 - A0) / dt - 0.5 * (ra0 + ra1)))
    return float(res_h), float(res_a)
