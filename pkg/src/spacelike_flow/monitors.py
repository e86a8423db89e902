"""Functionals, inequalities and certificates evaluated on states and trajectories.

``monitor_record`` turns a state into one row of measurements; the
``*_check`` functions and ``evaluate_checks`` turn a trajectory of rows into
PASS/FAIL verdicts. Every verdict carries the raw measured value and the
allowance it was compared against, so tolerances can be re-examined later
without re-running the flow.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import geometry_fields as gf
from .spacelike_core import (
    HomogeneousState,
    derived_scalars,
    codazzi_residual,
    euler_characteristic,
    gauss_residual,
    gbc_density_field,
    principal_curvatures,
    sectional_bound,
    sphere_volume,
)

__all__ = [
    "CSV_COLUMNS",
    "MonitorRecord",
    "CertificateEntry",
    "Verdict",
    "monitor_record",
    "monotone_functionals",
    "pinching_integral",
    "amax_bound",
    "amax_bound_check",
    "volume_growth_check",
    "gbc_approx_chain",
    "pointwise_det_inequality",
    "corollary_energy_gap",
    "minvol_certificate",
    "certificate_verdict",
    "evaluate_checks",
    "CHECK_NAMES",
]

CSV_COLUMNS = (
    "t", "dt", "vol", "MH", "MA", "pinch", "amax2", "bound24",
    "gauss_res", "codazzi_res", "chi", "gbc_gap", "cs_bound", "cert",
)


@dataclass
class MonitorRecord:
    t: float
    dt: float
    vol: float
    MH: float
    MA: float
    pinch: float
    amax2: float
    bound24: float
    gauss_res: float
    codazzi_res: float
    chi: float
    gbc_gap: float
    cs_bound: float
    cert: float
    n: int = 2
    # values needed by the checks that have no CSV column of their own
    extra: dict = field(default_factory=dict)

    def row(self):
        return [getattr(self, c) for c in CSV_COLUMNS]

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class CertificateEntry:
    t_k: float
    sup_K: float
    rescaled_volume: float


@dataclass
class Verdict:
    passed: bool
    value: float
    allowance: float
    detail: dict = field(default_factory=dict)

    @property
    def status(self):
        return "PASS" if self.passed else "FAIL"

    def to_dict(self):
        return {"status": self.status, "value": self.value, "allowance": self.allowance,
                **({"detail": self.detail} if self.detail else {})}


def amax_bound(t, amax2_0):
    """Upper bound ``1 / (2t + 1/|A|^2_max(0))``; identically 0 when |A|^2_max(0) = 0."""
    if amax2_0 <= 0:
        return 0.0
    return 1.0 / (2.0 * t + 1.0 / amax2_0)


def monotone_functionals(state):
    """``(int H^n dv, int |A|^n dv)``."""
    if isinstance(state, HomogeneousState):
        return state.H**state.n * state.volume, state.A2 ** (state.n / 2) * state.volume
    ds = derived_scalars(state, with_gradient=False)
    n = state.n
    return (gf.integrate_density(state.grid, state.g, ds.H**n),
            gf.integrate_density(state.grid, state.g, ds.A2 ** (n / 2)))


def pinching_integral(state):
    """``int |A|^n |h - (H/n) g|^2 dv``."""
    if isinstance(state, HomogeneousState):
        return 0.0
    ds = derived_scalars(state, with_gradient=False)
    return gf.integrate_density(state.grid, state.g, ds.A2 ** (state.n / 2) * ds.traceless2)


def gbc_approx_chain(state, rtol=1e-9):
    """Gap ``int |det h/det g - (H/n)^n| dv`` and its Cauchy-Schwarz bound.

    Returns ``(gap, cs_bound, holds)``.
    """
    if isinstance(state, HomogeneousState):
        # umbilic: det h / det g = (psi/phi)^n = (H/n)^n exactly
        return 0.0, 0.0, True
    g, n, grid = state.g, state.n, state.grid
    ds = derived_scalars(state, with_gradient=False)
    gap = gf.integrate_density(grid, g, np.abs(gbc_density_field(state) - (ds.H / n) ** n))
    pinch = gf.integrate_density(grid, g, ds.A2 ** (n / 2) * ds.traceless2)
    a_nm2 = gf.integrate_density(grid, g, ds.A2 ** ((n - 2) / 2))
    cs = n * np.sqrt(pinch) * np.sqrt(a_nm2)
    return gap, float(cs), bool(gap <= cs + rtol * (1.0 + cs))


def pointwise_det_inequality(eigenvalues):
    """Check ``|prod k - (H/n)^n| <= n |A|^(n-1) |k - H/n|`` for eigenvalue vectors.

    ``eigenvalues`` has shape ``(..., n)``; returns ``(lhs, rhs, holds)`` with
    the leading shape.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    n = lam.shape[-1]
    mean = lam.mean(axis=-1)
    lhs = np.abs(np.prod(lam, axis=-1) - mean**n)
    norm = np.sqrt(np.sum(lam**2, axis=-1))
    dev = np.sqrt(np.sum((lam - mean[..., None]) ** 2, axis=-1))
    rhs = n * norm ** (n - 1) * dev
    # floating-point slack for the umbilic equality case
    slack = 64 * np.finfo(float).eps * (np.abs(np.prod(lam, axis=-1)) + np.abs(mean) ** n)
    return lhs, rhs, lhs <= rhs + slack


def corollary_energy_gap(state, chi):
    """``(1/vol S^n) int |H|^n dv - (-1)^(n/2) (n^n / 2) chi``; zero for hyperbolic or flat forms."""
    n = state.n
    mh = monotone_functionals(state)[0]
    return mh / sphere_volume(n) - (-1) ** (n // 2) * n**n / 2 * chi


def monitor_record(state, initial_amax2, dt=0.0, extra=None):
    """Evaluate every functional on one state."""
    n = state.n
    extra = dict(extra or {})
    chi = euler_characteristic(state)
    if isinstance(state, HomogeneousState):
        vol = state.volume
        mh, ma = monotone_functionals(state)
        pinch, gap, cs = 0.0, 0.0, 0.0
        amax2 = state.A2
        gres, cres = state.constraint_defect(), 0.0
        sup_k = sectional_bound(state)
        extra.update(int_A_nm2=state.A2 ** ((n - 2) / 2) * vol, det_ineq_excess=0.0)
    else:
        grid, g = state.grid, state.g
        ginv = state.ginv()
        gamma = gf.christoffel(grid, g, ginv)
        ds = derived_scalars(state, ginv, with_gradient=False)
        integ = lambda f: gf.integrate_density(grid, g, f)  # noqa: E731
        vol = integ(1.0)
        mh = integ(ds.H**n)
        ma = integ(ds.A2 ** (n / 2))
        pinch = integ(ds.A2 ** (n / 2) * ds.traceless2)
        a_nm2 = integ(ds.A2 ** ((n - 2) / 2))
        gap = integ(np.abs(gbc_density_field(state) - (ds.H / n) ** n))
        cs = float(n * np.sqrt(pinch) * np.sqrt(a_nm2))
        amax2 = float(ds.A2.max())
        gres = gauss_residual(state, gf.riemann_curvature(grid, g, ginv))[0]
        cres = codazzi_residual(state, gf.covariant_gradient_sym2(grid, g, state.h, ginv, gamma))
        sup_k = sectional_bound(state)
        lhs, rhs, _ = pointwise_det_inequality(principal_curvatures(g, state.h))
        extra.update(int_A_nm2=a_nm2, det_ineq_excess=float(np.max(lhs - rhs)))
    extra["sup_K"] = sup_k
    return MonitorRecord(
        t=state.t, dt=dt, vol=vol, MH=mh, MA=ma, pinch=pinch, amax2=amax2,
        bound24=amax_bound(state.t, initial_amax2), gauss_res=gres, codazzi_res=cres,
        chi=chi, gbc_gap=gap, cs_bound=cs, cert=sup_k ** (n / 2) * vol, n=n, extra=extra,
    )


def amax_bound_check(records, allowance=1e-6):
    """Largest excess of sup |A|^2 over the decay bound across records."""
    violation = max(r.amax2 - r.bound24 for r in records)
    return Verdict(violation <= allowance, float(violation), allowance)


def _monotone(values, atol=1e-6, rtol=1e-4):
    worst = -np.inf
    for a, b in zip(values[:-1], values[1:]):
        worst = max(worst, b - a - (atol + rtol * abs(a)))
    increase = max((b - a for a, b in zip(values[:-1], values[1:])), default=0.0)
    return Verdict(bool(worst <= 0), float(increase), atol, {"rtol": rtol})


def volume_growth_check(records, tol=1e-4):
    """Volume growth against int H^2 dv and the integrated Hoelder bound.

    (a) Vol(t) - Vol(0) against the time integral of int H^2 dv accumulated
        during the flow;
    (b) Vol(t)^(2/n) - Vol(0)^(2/n) <= (2/n) int_0^t (int H^n dv)^(2/n) ds;
    (c) reports Vol/(1+t)^(n/2) against (2/n)^(n/2) int H^n dv at the end.
    """
    n = records[0].n
    v0 = records[0].vol
    rate_err = 0.0
    slack = np.inf
    for r in records[1:]:
        rate = r.extra.get("vol_rate_integral")
        if rate is not None:
            rate_err = max(rate_err, abs(r.vol - v0 - rate) / (1.0 + abs(r.vol)))
        mhp = r.extra.get("mh_power_integral")
        if mhp is not None:
            slack = min(slack, (2.0 / n) * mhp - (r.vol ** (2 / n) - v0 ** (2 / n)))
    if not np.isfinite(slack):
        slack = 0.0
    last = records[-1]
    ratio = last.vol / (1 + last.t) ** (n / 2)
    limit = (2.0 / n) ** (n / 2) * last.MH
    passed = rate_err <= tol and slack >= -tol
    return Verdict(bool(passed), float(-slack), tol, {
        "rate_rel_error": float(rate_err),
        "growth_ratio_final": float(ratio),
        "growth_limit_estimate": float(limit),
    })


def a_nm2_growth_check(records):
    """``int |A|^(n-2) dv / (1+t)`` against an a-priori constant from the initial data.

    The constant is ``MA(0)^((n-2)/n) (Vol(0)^(2/n) + (2/n) MH(0)^(2/n))``,
    obtained from the volume bound and Hoelder's inequality.
    """
    n = records[0].n
    first = records[0]
    c1 = first.MA ** ((n - 2) / n) * (first.vol ** (2 / n) + (2 / n) * first.MH ** (2 / n))
    # for n = 2 the integrand is 1; otherwise a missing value makes the check fail
    ratios = [r.extra.get("int_A_nm2", r.vol if n == 2 else np.nan) / (1 + r.t) for r in records]
    witness = float(np.max(ratios))
    return Verdict(bool(np.isfinite(witness) and witness <= c1 * (1 + 1e-9)), float(witness), float(c1))


def minvol_certificate(trajectory):
    """Rescaled volumes ``sup|K|^(n/2) Vol`` at the checkpoints.

    Multiplying the metric by sup|K| gives |K| <= 1, so a sequence of these
    values tending to zero certifies vanishing minimal volume.
    """
    entries = []
    if trajectory.snapshots:
        pairs = zip(trajectory.records, trajectory.snapshots)
        for rec, snap in pairs:
            k = sectional_bound(snap)
            entries.append(CertificateEntry(rec.t, k, k ** (rec.n / 2) * rec.vol))
    else:
        for rec in trajectory.records:
            k = rec.extra.get("sup_K", (rec.cert / rec.vol) ** (2 / rec.n))
            entries.append(CertificateEntry(rec.t, k, rec.cert))
    if not entries:
        raise ValueError("empty trajectory")
    return entries


def certificate_verdict(entries, collapse_ratio=0.2, stable_rtol=1e-6):
    """Classify a certificate sequence as ``collapse``, ``obstructed`` or ``inconclusive``."""
    later = [e for e in entries if e.t_k > 0] or entries
    first, last = later[0].rescaled_volume, later[-1].rescaled_volume
    if first == 0 or last < collapse_ratio * first:
        return "collapse"
    tail = [e.rescaled_volume for e in later[-2:]]
    if last > 0 and abs(tail[-1] - tail[0]) <= stable_rtol * abs(tail[0]):
        return "obstructed"
    return "inconclusive"


CHECK_NAMES = (
    "monotone_H",
    "monotone_A",
    "pinching_decay",
    "amax_bound",
    "volume_growth",
    "a_nm2_growth",
    "gbc_chain",
    "chi_limit",
    "pointwise_det_inequality",
    "corollary_energy",
    "minvol_certificate",
    "constraint_gauss",
    "constraint_codazzi",
    "euler_constant",
)


def evaluate_checks(records, spacing=None, entries=None):
    """All trajectory verdicts, keyed by CHECK_NAMES.

    ``spacing`` is the grid spacing (None for homogeneous flows) and sets the
    discretization allowances; ``entries`` defaults to the certificate values
    stored in the records.
    """
    if not records:
        raise ValueError("no records")
    grid = spacing is not None
    h2 = spacing**2 if grid else 0.0
    n = records[0].n
    out = {}
    out["monotone_H"] = _monotone([r.MH for r in records])
    out["monotone_A"] = _monotone([r.MA for r in records])

    later = [r for r in records if r.t > 0]
    if later:
        first, last = later[0], later[-1]
        tp0, tp1 = first.t * first.pinch, last.t * last.pinch
        out["pinching_decay"] = Verdict(bool(tp1 <= tp0 + 1e-12), float(tp1), float(tp0),
                                        {"t_first": first.t, "t_last": last.t})
    else:
        out["pinching_decay"] = Verdict(True, 0.0, 0.0)

    out["amax_bound"] = amax_bound_check(records, 1e-6 + h2)
    out["volume_growth"] = volume_growth_check(records)
    out["a_nm2_growth"] = a_nm2_growth_check(records)

    chain = max(r.gbc_gap - r.cs_bound - 1e-9 * (1 + r.cs_bound) for r in records)
    out["gbc_chain"] = Verdict(bool(chain <= 0), float(max(r.gbc_gap - r.cs_bound for r in records)),
                               1e-9)

    pref = 2.0 / sphere_volume(n)
    limit_excess = max(
        abs((-1) ** (n // 2) * r.chi - pref * r.MH / n**n) - pref * r.gbc_gap for r in records
    )
    out["chi_limit"] = Verdict(bool(limit_excess <= 1e-9), float(limit_excess), 1e-9)

    det_excess = max(r.extra.get("det_ineq_excess", 0.0) for r in records)
    out["pointwise_det_inequality"] = Verdict(bool(det_excess <= 1e-12), float(det_excess), 1e-12)

    cor = [r.MH / sphere_volume(n) - (-1) ** (n // 2) * n**n / 2 * r.chi for r in records]
    out["corollary_energy"] = Verdict(bool(min(cor) >= -1e-9), float(min(cor)), 1e-9)

    if entries is None:
        entries = [CertificateEntry(r.t, r.extra.get("sup_K", 0.0), r.cert) for r in records]
    kind = certificate_verdict(entries)
    chi0 = records[0].chi
    consistent = (kind == "collapse" and abs(chi0) < 0.5) or (kind == "obstructed" and abs(chi0) >= 0.5)
    later_e = [e for e in entries if e.t_k > 0] or entries
    out["minvol_certificate"] = Verdict(
        bool(consistent), float(later_e[-1].rescaled_volume), float(later_e[0].rescaled_volume),
        {"classification": kind, "chi": chi0},
    )

    g0, c0 = records[0].gauss_res, records[0].codazzi_res
    allow_g = 3 * g0 + (5 * h2 if grid else 1e-12)
    allow_c = 3 * c0 + (5 * h2 if grid else 1e-12)
    out["constraint_gauss"] = Verdict(bool(max(r.gauss_res for r in records) <= allow_g),
                                      float(max(r.gauss_res for r in records)), float(allow_g))
    out["constraint_codazzi"] = Verdict(bool(max(r.codazzi_res for r in records) <= allow_c),
                                        float(max(r.codazzi_res for r in records)), float(allow_c))

    drift = max(abs(r.chi - records[0].chi) for r in records)
    tol = 1e-3 if grid else 1e-9
    out["euler_constant"] = Verdict(bool(drift <= tol), float(drift), tol)
    return out
