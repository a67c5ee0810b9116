"""Solution-concept certificates for sampled BV curves.

Given a curve with jump records, these checks evaluate the defining
conditions of the three solution concepts with quantified residuals:

- ``check_energetic``: global stability gap at every sample time plus the
  energy balance with the plain total variation;
- ``check_bv``: local stability (slope <= 1) off jumps, the balance with
  the viscous-cost augmented variation, the per-jump identity
  ``E(t,u-) - E(t,u+) = v(t,u-,u+)``, a localized energy inequality on a
  dyadic interval family, and a chain-rule sampling smoke test on
  continuous curves;
- ``check_ve``: D-stability residual off jumps, the balance with the
  c_mu-augmented variation, and the per-jump identities with c_mu.

Every reported number is computed in a fixed sequential order so reports
are bitwise reproducible for identical inputs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .bvcurve import BVCurve, JumpCostFunction
from .jumpcost import ve_cost, viscous_cost
from .models import (EnergyModel, StateSpace, d_stability_gap, residual,
                     slope_difference_quotient)

__all__ = [
    "ConditionResult",
    "VerificationReport",
    "default_tolerance",
    "check_energetic",
    "check_bv",
    "check_ve",
    "upper_energy_estimate",
]


@dataclass(frozen=True)
class ConditionResult:
    name: str
    max_violation: float
    worst_time: float
    tol: float
    passed: bool


@dataclass
class VerificationReport:
    concept: str
    conditions: list[ConditionResult]
    energy_residual_times: np.ndarray
    energy_residuals: np.ndarray
    jump_entries: list[dict]
    metadata: dict

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["condition", "max_violation", "worst_time", "tol", "pass"])
            for c in self.conditions:
                w.writerow([c.name, format(c.max_violation, ".17g"),
                            format(c.worst_time, ".17g"), format(c.tol, ".17g"),
                            int(c.passed)])

    def to_text(self) -> str:
        lines = [f"[{self.concept}] verification "
                 f"{'PASS' if self.passed else 'FAIL'}"]
        for c in self.conditions:
            lines.append(f"  {'ok ' if c.passed else 'BAD'} {c.name:24s} "
                         f"max_violation={c.max_violation:.3e} at t={c.worst_time:.6g} "
                         f"(tol={c.tol:.3e})")
        for j in self.jump_entries:
            lines.append(f"      jump t={j['t']:.6g}: energy drop={j['drop']:.6g} "
                         f"cost={j['cost']:.6g} gap={j['gap']:.3e}")
        meta = ", ".join(f"{k}={v}" for k, v in sorted(self.metadata.items()))
        lines.append(f"  [{meta}]")
        return "\n".join(lines)


def default_tolerance(s: StateSpace, u: BVCurve, c_tol: float = 10.0) -> float:
    """C_tol * (h + sample step + quadrature step); conditions hold only in
    the limit, so residuals must be allowed to scale with discretization."""
    step = float(np.median(np.diff(u.times))) if len(u.times) > 1 else 0.0
    return c_tol * (s.h + 2.0 * step)


def _power_integral_cum(m: EnergyModel, u: BVCurve) -> np.ndarray:
    """Cumulative trapezoid of P(s, u(s)) on the sample grid.

    Stored values are left-continuous, so jump times contribute their left
    limit automatically.
    """
    p = np.array([float(m.power(t, v)) for t, v in zip(u.times, u.values)])
    dt = np.diff(u.times)
    inc = 0.5 * dt * (p[:-1] + p[1:])
    return np.concatenate([[0.0], np.cumsum(inc)])


def _variation_cum(u: BVCurve, cost: JumpCostFunction | None) -> np.ndarray:
    """Cumulative Var_{d,e}(t_0, t_k) (plain Var_d when cost is None)."""
    d = np.linalg.norm(np.diff(u.values, axis=0), axis=1)
    var = np.concatenate([[0.0], np.cumsum(d)])
    if cost is None:
        return var
    out = var.copy()
    for j in u.jumps:
        k = int(np.searchsorted(u.times, j.t))
        d_in = 0.0   # incremental cost of the left -> at leg
        d_out = 0.0  # incremental cost of the at -> right leg
        if not np.array_equal(j.left, j.at):
            d_in = cost(j.t, j.left, j.at) - float(np.linalg.norm(j.left - j.at))
        if not np.array_equal(j.at, j.right):
            d_out = cost(j.t, j.at, j.right) - float(np.linalg.norm(j.at - j.right))
        # with t_j as the right interval endpoint only the inward leg counts
        out[k] += d_in
        out[k + 1:] += d_in + d_out
    return out


def _balance_series(m: EnergyModel, u: BVCurve,
                    cost: JumpCostFunction | None) -> np.ndarray:
    e = np.array([float(m.energy(t, v)) for t, v in zip(u.times, u.values)])
    var = _variation_cum(u, cost)
    work = _power_integral_cum(m, u)
    return (e + var) - (e[0] + work)


def _condition(name, series, times, tol) -> ConditionResult:
    series = np.asarray(series, dtype=float)
    if series.size == 0:
        return ConditionResult(name, 0.0, float("nan"), tol, True)
    k = int(np.argmax(series))
    worst = float(series[k])
    return ConditionResult(name, worst, float(times[k]), tol, worst <= tol)


def _jump_identity_entries(m, s, u, cost_fn, tol, rel=False):
    """Per-jump |energy drop - cost| gaps; all identity legs that apply."""
    entries = []
    viols = []
    vtimes = []
    for j in u.jumps:
        legs = [(j.left, j.right)]
        if (not np.array_equal(j.at, j.left)) and (not np.array_equal(j.at, j.right)):
            legs = [(j.left, j.at), (j.at, j.right), (j.left, j.right)]
        for p, q in legs:
            drop = float(m.energy(j.t, p)) - float(m.energy(j.t, q))
            cost = cost_fn(j.t, p, q)
            gap = abs(drop - cost)
            scale = abs(drop) if (rel and abs(drop) > 0) else 1.0
            entries.append({"t": j.t, "drop": drop, "cost": cost, "gap": gap})
            viols.append(gap / scale)
            vtimes.append(j.t)
    return entries, np.array(viols), np.array(vtimes)


def check_energetic(m: EnergyModel, s: StateSpace, u: BVCurve,
                    tol: float | None = None) -> VerificationReport:
    """Global stability + energy balance with the plain total variation."""
    if tol is None:
        tol = default_tolerance(s, u)
    gaps = np.array([d_stability_gap(m, s, t, v)
                     for t, v in zip(u.times, u.values)])
    balance = np.abs(_balance_series(m, u, None))
    conditions = [
        _condition("global-stability", gaps, u.times, tol),
        _condition("energy-balance", balance, u.times, tol),
    ]
    return VerificationReport(
        concept="energetic", conditions=conditions,
        energy_residual_times=u.times, energy_residuals=balance,
        jump_entries=[], metadata={"tol": tol, "h": s.h})


def _dyadic_localized(m, u, levels=5):
    """Max positive residual of the localized energy inequality on a dyadic
    family of subintervals [s, t]."""
    e = np.array([float(m.energy(t, v)) for t, v in zip(u.times, u.values)])
    d = np.linalg.norm(np.diff(u.values, axis=0), axis=1)
    var = np.concatenate([[0.0], np.cumsum(d)])
    work = _power_integral_cum(m, u)
    worst, wt = 0.0, float(u.times[0])
    M = len(u.times) - 1
    for lev in range(levels + 1):
        pieces = 2 ** lev
        idx = np.linspace(0, M, pieces + 1).round().astype(int)
        for a, b in zip(idx[:-1], idx[1:]):
            if a == b:
                continue
            lhs = e[b] + (var[b] - var[a])
            rhs = e[a] + (work[b] - work[a])
            if lhs - rhs > worst:
                worst, wt = lhs - rhs, float(u.times[b])
    return worst, wt


def _chain_rule_smoke(m, s, u):
    """Sampled chain-rule inequality -dE/dt + P <= |u'| slope on continuous
    curves; returns (max positive violation, worst time).  Not a proof."""
    if u.jumps or len(u.times) < 3:
        return 0.0, float(u.times[0])
    t = u.times
    v = u.values
    worst, wt = 0.0, float(t[0])
    for k in range(1, len(t) - 1):
        dt = t[k + 1] - t[k - 1]
        de = (float(m.energy(t[k + 1], v[k + 1])) -
              float(m.energy(t[k - 1], v[k - 1]))) / dt
        du = float(np.linalg.norm(v[k + 1] - v[k - 1])) / dt
        sl = m.analytic_slope(t[k], v[k])
        if sl is None:
            sl = slope_difference_quotient(m, s, t[k], v[k]).value
        viol = (-de + float(m.power(t[k], v[k]))) - du * float(sl)
        if viol > worst:
            worst, wt = viol, float(t[k])
    return worst, wt


def check_bv(m: EnergyModel, s: StateSpace, u: BVCurve,
             tol: float | None = None, seed: int = 0) -> VerificationReport:
    """Local stability, viscous-cost balance, jump identities, localized
    inequality, chain-rule smoke test."""
    if tol is None:
        tol = default_tolerance(s, u)
    jt = set(float(j.t) for j in u.jumps)
    sl_viol, sl_times = [], []
    for t, v in zip(u.times, u.values):
        if float(t) in jt:
            continue
        sl = m.analytic_slope(t, v)
        if sl is None:
            sl = slope_difference_quotient(m, s, t, v).value
        sl_viol.append(max(float(sl) - 1.0, 0.0))
        sl_times.append(float(t))

    vcost = JumpCostFunction(
        lambda t, a, b: viscous_cost(m, s, t, a, b, seed=seed).total, "v")
    balance = np.abs(_balance_series(m, u, vcost))
    entries, jviol, jtimes = _jump_identity_entries(m, s, u, vcost, tol)
    loc, loc_t = _dyadic_localized(m, u)
    smoke, smoke_t = _chain_rule_smoke(m, s, u)
    conditions = [
        _condition("local-stability", np.array(sl_viol), np.array(sl_times), tol),
        _condition("energy-balance-v", balance, u.times, tol),
        _condition("jump-conditions-v", jviol, jtimes, tol),
        ConditionResult("localized-inequality", loc, loc_t, tol, loc <= tol),
        ConditionResult("chain-rule-smoke", smoke, smoke_t, tol, smoke <= tol),
    ]
    return VerificationReport(
        concept="bv", conditions=conditions,
        energy_residual_times=u.times, energy_residuals=balance,
        jump_entries=entries, metadata={"tol": tol, "h": s.h})


def check_ve(m: EnergyModel, s: StateSpace, u: BVCurve, mu: float,
             tol: float | None = None, seed: int = 0) -> VerificationReport:
    """D-stability residual, c_mu balance, and c_mu jump identities."""
    if tol is None:
        tol = default_tolerance(s, u)
    jt = set(float(j.t) for j in u.jumps)
    r_viol, r_times = [], []
    for t, v in zip(u.times, u.values):
        if float(t) in jt:
            continue
        r_viol.append(residual(m, s, t, v, mu))
        r_times.append(float(t))

    ccost = JumpCostFunction(
        lambda t, a, b: ve_cost(m, s, t, a, b, mu, seed=seed).total, "c_mu")
    balance = np.abs(_balance_series(m, u, ccost))
    entries, jviol, jtimes = _jump_identity_entries(m, s, u, ccost, tol)
    conditions = [
        _condition("D-stability", np.array(r_viol), np.array(r_times), tol),
        _condition("energy-balance-c", balance, u.times, tol),
        _condition("jump-conditions-c", jviol, jtimes, tol),
    ]
    return VerificationReport(
        concept="ve", conditions=conditions,
        energy_residual_times=u.times, energy_residuals=balance,
        jump_entries=entries, metadata={"tol": tol, "h": s.h, "mu": mu})


def upper_energy_estimate(m: EnergyModel, u: BVCurve,
                          interval: tuple[float, float],
                          cost: JumpCostFunction | None = None) -> float:
    """Signed residual LHS - RHS of the upper energy estimate on [s, t].

    LHS = E(t, u(t)) + Var_{d,e}(u; [s, t]), RHS = E(s, u(s)) + int_s^t P.
    Negative or tolerance-small values certify the estimate.
    """
    a, b = float(interval[0]), float(interval[1])
    var = (u.augmented_variation(cost, a, b) if cost is not None
           else u.total_variation(a, b))
    mask = (u.times >= a - 1e-15) & (u.times <= b + 1e-15)
    ts = u.times[mask]
    vs = u.values[mask]
    p = np.array([float(m.power(t, v)) for t, v in zip(ts, vs)])
    work = float(np.trapezoid(p, ts)) if len(ts) > 1 else 0.0
    lhs = float(m.energy(b, u.eval(b))) + var
    rhs = float(m.energy(a, u.eval(a))) + work
    return lhs - rhs
