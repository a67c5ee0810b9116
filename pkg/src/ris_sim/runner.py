"""Experiment orchestration: single runs, mu sweeps, trajectory comparison.

``run_single`` executes one scheme and writes the full artifact set
(trajectory CSV, curve CSV, verification reports, figures).  ``run_mu_sweep``
runs a ladder of visco-energetic solves against a reference — the plain
energetic solution for the mu -> 0 limit, or a viscous proxy with
tau = epsilon^2 (so epsilon/tau -> infinity) for the mu -> infinity limit —
and reports per-mu jump times, sup-distances and energy gaps off jump
neighborhoods.  Sweep entries run concurrently; RIS_SIM_THREADS caps the
pool.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bvcurve import BVCurve
from .config import RunConfig, UsageError
from .models import EnergyModel, StateSpace
from .solvers import DiscreteTrajectory, Scheme, TimePartition, interpolant, solve
from .verify import VerificationReport, check_bv, check_energetic, check_ve

__all__ = [
    "run_single",
    "run_mu_sweep",
    "compare_trajectories",
    "SweepEntry",
    "SweepResult",
    "solve_to_curve",
]


def _scheme_from_config(cfg: RunConfig) -> Scheme:
    if cfg.scheme == "energetic":
        return Scheme.energetic()
    if cfg.scheme == "viscous":
        return Scheme.viscous(cfg.epsilon)
    return Scheme.ve(cfg.mu)


def solve_to_curve(m: EnergyModel, s: StateSpace, scheme: Scheme,
                   T: float, tau: float, u0) -> tuple[DiscreteTrajectory, BVCurve]:
    traj = solve(m, s, scheme, TimePartition.uniform(T, tau), u0)
    return traj, interpolant(traj, s)


def compare_trajectories(m: EnergyModel, uA: BVCurve, uB: BVCurve,
                         jump_exclusion: float) -> dict:
    """Sup state distance and energy gap off jump neighborhoods.

    Curves must share the time span.  Both are piecewise-constant functions
    of time, so they are compared on the coarser curve's sample times; the
    excluded set is the union over both curves' jumps of
    ``[t_jump - delta, t_episode_end + delta]``.
    """
    if abs(uA.t0 - uB.t0) > 1e-12 or abs(uA.t1 - uB.t1) > 1e-12:
        raise UsageError("curves cover different time spans")
    ts = uA.times if len(uA.times) <= len(uB.times) else uB.times
    excl = [(j.t - jump_exclusion, j.t_end + jump_exclusion)
            for c in (uA, uB) for j in c.jumps]
    mask = np.ones(len(ts), dtype=bool)
    for lo, hi in excl:
        mask &= ~((ts >= lo) & (ts <= hi))
    if not np.any(mask):
        return {"sup_distance": 0.0, "max_energy_gap": 0.0, "n_compared": 0}
    tt = ts[mask]
    va = uA.eval_many(tt)
    vb = uB.eval_many(tt)
    dist = np.linalg.norm(va - vb, axis=1)
    ea = np.array([float(m.energy(t, v)) for t, v in zip(tt, va)])
    eb = np.array([float(m.energy(t, v)) for t, v in zip(tt, vb)])
    return {"sup_distance": float(np.max(dist)),
            "max_energy_gap": float(np.max(np.abs(ea - eb))),
            "n_compared": int(mask.sum())}


def _verify_curve(m, s, curve, concept, mu, tol, seed) -> VerificationReport:
    if concept == "energetic":
        return check_energetic(m, s, curve, tol=tol)
    if concept == "bv":
        return check_bv(m, s, curve, tol=tol, seed=seed)
    if concept == "ve":
        if mu is None or mu <= 0:
            raise UsageError("ve verification needs mu > 0")
        return check_ve(m, s, curve, mu, tol=tol, seed=seed)
    raise UsageError(f"unknown concept {concept!r}")


def run_single(cfg: RunConfig, outdir=None, make_figures: bool = True) -> dict:
    """One solve + requested verifications + artifacts.

    Returns a dict with the trajectory, curve, reports, file paths, and
    ``passed`` (True iff every requested check passed).
    """
    m = cfg.build_model()
    s = cfg.build_space()
    scheme = _scheme_from_config(cfg)
    outdir = Path(cfg.output_dir if outdir is None else outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    traj, curve = solve_to_curve(m, s, scheme, cfg.T, cfg.tau, cfg.u0)
    traj_path = outdir / "trajectory.csv"
    curve_path = outdir / "curve.csv"
    traj.to_csv(traj_path)
    curve.to_csv(curve_path)

    reports = {}
    for concept in cfg.verify:
        rep = _verify_curve(m, s, curve, concept, cfg.mu, cfg.tol, cfg.seed)
        rep.to_csv(outdir / f"report_{concept}.csv")
        (outdir / f"report_{concept}.txt").write_text(rep.to_text() + "\n")
        reports[concept] = rep

    figures = []
    if make_figures:
        from . import plots
        figures.append(plots.trajectory_figure(m, curve, outdir / "trajectory.png",
                                               title=scheme.label()))
        if reports:
            figures.append(plots.balance_figure(reports, outdir / "energy_residuals.png"))

    return {"trajectory": traj, "curve": curve, "reports": reports,
            "paths": {"trajectory": traj_path, "curve": curve_path},
            "figures": figures,
            "passed": all(r.passed for r in reports.values())}


@dataclass
class SweepEntry:
    mu: float
    jump_times: list
    sup_distance: float
    max_energy_gap: float
    verify_passed: bool | None
    curve_path: str


@dataclass
class SweepResult:
    direction: str
    reference: str                    # "energetic" | "bv"
    reference_jump_times: list
    entries: list[SweepEntry] = field(default_factory=list)
    trend_inversions: int = 0

    def to_csv(self, path) -> None:
        import csv
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["mu", "jump_times", "sup_distance", "max_energy_gap",
                        "verify_passed", "curve_path"])
            for e in self.entries:
                w.writerow([format(e.mu, ".17g"),
                            ";".join(format(t, ".17g") for t in e.jump_times),
                            format(e.sup_distance, ".17g"),
                            format(e.max_energy_gap, ".17g"),
                            "" if e.verify_passed is None else int(e.verify_passed),
                            e.curve_path])


def _max_workers() -> int:
    cap = os.environ.get("RIS_SIM_THREADS")
    if cap:
        return max(1, int(cap))
    return min(8, os.cpu_count() or 1)


def run_mu_sweep(cfg: RunConfig, direction: str, outdir=None,
                 make_figures: bool = True) -> SweepResult:
    """VE solves over the mu ladder against the direction's reference.

    down: reference is the energetic solution (limit mu -> 0).
    up:   reference is the viscous proxy with fixed epsilon and
          tau = epsilon^2 on its own (finer) grid (limit mu -> infinity).
    Per entry, the mu run uses tau_mu = min(tau, tau_scale / mu) so that a
    large-mu transition compresses into a short episode.
    """
    if direction not in ("down", "up"):
        raise UsageError("direction must be 'down' or 'up'")
    if not cfg.mu_list:
        raise UsageError("sweep.mu_list is empty")
    if max(cfg.mu_list) / min(cfg.mu_list) < 1e3:
        raise UsageError("sweep.mu_list must span at least 3 decades")

    m = cfg.build_model()
    s = cfg.build_space()
    outdir = Path(cfg.output_dir if outdir is None else outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    if direction == "down":
        ref_tag = "energetic"
        _, ref_curve = solve_to_curve(m, s, Scheme.energetic(), cfg.T, cfg.tau, cfg.u0)
    else:
        ref_tag = "bv"
        eps = cfg.sweep_epsilon
        proxy_h = cfg.proxy_h if cfg.proxy_h is not None else cfg.h
        proxy_space = StateSpace.grid(cfg.bounds, proxy_h)
        _, ref_curve = solve_to_curve(m, proxy_space, Scheme.viscous(eps),
                                      cfg.T, eps * eps, cfg.u0)
    ref_curve.to_csv(outdir / f"reference_{ref_tag}.csv")

    delta = 5.0 * cfg.tau

    def one(mu: float) -> SweepEntry:
        tau_mu = min(cfg.tau, cfg.tau_scale / mu)
        _, curve = solve_to_curve(m, s, Scheme.ve(mu), cfg.T, tau_mu, cfg.u0)
        path = outdir / f"curve_mu_{mu:g}.csv"
        curve.to_csv(path)
        cmp = compare_trajectories(m, curve, ref_curve, delta)
        passed = None
        if cfg.sweep_verify:
            passed = check_ve(m, s, curve, mu, tol=cfg.tol, seed=cfg.seed).passed
        return SweepEntry(mu=mu, jump_times=[j.t for j in curve.jumps],
                          sup_distance=cmp["sup_distance"],
                          max_energy_gap=cmp["max_energy_gap"],
                          verify_passed=passed, curve_path=str(path))

    with ThreadPoolExecutor(max_workers=_max_workers()) as pool:
        entries = list(pool.map(one, sorted(cfg.mu_list)))

    # trend: approaching the limit, distances should not increase
    ordered = entries if direction == "up" else entries[::-1]
    dists = [e.sup_distance for e in ordered]
    tol_step = 0.1 * max(dists) if dists else 0.0
    inversions = sum(1 for a, b in zip(dists, dists[1:]) if b > a + tol_step)

    result = SweepResult(direction=direction, reference=ref_tag,
                         reference_jump_times=[j.t for j in ref_curve.jumps],
                         entries=entries, trend_inversions=inversions)
    result.to_csv(outdir / "sweep_summary.csv")
    if make_figures:
        from . import plots
        plots.sweep_figure(result, outdir / "sweep_distance.png")
        plots.sweep_jump_times_figure(result, outdir / "sweep_jump_times.png")
    return result
