"""Curves of bounded variation with explicit jump bookkeeping.

A ``BVCurve`` stores a time-sampled curve (left-continuous, piecewise
constant between samples) plus a list of jump records: left value, value at
the jump time, right value.  On top of it this module computes

- the pointwise total variation over the stored sample partition,
- the cumulative variation function V_u,
- the jump contribution to the total variation (boundary half-jumps plus
  interior full jumps),
- the augmented total variation for a pluggable jump cost e >= d, where
  each jump is charged the incremental cost e - d on top of the plain
  distance,
- the metric derivative of sampled continuous curves.

Serialization is CSV with the header
``t, u_1..u_n, is_jump, left_1.., at_1.., right_1..`` and 17-significant-
digit decimals, which round-trips exactly.
"""

from __future__ import annotations

import csv
from bisect import bisect_left
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .models import DomainError

__all__ = [
    "JumpRecord",
    "JumpCostFunction",
    "distance_cost",
    "BVCurve",
    "VariationFunction",
    "metric_derivative",
    "detect_jump_episodes",
]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True)
class JumpRecord:
    """One jump: u(t-) = left, u(t) = at, u(t+) = right.

    ``t_end`` is runtime metadata: for jumps extracted from a discrete
    trajectory it marks when the underlying fast transition finished (the
    record itself represents the instantaneous limit jump at ``t``).  It is
    not serialized.
    """

    t: float
    left: np.ndarray
    at: np.ndarray
    right: np.ndarray
    t_end: float = None  # type: ignore[assignment]

    def __post_init__(self):
        object.__setattr__(self, "left", np.atleast_1d(np.asarray(self.left, float)))
        object.__setattr__(self, "at", np.atleast_1d(np.asarray(self.at, float)))
        object.__setattr__(self, "right", np.atleast_1d(np.asarray(self.right, float)))
        if self.t_end is None:
            object.__setattr__(self, "t_end", float(self.t))
        same_lr = np.array_equal(self.left, self.right)
        same_la = np.array_equal(self.left, self.at)
        if same_lr and same_la:
            raise ValueError(f"degenerate jump record at t={self.t}: all three states equal")

    def dissipation(self) -> float:
        return float(np.linalg.norm(self.left - self.at)
                     + np.linalg.norm(self.at - self.right))


class JumpCostFunction:
    """A jump dissipation cost e(t, a, b) >= d(a, b) with a name tag."""

    def __init__(self, fn: Callable[[float, np.ndarray, np.ndarray], float], name: str):
        self._fn = fn
        self.name = name

    def __call__(self, t: float, a, b) -> float:
        return float(self._fn(t, np.atleast_1d(np.asarray(a, float)),
                              np.atleast_1d(np.asarray(b, float))))


def distance_cost() -> JumpCostFunction:
    """The trivial cost e = d; augmented variation collapses to Var_d."""
    return JumpCostFunction(lambda t, a, b: float(np.linalg.norm(a - b)), "d")


def _dist(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b))


@dataclass(frozen=True)
class VariationFunction:
    """Monotone map t -> V_u(t), sampled on the curve's time grid."""

    times: np.ndarray
    values: np.ndarray

    def __call__(self, t: float) -> float:
        i = np.searchsorted(self.times, t, side="right") - 1
        i = min(max(i, 0), len(self.times) - 1)
        return float(self.values[i])


@dataclass(frozen=True)
class BVCurve:
    """Left-continuous sampled curve with explicit jump records."""

    times: np.ndarray
    values: np.ndarray
    jumps: tuple[JumpRecord, ...] = ()

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if t.ndim != 1 or v.shape[0] != t.shape[0]:
            raise ValueError("times and values must align")
        if t.shape[0] < 1 or np.any(np.diff(t) <= 0):
            raise ValueError("sample times must be strictly increasing")
        if len(self.jumps) > 10_000:
            raise ValueError("jump records capped at 10^4")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "jumps", tuple(self.jumps))
        tset = t
        for j in self.jumps:
            k = np.searchsorted(tset, j.t)
            if k >= len(tset) or tset[k] != j.t:
                raise ValueError(f"jump time {j.t} is not a sample time")
            if not np.allclose(v[k], j.at, atol=1e-12):
                raise ValueError(f"stored value at jump time {j.t} differs from record's 'at'")

    # -- basic queries ------------------------------------------------------
    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def t1(self) -> float:
        return float(self.times[-1])

    def jump_times(self) -> np.ndarray:
        return np.array([j.t for j in self.jumps])

    def eval(self, t: float) -> np.ndarray:
        """u(t): left-continuous piecewise-constant evaluation."""
        if t <= self.times[0]:
            return self.values[0]
        k = np.searchsorted(self.times, t, side="left")
        if k >= len(self.times):
            return self.values[-1]
        return self.values[k]

    def eval_many(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        k = np.searchsorted(self.times, ts, side="left")
        k = np.clip(k, 0, len(self.times) - 1)
        return self.values[k]

    def left_limit(self, t: float) -> np.ndarray:
        for j in self.jumps:
            if j.t == t:
                return j.left
        return self.eval(t)

    def right_limit(self, t: float) -> np.ndarray:
        for j in self.jumps:
            if j.t == t:
                return j.right
        k = np.searchsorted(self.times, t, side="right")
        if k >= len(self.times):
            return self.values[-1]
        return self.values[k]

    def _slice(self, t0: float | None, t1: float | None) -> tuple[float, float]:
        a = self.t0 if t0 is None else float(t0)
        b = self.t1 if t1 is None else float(t1)
        if b < a:
            raise DomainError(f"empty interval [{a}, {b}]")
        return a, b

    # -- variation functionals ----------------------------------------------
    def total_variation(self, t0: float | None = None, t1: float | None = None) -> float:
        """Var_d over [t0, t1]: the sup over the stored sample partition.

        Computed as the telescoping sum of adjacent-sample distances, with
        the interval endpoints evaluated through ``eval``.
        """
        a, b = self._slice(t0, t1)
        inner = self.times[(self.times > a) & (self.times < b)]
        states = [self.eval(a)] + [self.eval(t) for t in inner] + [self.eval(b)]
        return float(sum(_dist(p, q) for p, q in zip(states, states[1:])))

    def variation_function(self) -> VariationFunction:
        """Cumulative variation V_u anchored at the first sample time."""
        d = np.linalg.norm(np.diff(self.values, axis=0), axis=1)
        return VariationFunction(self.times, np.concatenate([[0.0], np.cumsum(d)]))

    def jump_variation_d(self, t0: float | None = None, t1: float | None = None) -> float:
        """Jump contribution to Var_d: boundary half-jumps + interior jumps."""
        a, b = self._slice(t0, t1)
        total = 0.0
        for j in self.jumps:
            if j.t == a:
                total += _dist(j.at, j.right)
            elif j.t == b:
                total += _dist(j.left, j.at)
            elif a < j.t < b:
                total += _dist(j.left, j.at) + _dist(j.at, j.right)
        return total

    def augmented_variation(self, e: JumpCostFunction,
                            t0: float | None = None, t1: float | None = None) -> float:
        """Var_{d,e} = Var_d + incremental jump variation for the cost e.

        Each jump is charged e - d per transition leg (left->at, at->right;
        only the inward leg at the interval boundary).  Raises if e < d on
        some jump triple, which violates the jump-cost contract.
        """
        a, b = self._slice(t0, t1)

        def delta(t, p, q):
            if np.array_equal(p, q):
                return 0.0
            cost, dd = e(t, p, q), _dist(p, q)
            if cost < dd - 1e-9 * max(1.0, dd):
                raise ValueError(
                    f"jump cost {e.name} below distance at t={t}: {cost} < {dd}")
            return cost - dd

        extra = 0.0
        for j in self.jumps:
            if j.t == a:
                extra += delta(j.t, j.at, j.right)
            elif j.t == b:
                extra += delta(j.t, j.left, j.at)
            elif a < j.t < b:
                extra += delta(j.t, j.left, j.at) + delta(j.t, j.at, j.right)
        return self.total_variation(a, b) + extra

    def additivity_check(self, e: JumpCostFunction, a: float, b: float, c: float) -> float:
        """|Var_{d,e}(a,c) - Var_{d,e}(a,b) - Var_{d,e}(b,c)|; ~1e-12 expected."""
        if not (a <= b <= c):
            raise DomainError("need a <= b <= c")
        whole = self.augmented_variation(e, a, c)
        split = self.augmented_variation(e, a, b) + self.augmented_variation(e, b, c)
        return abs(whole - split)

    # -- serialization --------------------------------------------------------
    def to_csv(self, path) -> None:
        n = self.dim
        header = (["t"] + [f"u_{i+1}" for i in range(n)] + ["is_jump"]
                  + [f"left_{i+1}" for i in range(n)]
                  + [f"at_{i+1}" for i in range(n)]
                  + [f"right_{i+1}" for i in range(n)])
        by_time = {j.t: j for j in self.jumps}
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for t, v in zip(self.times, self.values):
                j = by_time.get(float(t))
                row = [_fmt(t)] + [_fmt(x) for x in v]
                if j is None:
                    row += ["0"] + [""] * (3 * n)
                else:
                    row += (["1"] + [_fmt(x) for x in j.left]
                            + [_fmt(x) for x in j.at] + [_fmt(x) for x in j.right])
                w.writerow(row)

    @classmethod
    def from_csv(cls, path) -> "BVCurve":
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            header = next(r)
            n = (len(header) - 2) // 4
            times, values, jumps = [], [], []
            for row in r:
                t = float(row[0])
                times.append(t)
                values.append([float(x) for x in row[1:1 + n]])
                if row[1 + n] == "1":
                    base = 2 + n
                    jumps.append(JumpRecord(
                        t=t,
                        left=[float(x) for x in row[base:base + n]],
                        at=[float(x) for x in row[base + n:base + 2 * n]],
                        right=[float(x) for x in row[base + 2 * n:base + 3 * n]],
                    ))
        return cls(np.array(times), np.array(values), tuple(jumps))


def metric_derivative(curve: BVCurve, t: float) -> float:
    """|u'|(t) by central difference on the sample grid (one-sided at ends).

    Only meaningful for continuous curves; raises if the curve has jumps.
    """
    if curve.jumps:
        raise DomainError("metric derivative is defined for continuous curves only")
    times, vals = curve.times, curve.values
    k = int(np.argmin(np.abs(times - t)))
    if k == 0:
        return _dist(vals[1], vals[0]) / (times[1] - times[0])
    if k == len(times) - 1:
        return _dist(vals[-1], vals[-2]) / (times[-1] - times[-2])
    return _dist(vals[k + 1], vals[k - 1]) / (times[k + 1] - times[k - 1])


def detect_jump_episodes(times: np.ndarray, values: np.ndarray,
                         jump_threshold: float,
                         window: float) -> list[tuple[int, int]]:
    """Locate fast-transition episodes in a raw sampled trajectory.

    Returns index pairs (k0, k1) such that the motion from sample k0 to k1
    is a jump episode: the displacement over some sliding window of width
    ``window`` inside it exceeds ``jump_threshold``.  Consecutive flagged
    windows are merged, then the episode is trimmed to the smallest index
    range still carrying 99.5% of its displacement.

    A single-sample step larger than the threshold is an episode on its
    own, so this generalizes plain per-step thresholding; the window makes
    transitions visible when a scheme crosses in many small hops.
    """
    times = np.asarray(times, float)
    values = np.asarray(values, float)
    if values.ndim == 1:
        values = values[:, None]
    n = len(times)
    if n < 2:
        return []
    dt = np.min(np.diff(times))
    wk = max(1, int(round(window / dt)))
    wk = min(wk, n - 1)
    disp = np.linalg.norm(values[wk:] - values[:-wk], axis=1)
    hot = disp > jump_threshold
    episodes: list[tuple[int, int]] = []
    i = 0
    while i < len(hot):
        if not hot[i]:
            i += 1
            continue
        j = i
        while j + 1 < len(hot) and hot[j + 1]:
            j += 1
        k0, k1 = i, min(j + wk, n - 1)
        # trim slow tails: drop leading/trailing steps until 99.5% of the
        # episode displacement remains concentrated
        step = np.linalg.norm(np.diff(values[k0:k1 + 1], axis=0), axis=1)
        total = step.sum()
        lo, hi = 0, len(step)
        while hi - lo > 1 and step[lo] <= 5e-3 * total:
            lo += 1
        while hi - lo > 1 and step[hi - 1] <= 5e-3 * total:
            hi -= 1
        episodes.append((k0 + lo, k0 + hi))
        i = j + 1
    return episodes
