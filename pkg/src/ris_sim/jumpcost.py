"""Jump dissipation costs by shortest-path minimization on the state grid.

Two costs measure the energy a solution may dissipate while jumping at a
frozen process time t:

- the viscous cost ``v(t, a, b)``: minimal ``int |theta'| (slope v 1)`` over
  continuous paths from a to b, discretized as a shortest path with
  short-range edges weighted by distance times the averaged integrand;
- the visco-energetic cost ``c_mu(t, a, b)``: minimal transition cost of a
  finite chain, where every hop pays ``d + (mu/2) d^2`` and every
  non-terminal node pays its stability residual ``R(t, .)``.

For ``c_mu`` the chain family is a grid graph with three kinds of edges:
a short-range band (sliding motion), one argmin edge per node pointing at
the global minimizer of ``E + D_mu`` seen from that node (the pure-jump
move), and direct edges from the source / into the target.  Node residuals
are folded into outgoing edge weights, which charges every node except the
final one.  A band-only graph would force long jumps through many
intermediate nodes and overcharge their residual sums, so the long edges
are structural, not an optimization.

``classify_transition`` splits an optimal chain into sliding segments
(residual below tolerance, grid-scale hops) and pure-jump nodes, verifying
the argmin property at each jump node.
"""

from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .models import (ConfigurationError, DomainError, EnergyModel, StateSpace,
                     residual, slope_difference_quotient)

__all__ = [
    "TransitionChain",
    "CostBreakdown",
    "Segment",
    "ve_chain_cost",
    "ve_cost",
    "viscous_cost",
    "bv_path_cost",
    "classify_transition",
    "transition_to_csv",
]

_CHUNK = 512


@dataclass(frozen=True)
class TransitionChain:
    """Finite ordered transition: states, per-node residuals, edge lengths."""

    r: np.ndarray           # (M,) strictly increasing parameter values
    states: np.ndarray      # (M, dim)
    residuals: np.ndarray   # (M,)
    edge_d: np.ndarray      # (M-1,)
    t: float
    mu: float | None = None

    def __post_init__(self):
        if np.any(np.diff(self.r) <= 0):
            raise ValueError("chain parameter must strictly increase")
        if np.any(self.residuals < 0):
            raise ValueError("chain residuals must be nonnegative")

    @property
    def n_nodes(self) -> int:
        return len(self.r)


@dataclass(frozen=True)
class CostBreakdown:
    """Itemized transition cost.

    For the visco-energetic cost: total = var + gap + residual terms.
    For viscous / path costs only ``bv_integral_term`` is populated.
    ``partition_sup`` carries the partition-form cross-check of the path
    integral when one was computed.
    """

    var_term: float = 0.0
    gap_term: float = 0.0
    residual_term: float = 0.0
    bv_integral_term: float = 0.0
    total: float = 0.0
    chain: TransitionChain | None = None
    partition_sup: float | None = None

    def itemized(self) -> str:
        lines = []
        if self.bv_integral_term:
            lines.append(f"  integral |theta'| (slope v 1) = {self.bv_integral_term:.12g}")
            if self.partition_sup is not None:
                lines.append(f"  partition-sup cross-check     = {self.partition_sup:.12g}")
        else:
            lines.append(f"  Var term      = {self.var_term:.12g}")
            lines.append(f"  Gap term      = {self.gap_term:.12g}")
            lines.append(f"  Residual term = {self.residual_term:.12g}")
        lines.append(f"  total = {self.total:.12g}")
        return "\n".join(lines)


def _residual_and_argmin(m: EnergyModel, s: StateSpace, t: float,
                         mu: float) -> tuple[np.ndarray, np.ndarray]:
    """R(t, ., mu) and the E + D_mu argmin index for every grid point."""
    E = np.asarray(m.energy(t, s.points))
    N = s.n_points
    R = np.empty(N)
    jstar = np.empty(N, dtype=int)
    pts = s.points
    for i0 in range(0, N, _CHUNK):
        i1 = min(N, i0 + _CHUNK)
        diff = pts[i0:i1, None, :] - pts[None, :, :]
        if s.dim == 1:
            d = np.abs(diff[:, :, 0])
        else:
            d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        obj = E[None, :] + d + 0.5 * mu * d * d
        k = np.argmin(obj, axis=1)
        rows = np.arange(i1 - i0)
        R[i0:i1] = E[i0:i1] - obj[rows, k]
        jstar[i0:i1] = k
    np.maximum(R, 0.0, out=R)
    return R, jstar


def ve_chain_cost(m: EnergyModel, s: StateSpace, t: float,
                  states: np.ndarray, mu: float) -> CostBreakdown:
    """Exact transition cost of a finite chain.

    Every consecutive pair is a hole of the parameter set, so the cost is
    ``sum_i [d + (mu/2) d^2](theta_i, theta_{i+1}) + sum_{i<M} R(t, theta_i)``;
    additive under chain concatenation by construction.
    """
    if not (mu > 0):
        raise DomainError("mu must be positive")
    states = np.atleast_2d(np.asarray(states, dtype=float))
    M = states.shape[0]
    edge_d = np.linalg.norm(np.diff(states, axis=0), axis=1)
    res = np.array([residual(m, s, t, states[i], mu) for i in range(M)])
    var = float(edge_d.sum())
    gap = float(0.5 * mu * np.sum(edge_d * edge_d))
    rsum = float(res[:-1].sum()) if M > 1 else 0.0
    chain = TransitionChain(r=np.arange(M, dtype=float), states=states,
                            residuals=res, edge_d=edge_d, t=float(t), mu=float(mu))
    return CostBreakdown(var_term=var, gap_term=gap, residual_term=rsum,
                         total=var + gap + rsum, chain=chain)


def _band_offsets_1d(s: StateSpace, radius: float) -> int:
    step = (s.bounds[0, 1] - s.bounds[0, 0]) / (s.shape[0] - 1)
    return max(1, int(math.floor(radius / step + 1e-9)))


def _long_edges_2d(s: StateSpace, n_long: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.integers(0, s.n_points, size=(s.n_points, n_long))


def ve_cost(m: EnergyModel, s: StateSpace, t: float, a, b, mu: float,
            radius: float | None = None, seed: int = 0,
            n_long: int = 8) -> CostBreakdown:
    """Visco-energetic jump cost c_mu(t, a, b), minimized over grid chains.

    Single-source Dijkstra from a to b; each edge (p, q) weighs
    ``d(p,q) + (mu/2) d(p,q)^2 + R(t, p)`` so the residual is charged on
    every chain node except the final endpoint.  Returns the optimal chain
    with its cost breakdown; satisfies total >= d(a, b).
    """
    if not (mu > 0):
        raise DomainError("mu must be positive")
    a = s.snap(a)
    b = s.snap(b)
    ia, ib = s.nearest_index(a), s.nearest_index(b)
    if ia == ib:
        chain = TransitionChain(r=np.array([0.0]), states=a[None, :],
                                residuals=np.array([residual(m, s, t, a, mu)]),
                                edge_d=np.array([]), t=float(t), mu=float(mu))
        return CostBreakdown(chain=chain)
    if radius is None:
        radius = min(1.0, 50.0 * s.h)

    R, jstar = _residual_and_argmin(m, s, t, mu)
    pts = s.points
    N = s.n_points

    if s.dim == 1:
        K = _band_offsets_1d(s, radius)
        long2d = None
    else:
        K = 1  # 8-neighborhood band in index space
        long2d = _long_edges_2d(s, n_long, seed)
        ny = s.shape[1]

    def neighbors(i: int):
        if s.dim == 1:
            lo = max(0, i - K)
            hi = min(N, i + K + 1)
            yield from range(lo, i)
            yield from range(i + 1, hi)
        else:
            ix, iy = divmod(i, ny)
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    if dx == 0 and dy == 0:
                        continue
                    jx, jy = ix + dx, iy + dy
                    if 0 <= jx < s.shape[0] and 0 <= jy < ny:
                        yield jx * ny + jy
            for j in long2d[i]:
                if j != i:
                    yield int(j)
        if jstar[i] != i:
            yield int(jstar[i])
        yield ib
        if i == ia:
            # any first hop is admissible from the source
            yield from range(0, ia)
            yield from range(ia + 1, N)

    dist = np.full(N, np.inf)
    dist[ia] = 0.0
    prev = np.full(N, -1, dtype=int)
    pq: list[tuple[float, int]] = [(0.0, ia)]
    while pq:
        dv, i = heapq.heappop(pq)
        if dv > dist[i]:
            continue
        if i == ib:
            break
        base = dv + R[i]
        pi = pts[i]
        for j in neighbors(i):
            dd = float(np.linalg.norm(pts[j] - pi))
            nd = base + dd + 0.5 * mu * dd * dd
            if nd < dist[j]:
                dist[j] = nd
                prev[j] = i
                heapq.heappush(pq, (nd, j))
    if not np.isfinite(dist[ib]):
        raise RuntimeError("target unreachable on a connected grid (internal error)")

    order = [ib]
    while order[-1] != ia:
        order.append(int(prev[order[-1]]))
    order.reverse()
    chain_states = pts[order]
    edge_d = np.linalg.norm(np.diff(chain_states, axis=0), axis=1)
    res = R[order]
    var = float(edge_d.sum())
    gap = float(0.5 * mu * np.sum(edge_d * edge_d))
    rsum = float(res[:-1].sum())
    chain = TransitionChain(r=np.arange(len(order), dtype=float),
                            states=chain_states, residuals=res,
                            edge_d=edge_d, t=float(t), mu=float(mu))
    return CostBreakdown(var_term=var, gap_term=gap, residual_term=rsum,
                         total=var + gap + rsum, chain=chain)


def _slope_on_points(m: EnergyModel, s: StateSpace, t: float,
                     pts: np.ndarray) -> np.ndarray:
    sl = m.analytic_slope(t, pts)
    if sl is not None:
        return np.asarray(sl, dtype=float)
    return np.array([
        slope_difference_quotient(m, s, t, p).value for p in pts])


def viscous_cost(m: EnergyModel, s: StateSpace, t: float, a, b,
                 seed: int = 0) -> CostBreakdown:
    """Viscous jump cost v(t, a, b): grid shortest path for int (slope v 1).

    Edges connect grid neighbors (index band of 3 in 1D, 8-neighborhood in
    2D); each edge weighs ``d * max(1, (slope(p) + slope(q)) / 2)``.  Long
    edges are deliberately absent: the integrand must be sampled along the
    way, and a long hop would undercharge interior slope peaks.
    """
    a = s.snap(a)
    b = s.snap(b)
    ia, ib = s.nearest_index(a), s.nearest_index(b)
    if ia == ib:
        chain = TransitionChain(r=np.array([0.0]), states=a[None, :],
                                residuals=np.array([0.0]), edge_d=np.array([]),
                                t=float(t))
        return CostBreakdown(chain=chain)
    slopes = _slope_on_points(m, s, t, s.points)
    weight_node = np.maximum(slopes, 1.0)
    N = s.n_points
    pts = s.points
    if s.dim == 2:
        ny = s.shape[1]

    def neighbors(i: int):
        if s.dim == 1:
            for j in range(max(0, i - 3), min(N, i + 4)):
                if j != i:
                    yield j
        else:
            ix, iy = divmod(i, ny)
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    if dx == 0 and dy == 0:
                        continue
                    jx, jy = ix + dx, iy + dy
                    if 0 <= jx < s.shape[0] and 0 <= jy < ny:
                        yield jx * ny + jy

    dist = np.full(N, np.inf)
    dist[ia] = 0.0
    prev = np.full(N, -1, dtype=int)
    pq = [(0.0, ia)]
    while pq:
        dv, i = heapq.heappop(pq)
        if dv > dist[i]:
            continue
        if i == ib:
            break
        pi = pts[i]
        wi = weight_node[i]
        for j in neighbors(i):
            dd = float(np.linalg.norm(pts[j] - pi))
            nd = dv + dd * max(1.0, 0.5 * (wi + weight_node[j]))
            if nd < dist[j]:
                dist[j] = nd
                prev[j] = i
                heapq.heappush(pq, (nd, j))
    order = [ib]
    while order[-1] != ia:
        order.append(int(prev[order[-1]]))
    order.reverse()
    chain_states = pts[order]
    edge_d = np.linalg.norm(np.diff(chain_states, axis=0), axis=1)
    chain = TransitionChain(r=np.arange(len(order), dtype=float),
                            states=chain_states,
                            residuals=np.zeros(len(order)),
                            edge_d=edge_d, t=float(t))
    return CostBreakdown(bv_integral_term=float(dist[ib]), total=float(dist[ib]),
                         chain=chain)


def bv_path_cost(m: EnergyModel, s: StateSpace, t: float,
                 path: np.ndarray) -> CostBreakdown:
    """Transition cost of a given sampled continuous path.

    Quadrature: per sampled interval, distance times the integrand
    ``slope v 1`` at the interval midpoint.  Also evaluates the partition
    form sup_P sum d * inf(slope v 1) on the same partition (with the inf
    approximated by the min over endpoint and midpoint values); the two
    must agree to within quadrature tolerance on smooth paths.
    """
    path = np.atleast_2d(np.asarray(path, dtype=float))
    if path.shape[0] < 2:
        return CostBreakdown(chain=None)
    mids = 0.5 * (path[:-1] + path[1:])
    g_node = np.maximum(_slope_on_points(m, s, t, path), 1.0)
    g_mid = np.maximum(_slope_on_points(m, s, t, mids), 1.0)
    d = np.linalg.norm(np.diff(path, axis=0), axis=1)
    quad = float(np.sum(d * g_mid))
    inf_g = np.minimum(np.minimum(g_node[:-1], g_node[1:]), g_mid)
    psup = float(np.sum(d * inf_g))
    return CostBreakdown(bv_integral_term=quad, total=quad, partition_sup=psup)


@dataclass(frozen=True)
class Segment:
    """A classified piece of a transition chain."""

    kind: str                 # "slide" | "jump"
    start: int                # first node index (inclusive)
    stop: int                 # last node index (inclusive)
    argmin_gap: float | None = None  # optimality gap at a jump node


def classify_transition(m: EnergyModel, s: StateSpace, chain: TransitionChain,
                        mu: float, tol: float | None = None) -> list[Segment]:
    """Split chain nodes into sliding segments and pure-jump nodes.

    A node slides when its residual is below tolerance and the hops around
    it are grid-scale (<= 2h); otherwise it is a pure jump and the argmin
    property ``theta(s) in Argmin E(t,.) + D_mu(theta(s-), .)`` is checked,
    reporting the optimality gap.
    """
    if tol is None:
        supF = max(float(m.energy(chain.t, st)) +
                   float(np.linalg.norm(st - m.x_o)) for st in chain.states)
        tol = 10.0 * s.h * m.power_constant(s) * (1.0 + supF)
    M = chain.n_nodes
    is_jump = np.zeros(M, dtype=bool)
    for i in range(M):
        step_in = chain.edge_d[i - 1] if i > 0 else 0.0
        step_out = chain.edge_d[i] if i < M - 1 else 0.0
        if chain.residuals[i] > tol or max(step_in, step_out) > 2.0 * s.h + 1e-12:
            is_jump[i] = True
    is_jump[0] = False  # endpoints are prescribed, not argmin steps
    is_jump[M - 1] = False

    segments: list[Segment] = []
    i = 0
    while i < M:
        if is_jump[i]:
            pred = chain.states[i - 1]
            d = s.dist_to_all(pred)
            obj = np.asarray(m.energy(chain.t, s.points)) + d + 0.5 * mu * d * d
            here = (float(m.energy(chain.t, chain.states[i]))
                    + s.dist(pred, chain.states[i])
                    + 0.5 * mu * s.dist(pred, chain.states[i]) ** 2)
            segments.append(Segment("jump", i, i,
                                    argmin_gap=float(here - obj.min())))
            i += 1
        else:
            j = i
            while j + 1 < M and not is_jump[j + 1]:
                j += 1
            segments.append(Segment("slide", i, j))
            i = j + 1
    return segments


def transition_to_csv(chain: TransitionChain, path,
                      segments: Sequence[Segment] | None = None) -> None:
    """Dump `i, r_i, theta_1..theta_d, R_i, d_edge_i, kind` rows."""
    dim = chain.states.shape[1]
    kind = ["slide"] * chain.n_nodes
    if segments:
        for seg in segments:
            if seg.kind == "jump":
                for i in range(seg.start, seg.stop + 1):
                    kind[i] = "jump"
    header = (["i", "r_i"] + [f"theta_{k+1}" for k in range(dim)]
              + ["R_i", "d_edge_i", "kind"])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(chain.n_nodes):
            edge = chain.edge_d[i - 1] if i > 0 else 0.0
            w.writerow([i, format(chain.r[i], ".17g")]
                       + [format(x, ".17g") for x in chain.states[i]]
                       + [format(chain.residuals[i], ".17g"),
                          format(edge, ".17g"), kind[i]])
