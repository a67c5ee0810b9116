"""Energy models on discretized metric state spaces.

A model is a time-dependent energy ``E(t, u)`` together with its power
``P(t, u) = dE/dt`` on a box in R^n (n <= 2), discretized as a uniform grid
with Euclidean distance.  This module evaluates the pointwise functionals
the rest of the package is built on:

- the perturbed energy ``F(t, u) = E(t, u) + d(x_o, u)``,
- the metric slope (analytic, difference-quotient, or duality-based),
- the generalized Moreau-Yosida value ``Y_tau(t, u)`` for a dissipation
  shape psi,
- the residual stability function ``R(t, u, mu)`` measuring the failure of
  stability against the perturbed dissipation
  ``D_mu(a, b) = d(a, b) + (mu/2) d(a, b)^2``,
- the plain stability gap against ``d`` alone.

All infima/suprema over the state space are exhaustive grid scans, so every
returned value carries a finite, checkable certificate.  Everything here is
a pure function of immutable inputs and safe to evaluate concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "DomainError",
    "ConfigurationError",
    "StateSpace",
    "EnergyModel",
    "SlopeEstimate",
    "QuadraticModel",
    "DoubleWellModel",
    "TwoWell2DModel",
    "CustomPolynomialModel",
    "make_model",
    "registered_models",
    "perturbed_energy",
    "slope_difference_quotient",
    "moreau_yosida",
    "slope_via_duality",
    "residual",
    "residual_grid",
    "d_stability_gap",
]


class DomainError(ValueError):
    """An argument lies outside the model's admissible domain."""


class ConfigurationError(ValueError):
    """A structural parameter (grid, neighborhood, ladder) is unusable."""


# chunk length for N x N grid broadcasts; keeps temporaries cache-sized
_CHUNK = 512


def _as_state(u) -> np.ndarray:
    a = np.atleast_1d(np.asarray(u, dtype=float))
    if a.ndim != 1:
        raise DomainError(f"a state must be a flat coordinate vector, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class StateSpace:
    """Uniform grid over a box in R^n with the Euclidean metric.

    ``points`` is (N, dim) in C order (last axis fastest), ``bounds`` is
    (dim, 2), and ``h`` the common grid spacing.  The grid is the whole
    state space: global minimizations scan ``points`` exhaustively.
    """

    points: np.ndarray
    bounds: np.ndarray
    h: float
    shape: tuple[int, ...]

    @classmethod
    def grid(cls, bounds: Sequence[Sequence[float]], h: float) -> "StateSpace":
        b = np.asarray(bounds, dtype=float)
        if b.ndim == 1:
            b = b[None, :]
        if b.ndim != 2 or b.shape[1] != 2:
            raise ConfigurationError(f"bounds must be (dim, 2), got {b.shape}")
        if b.shape[0] > 2:
            raise ConfigurationError("only 1D and 2D state spaces are supported")
        if not np.all(b[:, 1] > b[:, 0]):
            raise ConfigurationError("each bound must satisfy lo < hi")
        if not (h > 0):
            raise ConfigurationError("grid spacing h must be positive")
        axes = []
        for lo, hi in b:
            n = int(round((hi - lo) / h)) + 1
            if n < 2:
                raise ConfigurationError("grid must have at least 2 points per axis")
            axes.append(np.linspace(lo, hi, n))
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        return cls(points=pts, bounds=b, h=float(h),
                   shape=tuple(len(a) for a in axes))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    def dist(self, a, b) -> float:
        return float(np.linalg.norm(_as_state(a) - _as_state(b)))

    def dist_to_all(self, u) -> np.ndarray:
        """Distances from ``u`` to every grid point, shape (N,)."""
        diff = self.points - _as_state(u)[None, :]
        if self.dim == 1:
            return np.abs(diff[:, 0])
        return np.sqrt(np.einsum("ij,ij->i", diff, diff))

    def contains(self, u) -> bool:
        a = _as_state(u)
        return bool(np.all(a >= self.bounds[:, 0] - 1e-12)
                    and np.all(a <= self.bounds[:, 1] + 1e-12))

    def nearest_index(self, u) -> int:
        a = _as_state(u)
        if a.shape[0] != self.dim:
            raise DomainError(f"state has dim {a.shape[0]}, space has dim {self.dim}")
        idx = 0
        for k in range(self.dim):
            lo, hi = self.bounds[k]
            n = self.shape[k]
            step = (hi - lo) / (n - 1)
            i = int(round((a[k] - lo) / step))
            idx = idx * n + min(max(i, 0), n - 1)
        return idx

    def snap(self, u) -> np.ndarray:
        """Nearest grid point to ``u``."""
        return self.points[self.nearest_index(u)]

    def neighbors(self, i: int, radius: float | None = None) -> np.ndarray:
        """Indices of grid points within ``radius`` of point ``i`` (excluding i).

        Default radius is ``3h``, the difference-quotient neighborhood.
        """
        r = 3.0 * self.h if radius is None else float(radius)
        d = self.dist_to_all(self.points[i])
        out = np.flatnonzero(d <= r + 1e-12)
        return out[out != i]


@dataclass(frozen=True)
class SlopeEstimate:
    """A nonnegative slope value plus how it was obtained."""

    value: float
    method: str  # analytic | difference-quotient | duality
    mesh: float  # neighborhood radius or achieving tau
    clamped: bool = False  # True if a negative radicand was clamped to 0


class EnergyModel:
    """Base class: E(t, u) with separable time dependence.

    Concrete models satisfy ``E(t, u) = V(u) + a(t) * L(u) + c(t)`` which
    lets solvers cache the grid arrays ``V`` and ``L`` once per run.  The
    power is the classical derivative ``P = dE/dt = a'(t) L(u) + c'(t)``;
    models with nondifferentiable time dependence are out of scope.
    """

    name: str = "abstract"
    dim: int = 1

    def __init__(self, T: float, x_o=None, energy_offset: float = 1.0):
        if not (T > 0):
            raise ConfigurationError("time horizon T must be positive")
        self.T = float(T)
        self.energy_offset = float(energy_offset)
        self.x_o = np.zeros(self.dim) if x_o is None else _as_state(x_o)
        self._C_P: float | None = None

    # -- separable pieces ------------------------------------------------
    def static_part(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def load_part(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def time_coeffs(self, t: float) -> tuple[float, float]:
        """(a(t), c(t)) with E = V + a*L + c."""
        raise NotImplementedError

    def time_coeffs_rate(self, t: float) -> tuple[float, float]:
        """(a'(t), c'(t)); P = a'*L + c'."""
        raise NotImplementedError

    # -- generic evaluation ----------------------------------------------
    def _check_t(self, t: float) -> float:
        if not (-1e-12 <= t <= self.T + 1e-12):
            raise DomainError(f"t={t} outside [0, {self.T}]")
        return float(t)

    def _pts(self, u) -> tuple[np.ndarray, bool]:
        a = np.asarray(u, dtype=float)
        if a.ndim <= 1:
            return np.atleast_1d(a)[None, :], True
        return a, False

    def energy(self, t: float, u):
        t = self._check_t(t)
        pts, single = self._pts(u)
        a, c = self.time_coeffs(t)
        val = self.static_part(pts) + a * self.load_part(pts) + c
        return float(val[0]) if single else val

    def energy_grid(self, t: float, V: np.ndarray, L: np.ndarray) -> np.ndarray:
        a, c = self.time_coeffs(t)
        return V + a * L + c

    def power(self, t: float, u):
        t = self._check_t(t)
        pts, single = self._pts(u)
        da, dc = self.time_coeffs_rate(t)
        val = da * self.load_part(pts) + dc
        return float(val[0]) if single else val

    def analytic_slope(self, t: float, u):
        """|grad_u E|(t, u) when available, else None."""
        return None

    # -- constants ---------------------------------------------------------
    def power_constant(self, space: StateSpace, n_sample: int = 64) -> float:
        """C_P with |P| <= C_P * F on a coarse sample of [0,T] x box.

        F = E + d(x_o, .) must be positive on the box; raises otherwise.
        Cached after the first call.
        """
        if self._C_P is not None:
            return self._C_P
        ts = np.linspace(0.0, self.T, n_sample)
        step = max(1, space.n_points // (n_sample * n_sample))
        pts = space.points[::step]
        dists = np.linalg.norm(pts - self.x_o[None, :], axis=1)
        worst = 0.0
        for t in ts:
            F = self.energy(t, pts) + dists
            if np.any(F <= 0):
                raise ConfigurationError(
                    "perturbed energy is not positive on the box; "
                    "raise energy_offset")
            worst = max(worst, float(np.max(np.abs(self.power(t, pts)) / F)))
        self._C_P = 1.05 * worst + 1e-9
        return self._C_P

    def energy_range_bound(self, space: StateSpace, n_sample: int = 33) -> float:
        """Upper bound for max_t (max_u E - min_u E), with 10% margin."""
        ts = np.linspace(0.0, self.T, n_sample)
        step = max(1, space.n_points // 4096)
        pts = space.points[::step]
        rng = 0.0
        for t in ts:
            e = self.energy(t, pts)
            rng = max(rng, float(e.max() - e.min()))
        return 1.1 * rng + 1.0


class QuadraticModel(EnergyModel):
    """E(t, u) = (k/2)|u - center - speed*t|^2 + offset (convex play model)."""

    name = "quadratic"
    dim = 1

    def __init__(self, T: float, k: float = 1.0, speed: float = 2.0,
                 center: float = 0.0, x_o=None, energy_offset: float = 1.0):
        super().__init__(T, x_o=x_o, energy_offset=energy_offset)
        if k <= 0:
            raise ConfigurationError("stiffness k must be positive")
        self.k = float(k)
        self.speed = float(speed)
        self.center = float(center)

    # (k/2)(u - c - vt)^2 = [k/2 (u-c)^2] + t * [-kv(u-c)] + k v^2 t^2 / 2
    def static_part(self, pts):
        return 0.5 * self.k * (pts[:, 0] - self.center) ** 2 + self.energy_offset

    def load_part(self, pts):
        return -self.k * self.speed * (pts[:, 0] - self.center)

    def time_coeffs(self, t):
        return t, 0.5 * self.k * self.speed ** 2 * t * t

    def time_coeffs_rate(self, t):
        return 1.0, self.k * self.speed ** 2 * t

    def analytic_slope(self, t, u):
        t = self._check_t(t)
        pts, single = self._pts(u)
        val = self.k * np.abs(pts[:, 0] - self.center - self.speed * t)
        return float(val[0]) if single else val

    def play_solution(self, t):
        """Closed-form rate-independent output for u(0) = center, |.|-dead zone 1/k."""
        t = np.asarray(t, dtype=float)
        return self.center + np.maximum(0.0, self.speed * t - 1.0 / self.k)


class DoubleWellModel(EnergyModel):
    """E(t, u) = (u^2-1)^2/4 - ell(t) u + offset with ell(t) = rate*t + load0."""

    name = "double-well"
    dim = 1

    def __init__(self, T: float, rate: float = 1.0, load0: float = 0.0,
                 x_o=None, energy_offset: float = 2.0):
        super().__init__(T, x_o=x_o, energy_offset=energy_offset)
        self.rate = float(rate)
        self.load0 = float(load0)

    def static_part(self, pts):
        u = pts[:, 0]
        return (u * u - 1.0) ** 2 / 4.0 - self.load0 * u + self.energy_offset

    def load_part(self, pts):
        return -pts[:, 0]

    def time_coeffs(self, t):
        return self.rate * t, 0.0

    def time_coeffs_rate(self, t):
        return self.rate, 0.0

    def load(self, t):
        return self.rate * t + self.load0

    def analytic_slope(self, t, u):
        t = self._check_t(t)
        pts, single = self._pts(u)
        uu = pts[:, 0]
        val = np.abs(uu ** 3 - uu - self.load(t))
        return float(val[0]) if single else val


class TwoWell2DModel(EnergyModel):
    """2D bistable model: double well in x, quadratic confinement in y."""

    name = "two-well-2d"
    dim = 2

    def __init__(self, T: float, rate: float = 1.0, ky: float = 1.0,
                 x_o=None, energy_offset: float = 2.0):
        super().__init__(T, x_o=x_o, energy_offset=energy_offset)
        self.rate = float(rate)
        if ky <= 0:
            raise ConfigurationError("confinement ky must be positive")
        self.ky = float(ky)

    def static_part(self, pts):
        x, y = pts[:, 0], pts[:, 1]
        return (x * x - 1.0) ** 2 / 4.0 + 0.5 * self.ky * y * y + self.energy_offset

    def load_part(self, pts):
        return -pts[:, 0]

    def time_coeffs(self, t):
        return self.rate * t, 0.0

    def time_coeffs_rate(self, t):
        return self.rate, 0.0

    def analytic_slope(self, t, u):
        t = self._check_t(t)
        pts, single = self._pts(u)
        x, y = pts[:, 0], pts[:, 1]
        gx = x ** 3 - x - self.rate * t
        gy = self.ky * y
        val = np.hypot(gx, gy)
        return float(val[0]) if single else val


class CustomPolynomialModel(EnergyModel):
    """E(t, u) = poly(u) - rate*t*u + offset, coefficients in ascending order."""

    name = "custom-polynomial"
    dim = 1

    def __init__(self, T: float, coefficients: Iterable[float],
                 rate: float = 1.0, x_o=None, energy_offset: float = 1.0):
        super().__init__(T, x_o=x_o, energy_offset=energy_offset)
        coeffs = [float(c) for c in coefficients]
        if not coeffs:
            raise ConfigurationError("polynomial needs at least one coefficient")
        self.poly = np.polynomial.Polynomial(coeffs)
        self.dpoly = self.poly.deriv()
        self.rate = float(rate)

    def static_part(self, pts):
        return self.poly(pts[:, 0]) + self.energy_offset

    def load_part(self, pts):
        return -pts[:, 0]

    def time_coeffs(self, t):
        return self.rate * t, 0.0

    def time_coeffs_rate(self, t):
        return self.rate, 0.0

    def analytic_slope(self, t, u):
        t = self._check_t(t)
        pts, single = self._pts(u)
        val = np.abs(self.dpoly(pts[:, 0]) - self.rate * t)
        return float(val[0]) if single else val


_REGISTRY: dict[str, Callable[..., EnergyModel]] = {
    "quadratic": QuadraticModel,
    "double-well": DoubleWellModel,
    "two-well-2d": TwoWell2DModel,
    "custom-polynomial": CustomPolynomialModel,
}


def registered_models() -> tuple[str, ...]:
    return tuple(sorted(_REGISTRY))


def make_model(name: str, T: float, **params) -> EnergyModel:
    """Build a registered model from its name and parameter block."""
    try:
        ctor = _REGISTRY[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown model {name!r}; registered: {', '.join(registered_models())}"
        ) from None
    return ctor(T=T, **params)


# ---------------------------------------------------------------------------
# pointwise functionals
# ---------------------------------------------------------------------------

def perturbed_energy(m: EnergyModel, t: float, u) -> float:
    """F(t, u) = E(t, u) + d(x_o, u)."""
    return float(m.energy(t, u)) + float(np.linalg.norm(_as_state(u) - m.x_o))


def slope_difference_quotient(m: EnergyModel, s: StateSpace, t: float, u,
                              radius: float | None = None) -> SlopeEstimate:
    """Max of (E(t,u) - E(t,v))_+ / d(u,v) over grid neighbors of u.

    The neighborhood is the ball of the given radius (default 3h) minus u
    itself; an empty neighborhood is a configuration error.
    """
    r = 3.0 * s.h if radius is None else float(radius)
    u = _as_state(u)
    d = s.dist_to_all(u)
    mask = (d > 1e-14) & (d <= r + 1e-12)
    if not np.any(mask):
        raise ConfigurationError(f"no grid neighbors within radius {r}")
    e_u = float(m.energy(t, u))
    e_v = m.energy(t, s.points[mask])
    quot = np.maximum(e_u - e_v, 0.0) / d[mask]
    return SlopeEstimate(value=float(np.max(quot)), method="difference-quotient", mesh=r)


def _psi_cost(shape: str, d: np.ndarray, tau: float) -> np.ndarray:
    # tau * psi(d / tau) for the two supported shapes
    if shape == "quadratic":
        return d * d / (2.0 * tau)
    if shape == "ve":
        return d + d * d / (2.0 * tau)
    raise ConfigurationError(f"unknown dissipation shape {shape!r}")


def moreau_yosida(m: EnergyModel, s: StateSpace, t: float, u,
                  tau: float, shape: str = "quadratic") -> float:
    """Generalized Moreau-Yosida value min_v [tau*psi(d(u,v)/tau) + E(t,v)].

    ``shape='quadratic'`` is the classical envelope; ``shape='ve'`` with
    tau = 1/mu penalizes by d + (mu/2) d^2.
    """
    if not (tau > 0):
        raise DomainError("tau must be positive")
    d = s.dist_to_all(u)
    vals = m.energy(t, s.points) + _psi_cost(shape, d, tau)
    return float(np.min(vals))


def slope_via_duality(m: EnergyModel, s: StateSpace, t: float, u,
                      tau_sequence: Sequence[float] | None = None,
                      shape: str = "quadratic") -> SlopeEstimate:
    """Duality estimate sup_tau sqrt(2 (E - Y_tau) / tau).

    For the quadratic shape this estimates the metric slope; for the
    ve shape it estimates (slope - 1)_+ since psi*(S) = ((S-1)_+)^2 / 2.
    Negative radicands (rounding) are clamped to zero and flagged.
    """
    if tau_sequence is None:
        tau_sequence = np.geomspace(1e-1, 1e-3, 8)
    taus = [float(x) for x in tau_sequence]
    if any(b >= a for a, b in zip(taus, taus[1:])) or any(x <= 0 for x in taus):
        raise ConfigurationError("tau_sequence must be strictly decreasing and positive")
    e_u = float(m.energy(t, u))
    best, best_tau, clamped = 0.0, taus[0], False
    for tau in taus:
        gap = e_u - moreau_yosida(m, s, t, u, tau, shape=shape)
        if gap < 0:
            gap, clamped = 0.0, True
        est = math.sqrt(2.0 * gap / tau)
        if est > best:
            best, best_tau = est, tau
    return SlopeEstimate(value=best, method="duality", mesh=best_tau, clamped=clamped)


def residual(m: EnergyModel, s: StateSpace, t: float, u, mu: float) -> float:
    """R(t, u) = sup_v [E(t,u) - E(t,v) - d(u,v) - (mu/2) d(u,v)^2].

    Nonnegative (v = u is admissible); zero exactly on the grid-D-stable set.
    """
    if not (mu > 0):
        raise DomainError("mu must be positive")
    d = s.dist_to_all(u)
    e_u = float(m.energy(t, u))
    vals = e_u - m.energy(t, s.points) - d - 0.5 * mu * d * d
    return float(np.max(vals))


def residual_grid(m: EnergyModel, s: StateSpace, t: float, mu: float) -> np.ndarray:
    """R(t, ., mu) at every grid point, shape (N,). Chunked N x N scan."""
    if not (mu > 0):
        raise DomainError("mu must be positive")
    E = np.asarray(m.energy(t, s.points))
    N = s.n_points
    out = np.empty(N)
    pts = s.points
    for i0 in range(0, N, _CHUNK):
        i1 = min(N, i0 + _CHUNK)
        diff = pts[i0:i1, None, :] - pts[None, :, :]
        if s.dim == 1:
            d = np.abs(diff[:, :, 0])
        else:
            d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        out[i0:i1] = E[i0:i1] - np.min(E[None, :] + d + 0.5 * mu * d * d, axis=1)
    return out


def d_stability_gap(m: EnergyModel, s: StateSpace, t: float, u) -> float:
    """sup_v [E(t,u) - E(t,v) - d(u,v)]_+ over the grid; 0 iff u is d-stable."""
    d = s.dist_to_all(u)
    vals = float(m.energy(t, u)) - m.energy(t, s.points) - d
    return float(max(np.max(vals), 0.0))
