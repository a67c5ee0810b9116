"""Independent oracles for the test suite.

Everything here is deliberately written against plain numpy arrays on its
own dense grids, separate from the package's StateSpace/solver code paths:
brute-force minimizations, closed forms, and quadrature references.
"""

import numpy as np

# ---------------------------------------------------------------------------
# double-well landscape W(u) = (u^2 - 1)^2 / 4, load ell(t) = t
# ---------------------------------------------------------------------------

def dw_energy(t, u, offset=0.0):
    return (u * u - 1.0) ** 2 / 4.0 - t * u + offset


def dw_wprime(u):
    return u ** 3 - u


def dw_slope(t, u):
    return np.abs(dw_wprime(u) - t)


def maxwell_time_oracle(h=1e-4, dt=2e-3, T=2.0, u0=-1.0, lo=-2.0, hi=2.0):
    """Brute-force global-minimizer crossover scan for the energetic jump.

    Tracks the curve of the plain incremental recursion on a dense grid and
    returns the first time the minimizer of E(t, .) + |. - u| leaves the
    neighborhood of the tracked state.
    """
    g = np.arange(lo, hi + h / 2, h)
    W = (g * g - 1.0) ** 2 / 4.0
    u = u0
    t = 0.0
    while t < T:
        t += dt
        v = g[np.argmin(W - t * g + np.abs(g - u))]
        if abs(v - u) > 0.5:
            return t
        u = v
    raise AssertionError("no energetic jump found")


def delay_time_oracle(u0=-1.0, h=1e-6):
    """Local-stability breakdown time of the 1D sliding branch.

    Sliding keeps W'(u) = ell(t) - 1; the branch dies at the first local
    maximum of W' right of the initial state, so the delay time is
    1 + max W' over the connected branch.
    """
    u = np.arange(u0, 0.0, h)
    wp = dw_wprime(u)
    k = int(np.argmax(wp))
    return 1.0 + float(wp[k])


def dw_landing_state(t):
    """Right-branch state with W'(u) = t - 1 (bisection on [1, 2])."""
    lo, hi = 1.0, 2.0
    target = t - 1.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if dw_wprime(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def dw_viscous_cost_oracle(t, a, b, n=200_001):
    """1D closed-form viscous jump cost: int_a^b (|W' - t| v 1) du.

    Monotone paths are optimal in 1D because the integrand depends on
    position only, so backtracking only adds cost.
    """
    sigma = np.linspace(a, b, n)
    integrand = np.maximum(np.abs(dw_wprime(sigma) - t), 1.0)
    return float(np.trapezoid(integrand, sigma))


# ---------------------------------------------------------------------------
# generic 1D brute-force functionals on dense grids
# ---------------------------------------------------------------------------

def brute_residual(energy_fn, t, u, mu, lo=-2.0, hi=2.0, h=1e-4):
    """E(t,u) - min_v [E(t,v) + |u-v| + (mu/2)|u-v|^2] on a dense grid."""
    v = np.arange(lo, hi + h / 2, h)
    d = np.abs(v - u)
    return float(energy_fn(t, u) - np.min(energy_fn(t, v) + d + 0.5 * mu * d * d))


def brute_gap(energy_fn, t, u, lo=-2.0, hi=2.0, h=1e-4):
    """sup_v [E(t,u) - E(t,v) - |u-v|]_+ on a dense grid."""
    v = np.arange(lo, hi + h / 2, h)
    return float(max(np.max(energy_fn(t, u) - energy_fn(t, v) - np.abs(v - u)), 0.0))


def brute_argmin_step(energy_fn, t, u_prev, mu_eff, lo=-2.0, hi=2.0, h=1e-4):
    """argmin_v E(t,v) + |v-u| + (mu_eff/2)|v-u|^2 on a dense grid."""
    v = np.arange(lo, hi + h / 2, h)
    d = np.abs(v - u_prev)
    return float(v[np.argmin(energy_fn(t, v) + d + 0.5 * mu_eff * d * d)])


def play_solution(ts, speed=2.0, dead_zone=1.0):
    return np.maximum(0.0, speed * np.asarray(ts) - dead_zone)
