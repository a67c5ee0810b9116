"""Model functionals: worked examples, frozen oracle values, invariants."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from ris_sim import (ConfigurationError, DomainError, StateSpace,
                     d_stability_gap, make_model, moreau_yosida,
                     perturbed_energy, residual, residual_grid,
                     slope_difference_quotient, slope_via_duality)
from ris_sim.models import QuadraticModel


# ---------------------------------------------------------------------------
# perturbed energy
# ---------------------------------------------------------------------------

def test_perturbed_energy_quadratic_trivials(quad_model):
    assert perturbed_energy(quad_model, 0.0, [0.0]) == 0.0
    assert perturbed_energy(quad_model, 0.0, [1.0]) == pytest.approx(1.5)


def test_perturbed_energy_double_well(dw_model):
    # W(1) = 0 and |1 - 0| = 1
    assert perturbed_energy(dw_model, 0.0, [1.0]) == pytest.approx(1.0)


def test_perturbed_energy_rejects_bad_time(quad_model):
    with pytest.raises(DomainError):
        perturbed_energy(quad_model, 5.0, [0.0])
    with pytest.raises(DomainError):
        perturbed_energy(quad_model, -0.5, [0.0])


def test_gronwall_envelope(dw_model, dw_space):
    # F(t,u) <= F(s,u) exp(C_P |t-s|) on sampled pairs
    m = make_model("double-well", T=2.0)  # offset 1 keeps F positive
    cp = m.power_constant(dw_space)
    rng = np.random.default_rng(7)
    for _ in range(200):
        u = rng.uniform(-2, 2, size=1)
        s, t = sorted(rng.uniform(0, 2, size=2))
        lhs = perturbed_energy(m, t, u)
        rhs = perturbed_energy(m, s, u) * math.exp(cp * (t - s))
        assert lhs <= rhs + 1e-9


def test_energy_fundamental_theorem(dw_model):
    # E(t,u) - E(s,u) = int_s^t P(r,u) dr within quadrature tolerance
    rng = np.random.default_rng(3)
    for _ in range(50):
        u = rng.uniform(-2, 2, size=1)
        s, t = sorted(rng.uniform(0, 2, size=2))
        rr = np.linspace(s, t, 257)
        quad = np.trapezoid([dw_model.power(r, u) for r in rr], rr)
        assert dw_model.energy(t, u) - dw_model.energy(s, u) == pytest.approx(
            quad, abs=1e-10)


# ---------------------------------------------------------------------------
# difference-quotient slope
# ---------------------------------------------------------------------------

def test_slope_dq_at_minimizer_is_zero(quad_model, quad_space):
    assert slope_difference_quotient(quad_model, quad_space, 0.0, [0.0]).value == 0.0


def test_slope_dq_linear_energy():
    # E(t,u) = u has slope 1 everywhere; oracle = |dE/du|
    m = make_model("custom-polynomial", T=1.0, coefficients=[0.0, 1.0],
                   rate=0.0, energy_offset=0.0)
    s = StateSpace.grid([[0.0, 1.0]], 1e-2)
    est = slope_difference_quotient(m, s, 0.0, [0.5])
    assert est.value == pytest.approx(1.0, abs=1e-9)
    assert est.method == "difference-quotient"


def test_slope_dq_constant_energy():
    m = make_model("custom-polynomial", T=1.0, coefficients=[2.0],
                   rate=0.0, energy_offset=0.0)
    s = StateSpace.grid([[0.0, 1.0]], 1e-2)
    assert slope_difference_quotient(m, s, 0.0, [0.5]).value == 0.0


def test_slope_dq_empty_neighborhood_is_config_error(quad_model, quad_space):
    with pytest.raises(ConfigurationError):
        slope_difference_quotient(quad_model, quad_space, 0.0, [0.0], radius=1e-9)


# ---------------------------------------------------------------------------
# Moreau-Yosida
# ---------------------------------------------------------------------------

def test_moreau_yosida_constant_energy():
    m = make_model("custom-polynomial", T=1.0, coefficients=[3.5],
                   rate=0.0, energy_offset=0.0)
    s = StateSpace.grid([[-1.0, 1.0]], 1e-3)
    for tau in (0.1, 1.0, 10.0):
        for shape in ("quadratic", "ve"):
            assert moreau_yosida(m, s, 0.0, [0.3], tau, shape) == pytest.approx(3.5)


def test_moreau_yosida_quadratic_closed_form():
    # min_v (1/2)(1-v)^2/(2*1) ... oracle by calculus: min_v q(v) = 1/4 at v = 1/2
    m = make_model("quadratic", T=1.0, speed=0.0, energy_offset=0.0)
    s = StateSpace.grid([[-2.0, 2.0]], 1e-4)
    y = moreau_yosida(m, s, 0.0, [1.0], 1.0, "quadratic")
    assert y == pytest.approx(0.25, abs=1e-6)


def test_moreau_yosida_ve_shape_matches_residual_formula(dw_model, dw_space):
    # tau*psi(d/tau) with tau = 1/mu equals d + (mu/2) d^2 by substitution
    mu = 3.0
    u = [0.4]
    e = dw_model.energy(1.0, u)
    y = moreau_yosida(dw_model, dw_space, 1.0, u, 1.0 / mu, "ve")
    r = residual(dw_model, dw_space, 1.0, u, mu)
    assert e - y == pytest.approx(r, abs=1e-12)


def test_moreau_yosida_never_exceeds_energy(dw_model, dw_space):
    rng = np.random.default_rng(11)
    for _ in range(50):
        t = rng.uniform(0, 2)
        u = dw_space.snap(rng.uniform(-2, 2, size=1))  # v = u must be admissible
        tau = 10 ** rng.uniform(-3, 1)
        shape = "quadratic" if rng.random() < 0.5 else "ve"
        assert moreau_yosida(dw_model, dw_space, t, u, tau, shape) \
            <= dw_model.energy(t, u) + 1e-12


# ---------------------------------------------------------------------------
# duality slope
# ---------------------------------------------------------------------------

def test_duality_constant_energy_zero():
    m = make_model("custom-polynomial", T=1.0, coefficients=[1.0],
                   rate=0.0, energy_offset=0.0)
    s = StateSpace.grid([[-1.0, 1.0]], 1e-3)
    assert slope_via_duality(m, s, 0.0, [0.0]).value == 0.0


def test_duality_quadratic_within_5pct():
    # analytic slope of (1/2)u^2 at u=1 is 1
    m = make_model("quadratic", T=1.0, speed=0.0, energy_offset=0.0)
    s = StateSpace.grid([[-2.0, 2.0]], 1e-3)
    est = slope_via_duality(m, s, 0.0, [1.0],
                            tau_sequence=np.geomspace(1e-1, 1e-3, 8))
    assert est.value == pytest.approx(1.0, rel=0.05)
    assert est.method == "duality"


def test_duality_ve_shape_zero_at_stable_point(dw_model, dw_space):
    # -1 is a global minimizer at zero load: E - Y = R = 0
    est = slope_via_duality(dw_model, dw_space, 0.0, [-1.0], shape="ve")
    assert est.value == 0.0


def test_duality_requires_decreasing_ladder(quad_model, quad_space):
    with pytest.raises(ConfigurationError):
        slope_via_duality(quad_model, quad_space, 0.0, [0.5],
                          tau_sequence=[1e-3, 1e-2])


# ---------------------------------------------------------------------------
# residual stability function
# ---------------------------------------------------------------------------

def test_residual_zero_at_global_minimizer(quad_model, quad_space):
    assert residual(quad_model, quad_space, 0.5, [0.5], mu=1.0) == 0.0


def test_residual_zero_at_symmetric_well(dw_model, dw_space):
    for mu in (0.1, 1.0, 10.0):
        assert residual(dw_model, dw_space, 0.0, [-1.0], mu) == 0.0


def test_residual_positive_on_unstable_branch(dw_model, dw_space):
    # oracle: dense brute-force minimization of E + D over [-2,2], h=1e-4;
    # the local descent absorbs most of the load, so the value is small but
    # genuinely positive
    r = residual(dw_model, dw_space, 1.2, [-1.0], mu=1.0)
    r_oracle = oracles.brute_residual(oracles.dw_energy, 1.2, -1.0, 1.0)
    assert r_oracle > 1e-3
    assert r == pytest.approx(r_oracle, abs=1e-3)


def test_residual_grid_matches_pointwise(dw_model, dw_space_coarse):
    R = residual_grid(dw_model, dw_space_coarse, 1.2, mu=1.0)
    for i in (0, 57, 200, 400):
        u = dw_space_coarse.points[i]
        assert R[i] == pytest.approx(
            residual(dw_model, dw_space_coarse, 1.2, u, 1.0), abs=1e-12)


def test_residual_rejects_nonpositive_mu(dw_model, dw_space):
    with pytest.raises(DomainError):
        residual(dw_model, dw_space, 0.0, [0.0], mu=0.0)


# ---------------------------------------------------------------------------
# d-stability gap
# ---------------------------------------------------------------------------

def test_gap_zero_at_tracked_minimizer(quad_model, quad_space):
    assert d_stability_gap(quad_model, quad_space, 0.5, [0.5]) == 0.0


def test_gap_boundary_of_stable_set(quad_model, quad_space):
    # u = t + 1 is marginally stable; beyond it the gap turns positive
    t = 0.5
    assert d_stability_gap(quad_model, quad_space, t, [t + 1.0]) \
        == pytest.approx(0.0, abs=1e-6)
    gap = d_stability_gap(quad_model, quad_space, t, [t + 1.2])
    oracle = oracles.brute_gap(lambda tt, u: 0.5 * (u - tt) ** 2, t, t + 1.2,
                               lo=-1.0, hi=2.0)
    assert gap > 0.01
    assert gap == pytest.approx(oracle, abs=1e-4)


def test_gap_constant_energy_zero_everywhere():
    m = make_model("custom-polynomial", T=1.0, coefficients=[1.0],
                   rate=0.0, energy_offset=0.0)
    s = StateSpace.grid([[-1.0, 1.0]], 1e-2)
    for u in (-1.0, 0.13, 0.99):
        assert d_stability_gap(m, s, 0.5, [u]) == 0.0


# ---------------------------------------------------------------------------
# cross-functional invariants
# ---------------------------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(t=st.floats(0.0, 2.0), u=st.floats(-2.0, 2.0),
       mu1=st.floats(0.01, 10.0), mu2=st.floats(0.01, 10.0))
def test_residual_nonnegative_and_monotone_in_mu(t, u, mu1, mu2):
    # nonnegativity needs u on the grid (y = u admissible in the inf)
    m = make_model("double-well", T=2.0, energy_offset=0.0)
    s = StateSpace.grid([[-2.0, 2.0]], 2e-2)
    uu = s.snap([u])
    lo, hi = sorted((mu1, mu2))
    r_lo = residual(m, s, t, uu, lo)
    r_hi = residual(m, s, t, uu, hi)
    assert r_lo >= 0.0
    assert r_hi >= 0.0
    assert r_hi <= r_lo + 1e-12


@settings(max_examples=40, deadline=None)
@given(t=st.floats(0.0, 2.0), u=st.floats(-1.9, 1.9), mu=st.floats(0.01, 10.0))
def test_d_stable_implies_D_stable(t, u, mu):
    m = make_model("double-well", T=2.0, energy_offset=0.0)
    s = StateSpace.grid([[-2.0, 2.0]], 2e-2)
    uu = s.snap([u])
    if d_stability_gap(m, s, t, uu) == 0.0:
        assert residual(m, s, t, uu, mu) <= 0.0 + 1e-15


def test_D_stable_implies_local_stability(dw_model, dw_space):
    # residual == 0 on the grid forces the difference quotient below
    # 1 + 1.5 mu h within the 3h neighborhood
    rng = np.random.default_rng(5)
    checked = 0
    for _ in range(400):
        t = rng.uniform(0, 2)
        u = dw_space.snap(rng.uniform(-2, 2, size=1))
        mu = 10 ** rng.uniform(-2, 1)
        if residual(dw_model, dw_space, t, u, mu) == 0.0:
            sl = slope_difference_quotient(dw_model, dw_space, t, u).value
            assert sl <= 1.0 + 1.5 * mu * dw_space.h + 1e-9
            checked += 1
    assert checked > 50


def test_duality_sqrt_2muR_bounds_excess_slope(dw_model, dw_space):
    # sqrt(2 mu R) >= (slope-1)_+ holds asymptotically in mu; at finite mu
    # the one-sided curvature bound Lam = sup E'' attenuates it by
    # sqrt(mu / (mu + Lam)).  Lam = max (3u^2 - 1) = 11 on [-2, 2].
    lam = 11.0
    rng = np.random.default_rng(13)
    for _ in range(100):
        t = rng.uniform(0, 2)
        u = dw_space.snap(rng.uniform(-1.9, 1.9, size=1))
        mu = 10 ** rng.uniform(-1, 2)
        r = residual(dw_model, dw_space, t, u, mu)
        excess = max(dw_model.analytic_slope(t, u) - 1.0, 0.0)
        bound = excess * math.sqrt(mu / (mu + lam))
        grid_tol = math.sqrt(mu * (mu + lam)) * dw_space.h / 2.0 + 1e-9
        assert math.sqrt(2.0 * mu * r) >= bound - grid_tol


def test_sqrt_2muR_tracks_excess_slope_at_large_mu(dw_model):
    # large mu: the duality estimate localizes and recovers the excess
    # slope, but the grid must resolve both the optimal displacement
    # (slope-1)/mu and the stickiness band mu*h/2 << excess
    mu = 1e3
    s = StateSpace.grid([[-2.0, 2.0]], 2e-5)
    rng = np.random.default_rng(17)
    count = 0
    for _ in range(60):
        t = rng.uniform(0, 2)
        u = s.snap(rng.uniform(-1.5, 1.5, size=1))
        excess = max(dw_model.analytic_slope(t, u) - 1.0, 0.0)
        if excess < 0.2:
            continue
        r = residual(dw_model, s, t, u, mu)
        assert math.sqrt(2.0 * mu * r) == pytest.approx(excess, rel=0.15)
        count += 1
    assert count > 10


# ---------------------------------------------------------------------------
# state space mechanics
# ---------------------------------------------------------------------------

def test_grid_metric_axioms(dw_space_coarse):
    rng = np.random.default_rng(2)
    pts = dw_space_coarse.points
    for _ in range(100):
        a, b, c = pts[rng.integers(0, len(pts), 3)]
        assert dw_space_coarse.dist(a, a) == 0.0
        assert dw_space_coarse.dist(a, b) == dw_space_coarse.dist(b, a) >= 0.0
        assert dw_space_coarse.dist(a, c) <= (dw_space_coarse.dist(a, b)
                                              + dw_space_coarse.dist(b, c) + 1e-12)


def test_grid_2d_construction_and_neighbors():
    s = StateSpace.grid([[-1.0, 1.0], [-0.5, 0.5]], 0.25)
    assert s.dim == 2
    assert s.shape == (9, 5)
    assert s.n_points == 45
    i = s.nearest_index([0.0, 0.0])
    nb = s.neighbors(i, radius=0.26)
    assert len(nb) == 4  # axis neighbors only at this radius
    # neighbor distance bound: <= 2h sqrt(dim)
    for j in nb:
        assert s.dist(s.points[i], s.points[j]) <= 2 * s.h * np.sqrt(2) + 1e-12


def test_snap_and_contains(quad_space):
    assert quad_space.contains([1.0])
    assert not quad_space.contains([5.0])
    assert quad_space.snap([0.50049])[0] == pytest.approx(0.5)


def test_space_rejects_bad_bounds():
    with pytest.raises(ConfigurationError):
        StateSpace.grid([[1.0, -1.0]], 0.1)
    with pytest.raises(ConfigurationError):
        StateSpace.grid([[0, 1], [0, 1], [0, 1]], 0.1)
    with pytest.raises(ConfigurationError):
        StateSpace.grid([[0.0, 1.0]], -0.1)


def test_model_registry_round_trip():
    from ris_sim.models import registered_models
    assert set(registered_models()) == {"quadratic", "double-well",
                                        "two-well-2d", "custom-polynomial"}
    with pytest.raises(ConfigurationError):
        make_model("nope", T=1.0)


def test_power_constant_bounds_power(dw_space):
    m = make_model("double-well", T=2.0)
    cp = m.power_constant(dw_space)
    rng = np.random.default_rng(21)
    for _ in range(200):
        t = rng.uniform(0, 2)
        u = rng.uniform(-2, 2, size=1)
        assert abs(m.power(t, u)) <= cp * (m.energy(t, u)
                                           + np.linalg.norm(u - m.x_o)) + 1e-9
