"""Inequality checkers and interior-estimate probes."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helixlab.domain import Dirichlet, DiscreteGraph, GraphDomain, Hole
from helixlab.errors import DomainError, HypothesisError, ParameterError
from helixlab.estimates import (
    HeightInstance,
    area_bound_check,
    energy_check,
    good_circle,
    good_circle_bound,
    height_bound,
    height_bound_check,
    laplacian_decay_probe,
    schauder_probe,
)
from helixlab.geometry import FLAT, SPHERE
from helixlab.mse_solver import solve

R1, R2 = math.sqrt(2), 10.0
H = math.acosh(R2) - math.acosh(R1)


def _catenoid_domain(hole_level=None, hole=None):
    bc = {"sigma_min": Dirichlet(-H), "sigma_max": Dirichlet(0.0)}
    holes = []
    if hole is not None:
        bc["hole0"] = Dirichlet(hole_level)
        holes = [hole]
    return GraphDomain((math.log(R1), math.log(R2)), (0.0, 2 * math.pi), bc,
                       holes=holes, periodic=True)


def _catenoid(n_sigma=401, scale=1.0):
    fn = lambda s, t: scale * (np.arccosh(np.exp(s)) - math.acosh(R2)) + 0 * t
    return DiscreteGraph.from_function(_catenoid_domain(), n_sigma, 16, fn)


def _neck_graph():
    """Solved annulus with one interior hole held below its surroundings."""
    hole = Hole.around(-4 + 0j, 0.6, math.pi)
    return solve(FLAT, _catenoid_domain(-1.1, hole), shape=(201, 128))


# -- closed forms -------------------------------------------------------------

def test_height_bound_reference_value():
    assert height_bound(2 * math.pi, R1, R2) == pytest.approx(
        2 * math.sqrt(2) * math.log(R2 / R1), rel=1e-15)
    assert height_bound(2 * math.pi, R1, R2) == pytest.approx(5.5324, abs=1e-4)


@given(st.floats(0.1, 50), st.floats(1.01, 3.0), st.floats(1.1, 100.0), st.floats(1.0, 2.0))
def test_height_bound_monotone(phi, r1, ratio, grow):
    r2 = r1 * ratio
    b = height_bound(phi, r1, r2)
    assert b > 0
    assert height_bound(phi * grow, r1, r2) >= b
    assert height_bound(phi, r1, r2 * grow) >= b


def test_height_bound_rejects_bad_radii():
    with pytest.raises(ParameterError):
        height_bound(1.0, 2.0, 1.5)
    with pytest.raises(ParameterError):
        height_bound(1.0, 0.0, 2.0)


# -- height bound -------------------------------------------------------------

def test_catenoid_instance_holds():
    rep = height_bound_check(HeightInstance(_catenoid(), R1, R2, H, 2 * math.pi))
    assert rep["h"] == pytest.approx(2.11185, abs=1e-5)
    assert rep["bound"] == pytest.approx(5.5324, abs=1e-4)
    assert rep["holds"]
    assert all(item["ok"] for item in rep["hypotheses"].values())
    assert rep["energy"]["holds"] and rep["energy"]["lhs"] <= rep["energy"]["rhs"]


def test_measured_flux_is_close_to_two_pi():
    rep = height_bound_check(HeightInstance(_catenoid(), R1, R2, H, None))
    assert rep["phi"] == pytest.approx(2 * math.pi, rel=1e-3)
    assert rep["holds"]


def test_solved_catenoid_instance_holds():
    g = solve(FLAT, _catenoid_domain(), shape=(401, 16))
    assert g.sup_distance(_catenoid()) < 1e-5
    rep = height_bound_check(HeightInstance(g, R1, R2, H, None))
    assert rep["holds"] and rep["energy"]["holds"]


def test_neck_instance_holds():
    g = _neck_graph()
    rep = height_bound_check(HeightInstance(g, R1, R2, H, None))
    assert rep["holds"]
    assert rep["hypotheses"]["hole_levels"]["ok"]
    assert rep["phi"] > 2 * math.pi
    assert rep["h"] <= rep["bound"]


def test_tiny_height_holds_trivially():
    eps = 1e-9
    g = _catenoid(scale=eps / H)
    rep = height_bound_check(HeightInstance(g, R1, R2, eps, 2 * math.pi))
    assert rep["holds"] and rep["h"] == pytest.approx(eps, rel=1e-9)


def test_wrong_height_names_the_hypothesis():
    inst = HeightInstance(_catenoid(), R1, R2, H + 0.5, 2 * math.pi)
    with pytest.raises(HypothesisError) as exc:
        height_bound_check(inst)
    assert exc.value.item == "inner_drop"
    rep = height_bound_check(inst, raise_on_failure=False)
    assert not rep["hypotheses"]["inner_drop"]["ok"]


def test_steep_graph_violates_gradient_bound():
    g = _catenoid(scale=3.0)
    with pytest.raises(HypothesisError) as exc:
        height_bound_check(HeightInstance(g, R1, R2, 3.0 * H, 2 * math.pi))
    assert exc.value.item == "gradient_bound"


def test_height_instance_needs_periodic_domain():
    dom = GraphDomain.uniform((0.5, 2.0), (0.0, 1.0), Dirichlet(0.0))
    with pytest.raises(ParameterError):
        HeightInstance(DiscreteGraph.zeros(dom, 21, 21), R1, R2, 1.0, 1.0)


def test_energy_check_on_catenoid():
    rep = energy_check(_catenoid(), H, 2 * math.pi)
    assert rep["holds"] and 0 < rep["lhs"] <= rep["rhs"]


# -- good circle --------------------------------------------------------------

def test_good_circle_constant_graph():
    g = DiscreteGraph.zeros(_catenoid_domain(), 101, 16)
    rep = good_circle(g, 0, 2.0, 4.0, 1.0, R1, R2)
    assert rep["line_integral"] == 0.0 and rep["holds"]


def test_good_circle_on_catenoid():
    rep = good_circle(_catenoid(), 0, 2.0, 4.0, 2 * math.pi, R1, R2)
    # |grad f| = 1/sqrt(r^2 - 1) decreases, so the outermost circle wins
    assert rep["r"] == pytest.approx(4.0, rel=1e-12)
    assert rep["line_integral"] == pytest.approx(2 * math.pi * 4 / math.sqrt(15), rel=1e-3)
    assert rep["line_integral"] <= rep["bound"]
    assert rep["bound"] == pytest.approx(good_circle_bound(2 * math.pi, R1, R2, 2.0, 4.0))


def test_good_circle_around_neck():
    g = _neck_graph()
    phi = height_bound_check(HeightInstance(g, R1, R2, H, None))["phi"]
    rep = good_circle(g, -4 + 0j, 0.7, 1.5, phi, R1, R2, p_argument=math.pi)
    assert rep["holds"] and 0.7 <= rep["r"] <= 1.5


def test_good_circle_domain_errors():
    g = _catenoid(101)
    with pytest.raises(DomainError):
        good_circle(g, 5.0, 2.0, 6.0, 2 * math.pi, R1, R2)
    dom = GraphDomain.uniform((0.0, 2.0), (0.0, 3.0), Dirichlet(0.0))
    with pytest.raises(DomainError):
        good_circle(DiscreteGraph.zeros(dom, 21, 21), 0, 2.0, 3.0, 1.0, R1, R2)


# -- interior-estimate probes -------------------------------------------------

def _helicoid_grid(t, n):
    dom = GraphDomain.uniform((0.0, math.log(2)), (0.0, 2 * math.pi),
                              Dirichlet(lambda s, th: t / (2 * math.pi) * th))
    return DiscreteGraph.from_function(dom, n, n, lambda s, th: t / (2 * math.pi) * th + 0 * s)


def test_schauder_zero_graph():
    dom = GraphDomain.uniform((0.0, 1.0), (0.0, 2.0), Dirichlet(0.0))
    rep = schauder_probe(DiscreteGraph.zeros(dom, 21, 21))
    assert rep["gradient_constant"] == 0.0 and rep["laplacian_constant"] == 0.0


def test_schauder_helicoid_is_stable():
    a, b = (schauder_probe(_helicoid_grid(0.1, n), 0.1) for n in (41, 81))
    assert b["gradient_constant"] == pytest.approx(a["gradient_constant"], rel=0.2)
    # theta is exactly harmonic, so only roundoff is left in the Laplacian constant
    assert a["laplacian_constant"] < 1e-10 and b["laplacian_constant"] < 1e-10


def test_schauder_catenoid_far_field():
    dom = GraphDomain.uniform((math.log(10), math.log(20)), (0.0, 2 * math.pi), Dirichlet(0.0),
                              periodic=True)
    fn = lambda s, th: np.arccosh(np.exp(s)) - math.acosh(15) + 0 * th
    a, b = (schauder_probe(DiscreteGraph.from_function(dom, n, 32, fn)) for n in (41, 81))
    for key in ("gradient_constant", "laplacian_constant"):
        assert math.isfinite(a[key]) and b[key] == pytest.approx(a[key], rel=0.2)


def test_schauder_rejects_small_t():
    with pytest.raises(ParameterError):
        schauder_probe(_helicoid_grid(0.1, 21), 0.01)


def _odd_annulus(t, n):
    fa = lambda s, th: t * (0.5 * np.cos(th) + 0.2 * np.sin(2 * th))
    fb = lambda s, th: t * (0.3 * np.sin(th) - 0.4 * np.cos(3 * th))
    dom = GraphDomain((-1.0, 1.0), (0.0, 2 * math.pi),
                      {"sigma_min": Dirichlet(fa), "sigma_max": Dirichlet(fb)}, periodic=True)
    return solve(SPHERE, dom, shape=(n, n - 1))


def test_laplacian_decay_converges_and_scales():
    vals = [laplacian_decay_probe(_odd_annulus(0.1, n), [], 0.1)["constant"] for n in (41, 81, 161)]
    assert all(math.isfinite(v) and v > 0 for v in vals)
    # the increments shrink, so the sampled constant settles to a finite value
    assert abs(vals[2] - vals[1]) < 0.7 * abs(vals[1] - vals[0])
    # and the t^3 normalisation makes it insensitive to the data scale
    other = laplacian_decay_probe(_odd_annulus(0.2, 81), [], 0.2)["constant"]
    assert other == pytest.approx(vals[1], rel=0.15)


# -- area bound ---------------------------------------------------------------

def _box():
    return GraphDomain.uniform((-1.0, 1.0), (0.3, 3.0), Dirichlet(lambda s, t: t / (2 * math.pi)))


def test_area_bound_on_helicoid_slab():
    hg = DiscreteGraph.from_function(_box(), 41, 41, lambda s, t: t / (2 * math.pi) + 0 * s)
    rep = area_bound_check(hg, 0.1, 0.4, 0.5, 2.5, SPHERE)
    assert rep["holds"] and rep["area"] <= rep["rhs"]


def test_area_of_flat_wedge():
    zg = DiscreteGraph.from_function(_box(), 41, 41, lambda s, t: 0 * s)
    rep = area_bound_check(zg, -1.0, 1.0, 0.0, 3.5, SPHERE)
    S = np.linspace(-1, 1, 4001)
    lam = 2 / (1 + np.exp(2 * S))
    exact = 2.7 * np.trapezoid(lam ** 2 * np.exp(2 * S), S)
    assert rep["area"] == pytest.approx(exact, rel=1e-3)
    assert rep["z_term"] == 0.0 and rep["holds"]
    slab = area_bound_check(zg, 0.0, 0.0, 0.0, 3.5, SPHERE)
    assert slab["area"] == pytest.approx(rep["area"]) and slab["holds"]


def test_area_bound_on_solved_graphs():
    fn = lambda s, t: 0.3 * np.sin(2 * t) * np.exp(-s * s) + 0.1 * s
    dom = GraphDomain.uniform((-1.0, 1.0), (0.3, 3.0), Dirichlet(fn))
    g = solve(SPHERE, dom, shape=(31, 31))
    for a, b in ((-0.2, 0.2), (-0.05, 0.05), (0.0, 0.3)):
        assert area_bound_check(g, a, b, 0.5, 2.5, SPHERE)["holds"]


def test_area_bound_errors():
    zg = DiscreteGraph.zeros(_box(), 21, 21)
    with pytest.raises(ParameterError):
        area_bound_check(zg, 1.0, 0.0, 0.5, 2.5)
    with pytest.raises(ParameterError):
        area_bound_check(zg, 0.0, 1.0, 2.5, 0.5)
    with pytest.raises(ParameterError):
        area_bound_check(zg, 0.0, 1.0, 5.0, 6.0)
    periodic = DiscreteGraph.zeros(_catenoid_domain(), 21, 16)
    with pytest.raises(ParameterError):
        area_bound_check(periodic, 0.0, 1.0, 0.5, 2.5)
