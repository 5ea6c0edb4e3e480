"""Killing-field fluxes by conormal integrals and by complex approximation."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helixlab.domain import Dirichlet, DiscreteGraph, GraphDomain
from helixlab.errors import (
    ContractViolation,
    OutOfDomainError,
    UnsupportedMetricError,
    WrongOperationError,
)
from helixlab.flux import (
    Curve,
    circle,
    flux_homology_check,
    horizontal_flux_complex,
    horizontal_flux_exact,
    loglog_slope,
    vertical_flux,
    vertical_flux_complex,
)
from helixlab.geometry import FLAT, SPHERE, CatenoidGraph, HelicoidGraph, killing_field
from helixlab.mse_solver import solve


class LinearGraph:
    """``f = a x + b y``: a graph with constant gradient."""

    def __init__(self, a, b):
        self.a, self.b = a, b

    def gradient(self, z, argument=None):
        z = np.asarray(z)
        return np.full(z.shape, self.a), np.full(z.shape, self.b)


def _sampled_catenoid(n_sigma=401):
    dom = GraphDomain.uniform((math.log(1.2), math.log(8.0)), (0.0, 2 * math.pi),
                              Dirichlet(0.0), periodic=True)
    return DiscreteGraph.from_function(dom, n_sigma, 64, CatenoidGraph().on_grid)


def _perturbed_graph(t, n=81, odd=False):
    """Solved sphere-minimal graph on the annulus 1/e < |z| < e, data scaled by t."""
    if odd:
        fa = lambda s, th: t * (0.5 * np.sin(th) + 0.2 * np.sin(2 * th))
        fb = lambda s, th: t * (0.3 * np.sin(th) - 0.4 * np.sin(3 * th))
        theta = (-math.pi, math.pi)
    else:
        fa = lambda s, th: t * (0.5 * np.cos(th) + 0.2 * np.sin(2 * th))
        fb = lambda s, th: t * (0.3 * np.sin(th) - 0.4 * np.cos(3 * th))
        theta = (0.0, 2 * math.pi)
    dom = GraphDomain((-1.0, 1.0), theta,
                      {"sigma_min": Dirichlet(fa), "sigma_max": Dirichlet(fb)}, periodic=True)
    return solve(SPHERE, dom, shape=(n, n - 1))


def test_catenoid_vertical_flux_is_two_pi():
    rep = vertical_flux(CatenoidGraph(), circle(0, 2.0), n=512)
    assert rep.value == pytest.approx(2 * math.pi, abs=1e-3)
    rep = vertical_flux(_sampled_catenoid(), circle(0, 2.0), n=512)
    assert rep.value == pytest.approx(2 * math.pi, abs=1e-3)
    assert rep.method == "exact_conormal"


def test_helicoid_vertical_flux_vanishes():
    rep = vertical_flux(HelicoidGraph(1.0), circle(0, 1.0))
    assert abs(rep.value) < 1e-14


def test_constant_graph_fluxes_vanish():
    g = LinearGraph(0.0, 0.0)
    c = circle(0.3 + 0.2j, 0.5)
    assert vertical_flux(g, c).value == 0.0
    assert horizontal_flux_complex(g, SPHERE, c, "chiY").value == 0.0
    # the f-independent part of the conormal integral is exact on closed curves
    assert abs(horizontal_flux_exact(g, SPHERE, c, "chiY").value) < 1e-12


def test_helicoid_chiY_values():
    hel = HelicoidGraph(0.1)
    c = circle(0, 1.0)
    assert abs(horizontal_flux_exact(hel, SPHERE, c, "chiY").value) < 5e-5
    assert abs(horizontal_flux_complex(hel, SPHERE, c, "chiY").value) < 1e-12


def test_linear_graph_complex_flux_vanishes():
    g = LinearGraph(0.01, 0.0)
    for c in (circle(0.5 + 0.5j, 0.3), circle(0, 2.0)):
        assert abs(horizontal_flux_complex(g, SPHERE, c, "chiY").value) < 1e-14


@settings(max_examples=20, deadline=None)
@given(st.floats(-0.2, 0.2), st.floats(-0.2, 0.2), st.floats(0.1, 1.5))
def test_reversal_negates(a, b, r):
    g = LinearGraph(a, b)
    c = circle(0.2, r)
    for op in (horizontal_flux_exact, horizontal_flux_complex):
        fwd = op(g, SPHERE, c, "chiX", n=128).value
        bwd = op(g, SPHERE, c.reversed(), "chiX", n=128).value
        assert bwd == pytest.approx(-fwd, abs=1e-15)
    assert vertical_flux(g, c.reversed(), n=128).value == pytest.approx(
        -vertical_flux(g, c, n=128).value, abs=1e-15)


def test_reversal_negates_on_solved_graph():
    g = _perturbed_graph(0.3, n=41)
    c = circle(0, 1.0)
    fwd = horizontal_flux_exact(g, SPHERE, c, "chiE", n=256).value
    bwd = horizontal_flux_exact(g, SPHERE, c.reversed(), "chiE", n=256).value
    assert bwd == pytest.approx(-fwd, abs=1e-15)


_LINEARITY_GRAPH = _perturbed_graph(0.5, n=41)


@settings(max_examples=20, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_linearity_in_field(a, b):
    g = _LINEARITY_GRAPH
    c = circle(0, 1.0)
    combo = lambda z: a * killing_field(SPHERE, "chiX", z) + b * killing_field(SPHERE, "chiY", z)
    for op in (horizontal_flux_exact, horizontal_flux_complex):
        lhs = op(g, SPHERE, c, combo, n=256).value
        rhs = a * op(g, SPHERE, c, "chiX", n=256).value + b * op(g, SPHERE, c, "chiY", n=256).value
        assert lhs == pytest.approx(rhs, abs=1e-12)


def test_rho_Y_flux_vanishes_for_odd_graph():
    g = _perturbed_graph(0.5, n=41, odd=True)
    for op in (horizontal_flux_exact, horizontal_flux_complex):
        assert abs(op(g, SPHERE, circle(0, 1.0), "chiY").value) < 1e-12


def test_reflected_curve_negates_for_odd_graph():
    g = _perturbed_graph(0.5, n=41, odd=True)
    c = circle(0.5 + 0.5j, 0.3)
    a = horizontal_flux_exact(g, SPHERE, c, "chiX", n=512).value
    b = horizontal_flux_exact(g, SPHERE, c.conjugated(), "chiX", n=512).value
    assert abs(a) > 1e-6
    assert b == pytest.approx(-a, abs=1e-10)


def test_homology_invariance_on_catenoid():
    cat = CatenoidGraph()
    assert flux_homology_check(cat, circle(0, 2.0), circle(0, 5.0), n=512) <= 1e-3
    g = _sampled_catenoid()
    assert flux_homology_check(g, circle(0, 2.0), circle(0, 5.0), n=512) <= 1e-3


def test_homology_identical_curves_is_zero():
    c = circle(0, 2.0)
    assert flux_homology_check(CatenoidGraph(), c, c) == 0.0


def test_homology_on_solved_graph_converges():
    gaps = []
    for n in (41, 81):
        g = _perturbed_graph(0.5, n=n)
        gaps.append(flux_homology_check(g, circle(0, 0.7), circle(0, 1.3), "chiY", SPHERE))
    assert gaps[1] < gaps[0] / 3


def test_homology_needs_closed_curves():
    c = circle(0, 2.0)
    open_curve = Curve(c.point, c.velocity, closed=False)
    with pytest.raises(ContractViolation):
        flux_homology_check(CatenoidGraph(), c, open_curve)


def test_field_errors():
    g = LinearGraph(0.1, 0.0)
    c = circle(0, 1.0)
    with pytest.raises(WrongOperationError):
        horizontal_flux_exact(g, SPHERE, c, "vertical")
    with pytest.raises(UnsupportedMetricError):
        horizontal_flux_complex(g, FLAT, c, "chiX")


def test_curve_leaving_domain():
    with pytest.raises(OutOfDomainError):
        vertical_flux(_sampled_catenoid(101), circle(0, 10.0))


def test_circle_orientation_and_normals():
    c = circle(1 + 1j, 0.5)
    assert c.orientation == "ccw"
    assert c.reversed().orientation == "cw"
    z, dz, _, _ = c.sample(64)
    nu = c.normals(64)
    # outward on a ccw circle, and (gamma', nu) negatively oriented
    assert np.allclose(nu, (z - (1 + 1j)) / 0.5, atol=1e-14)
    assert np.all(np.imag(np.conj(dz) * nu) < 0)
    assert c.length() == pytest.approx(math.pi, rel=1e-14)


def test_circle_argument_is_continuous():
    c = circle(0, 1.0, start_argument=4 * math.pi)
    s = np.linspace(0, 0.999, 500)
    arg = c.argument(s)
    assert arg[0] == pytest.approx(4 * math.pi)
    assert np.max(np.abs(np.diff(arg))) < 0.02


def test_report_json():
    rep = vertical_flux(CatenoidGraph(), circle(0, 2.0))
    data = json.loads(rep.to_json())
    assert {"value", "method", "curve_length", "max_gradient"} <= set(data)
    assert data["max_gradient"] >= 0 and math.isfinite(data["value"])


def test_vertical_complex_is_leading_order():
    hel = HelicoidGraph(0.1)
    assert abs(vertical_flux_complex(hel, circle(0, 1.0)).value) < 1e-14


def test_helicoid_formula_gap_is_roundoff():
    # every horizontal flux of a helicoid vanishes, so the two formulas agree exactly
    for t in (0.2, 0.1, 0.05):
        hel = HelicoidGraph(t)
        c = circle(0, 1.0)
        e = horizontal_flux_exact(hel, SPHERE, c, "chiY").value
        k = horizontal_flux_complex(hel, SPHERE, c, "chiY").value
        assert abs(e - k) < 1e-15


def test_formula_gap_scales_like_t4_on_solved_graph():
    ts = [0.2, 0.1, 0.05]
    gaps = []
    for t in ts:
        g = _perturbed_graph(t)
        c = circle(0, 1.0)
        e = horizontal_flux_exact(g, SPHERE, c, "chiY").value
        k = horizontal_flux_complex(g, SPHERE, c, "chiY").value
        gaps.append(abs(e - k))
    assert 3.5 <= loglog_slope(ts, gaps) <= 4.5
