"""Cauchy-Pompeiu decomposition and contour residues."""

import json
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helixlab.barriers import LimitConfig, limit_u_tilde_z
from helixlab.errors import DomainError, ParameterError, ToleranceError
from helixlab.forces import NeckConfiguration, net_force
from helixlab.laurent import (
    lowest_pole_contour,
    contour_residue,
    force_bracket,
    force_integral_case1,
    laurent_decompose,
    log_pole_kernel,
    residue_log_pole,
)

HOLES = [(0.5 + 0.2j, 0.2), (-0.6j, 0.15)]


def test_simple_pole_coefficients():
    p = HOLES[0][0]
    L = laurent_decompose(lambda z: 1 / (z - p), None, 2.0, HOLES, 30)
    assert L.inner_coeffs[0][0] == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(L.inner_coeffs[0][1:])) <= 1e-10
    assert np.max(np.abs(L.inner_coeffs[1])) <= 1e-10
    assert np.max(np.abs(L.outer_coeffs)) <= 1e-10
    assert L.correction(0.1 + 0.1j) == 0


def test_polynomial_coefficients():
    L = laurent_decompose(lambda z: z * z, None, 2.0, HOLES, 10)
    a = L.outer_coeffs
    assert a[2] == pytest.approx(1.0, abs=1e-12)
    assert abs(a[0]) <= 1e-10 and abs(a[1]) <= 1e-10
    assert all(np.max(np.abs(c)) <= 1e-10 for c in L.inner_coeffs)


def test_conjugate_is_reconstructed():
    L = laurent_decompose(np.conj, np.ones_like, 2.0, HOLES, 30)
    for z0 in (0.1 + 0.3j, -1.2 + 0.5j, 0.5 + 0.45j, 1.88j):
        assert abs(L.reconstruct(z0) - np.conj(z0)) <= 1e-6


def test_reconstruction_improves_with_K():
    p = HOLES[0][0] + 0.05
    g = lambda z: np.exp(z) + 1 / (z - p) + 0.3 / (z + 0.6j) ** 2
    pts = 1.2 * np.exp(1j * np.linspace(0, 2 * np.pi, 40, endpoint=False))
    errs = []
    for K in (2, 4, 8, 16, 24):
        L = laurent_decompose(g, None, 2.0, HOLES, K)
        errs.append(max(abs(L.reconstruct(z) - g(z)) for z in pts))
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-8


def test_hole_validation():
    with pytest.raises(DomainError):
        laurent_decompose(np.exp, None, 2.0, [(0.0, 0.5), (0.6, 0.2)])
    with pytest.raises(DomainError):
        laurent_decompose(np.exp, None, 2.0, [(1.8, 0.5)])
    with pytest.raises(ParameterError):
        laurent_decompose(np.exp, None, 2.0, (), K=0)


def test_evaluation_outside_domain():
    L = laurent_decompose(np.conj, np.ones_like, 2.0, HOLES, 8)
    with pytest.raises(DomainError):
        L.correction(HOLES[0][0])


def test_json_layout():
    L = laurent_decompose(lambda z: 1 / (z - HOLES[0][0]), None, 2.0, HOLES, 5)
    data = json.loads(L.to_json())
    assert data["truncation"] == 5
    assert len(data["outer_coeffs"]) == 6
    assert all(len(pair) == 2 for pair in data["outer_coeffs"])
    assert len(data["holes"]) == 2 and len(data["holes"][0]["coeffs"]) == 5
    assert data["holes"][0]["coeffs"][0] == pytest.approx([1.0, 0.0], abs=1e-12)
    assert set(data["tail"]) == {"outer", "hole0", "hole1"}


def _real_potential(rng):
    """``u = u_tilde + noise`` on a disk off the origin, with g = u_z and g_zbar = Lap u / 4."""
    cfg = LimitConfig.from_heights(rng.uniform(0, 1), [1.0, 2.0], rng.uniform(0.2, 2.0, 2))
    k = rng.uniform(-2, 2, (3, 2))
    amp = rng.uniform(-0.5, 0.5, 3)
    ph = rng.uniform(0, 2 * np.pi, 3)

    def g(z):
        out = limit_u_tilde_z(cfg, (np.abs(z), np.angle(z)))
        for (kx, ky), a, p in zip(k, amp, ph):
            s = -a * np.sin(kx * z.real + ky * z.imag + p)
            out = out + 0.5 * (kx * s - 1j * ky * s)
        return out

    def g_zbar(z):
        out = np.zeros(np.shape(z))
        for (kx, ky), a, p in zip(k, amp, ph):
            out = out - (kx * kx + ky * ky) * a * np.cos(kx * z.real + ky * z.imag + p) / 4
        return out

    return g, g_zbar


def test_principal_residues_are_real():
    rng = np.random.default_rng(11)
    for _ in range(10):
        g, gz = _real_potential(rng)
        L = laurent_decompose(g, gz, 1.2, [(1j, 0.2), (2j, 0.2)], 8, center=1.5j)
        for coeffs in L.inner_coeffs:
            assert abs(coeffs[0].imag) <= 1e-9


def test_contour_residue_examples():
    assert contour_residue(lambda z: 1 / z, 0, 1) == pytest.approx(1.0, abs=1e-14)
    assert contour_residue(log_pole_kernel(1.0, False), 1.0, 0.25) == pytest.approx(1.0, abs=1e-10)
    assert contour_residue(log_pole_kernel(2.0, True), 2.0, 0.5) == pytest.approx(-0.625, abs=1e-10)


def test_residue_closed_forms():
    assert residue_log_pole(1.0) == 1.0
    assert residue_log_pole(1j, weighted=True) == 0
    assert residue_log_pole(2.0, weighted=True) == -0.625
    with pytest.raises(ParameterError):
        residue_log_pole(0)


@settings(max_examples=20, deadline=None)
@given(st.floats(math.log(0.25), math.log(4.0)), st.floats(-math.pi, math.pi), st.booleans())
def test_residue_matches_quadrature(logr, phase, weighted):
    p = complex(mp.exp(logr) * mp.exp(1j * phase))
    q = contour_residue(log_pole_kernel(p, weighted), p, abs(p) / 4)
    assert abs(q - residue_log_pole(p, weighted)) <= 1e-9


def test_weighted_residue_high_precision():
    with mp.workdps(30):
        p = mp.mpc(0.7, 1.3)
        f = lambda z: (1 - z ** 2) / (4 * z ** 2) / mp.log(z / p) ** 2
        r = abs(p) / 4
        val = mp.quad(lambda t: f(p + r * mp.exp(1j * t)) * 1j * r * mp.exp(1j * t),
                      [0, 2 * mp.pi]) / (2j * mp.pi)
    assert abs(complex(val) - residue_log_pole(complex(p), True)) < 1e-12


def test_contour_residue_nonconvergence():
    with pytest.raises(ToleranceError):
        contour_residue(lambda z: np.abs(z - 1) ** 0.5, 0, 1)


def test_force_integral_two_poles():
    cfg = LimitConfig.from_heights(0.0, [0.5, 2.0], [1.0, 1.0])
    contour, closed = force_integral_case1(cfg)
    assert closed > 7.0 and contour > 7.0
    assert abs(contour - closed) <= 1e-8
    y = mp.mpf(0.5)
    d = mp.log(y) - mp.log(2)
    bracket = (1 - y ** 2) / (1 + y ** 2) - 2 * mp.pi ** 2 / (d * (d ** 2 + mp.pi ** 2))
    assert closed == pytest.approx(float(mp.pi * (y ** 2 + 1) / (2 * y) * bracket), rel=1e-14)
    assert force_bracket([0.5, 2.0], [1.0, 1.0]) > 0


def test_force_integral_symmetric_singleton():
    contour, closed = force_integral_case1(LimitConfig.from_heights(0.4, [1.0], [2.3]))
    assert abs(closed) == 0.0
    assert abs(contour) <= 1e-10


@settings(max_examples=10, deadline=None)
@given(st.lists(st.floats(-2.5, 2.5), min_size=1, max_size=4, unique=True),
       st.lists(st.floats(0.1, 3.0), min_size=4, max_size=4), st.floats(0, 2))
def test_force_integral_agreement(logs, masses, c0):
    ys = sorted(math.exp(v) for v in logs)
    if any(b / a < 1.05 for a, b in zip(ys, ys[1:])):
        return
    cfg = LimitConfig.from_heights(c0, ys, masses[:len(ys)])
    contour, closed = force_integral_case1(cfg)
    assert abs(contour - closed) <= 1e-8 * max(1.0, abs(closed))


def test_force_integral_radius_check():
    cfg = LimitConfig.from_heights(0.0, [0.5, 0.6], [1.0, 1.0])
    with pytest.raises(DomainError):
        force_integral_case1(cfg, eps=0.1)


@settings(max_examples=30)
@given(st.lists(st.floats(-3, 3), min_size=1, max_size=5, unique=True),
       st.lists(st.floats(0.1, 10), min_size=5, max_size=5))
def test_bracket_equals_lowest_force(logs, masses):
    ys = sorted(math.exp(v) for v in logs)
    if any(b / a < 1 + 1e-9 for a, b in zip(ys, ys[1:])):
        return
    cs = masses[:len(ys)]
    lhs = force_bracket(ys, cs)
    rhs = net_force(NeckConfiguration(ys, cs), 0)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_lowest_pole_contour_closed_form():
    ys, cs = [0.5, 1.0, 2.0], [1.0, 2.0, 0.5]
    contour, closed = lowest_pole_contour(ys, cs)
    expected = -math.pi * sum(cs[0] * c / (ys[0] - y) for y, c in zip(ys[1:], cs[1:]))
    assert closed == pytest.approx(expected, rel=1e-14)
    assert abs(contour - closed) <= 1e-8
    assert closed > 0
