import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fvheat.model_domains import (
    IntervalDomain,
    QuadratureSpec,
    RectangleDomain,
    analyze,
    basis_for,
    boundary_flux,
    dirichlet_form,
    eigenfunctions,
    interval_basis,
    quadrature_nodes,
    rectangle_basis,
    synthesize,
    weyl_count,
)
from fvheat.spectral_core import SpectralCoeffs, sobolev_norm

PI2 = math.pi**2
# frozen from mpmath: int_0^1 x * sqrt(2) cos(k pi x) dx, k = 1, 3
C_X = {0: 0.5, 1: -0.28657958412537813, 2: 0.0, 3: -0.031842176013930903}


@pytest.mark.parametrize(
    "L, N, expected",
    [(math.pi, 4, [0, 1, 4, 9]), (1.0, 2, [0, PI2]), (2.5, 1, [0])],
)
def test_interval_eigenvalues(L, N, expected):
    b = interval_basis(IntervalDomain(L), N)
    np.testing.assert_allclose(b.eigenvalues, expected, rtol=1e-14)
    assert b.mode_labels == tuple(range(N))


@pytest.mark.parametrize(
    "Lx, Ly, expected, labels",
    [
        (1, 1, [0, PI2, PI2, 2 * PI2], [(0, 0), (0, 1), (1, 0), (1, 1)]),
        (1, 2, [0, PI2 / 4, PI2, 5 * PI2 / 4], [(0, 0), (0, 1), (1, 0), (1, 1)]),
    ],
)
def test_rectangle_eigenvalues(Lx, Ly, expected, labels):
    b = rectangle_basis(RectangleDomain(Lx, Ly), 2, 2)
    np.testing.assert_allclose(b.eigenvalues, expected, rtol=1e-14)
    assert list(b.mode_labels) == labels


def test_rectangle_single_mode():
    assert rectangle_basis(RectangleDomain(3, 4), 1, 1).eigenvalues.tolist() == [0.0]


@pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
def test_domain_validation(bad):
    with pytest.raises(ValueError):
        IntervalDomain(bad)
    with pytest.raises(ValueError):
        RectangleDomain(1.0, bad)


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(node_count=4)
    with pytest.raises(ValueError):
        QuadratureSpec(rule="gauss")


def test_basis_roundtrip_from_metadata():
    b = rectangle_basis(RectangleDomain(1.0, 2.0), 3, 4)
    assert basis_for(b.domain) == b
    ib = interval_basis(IntervalDomain(2.0), 7)
    assert basis_for(ib.domain, 7) == ib


class TestAnalyze:
    def test_pure_mode(self):
        d = IntervalDomain(2.0)
        b = interval_basis(d, 6)
        c = analyze(d, lambda x: math.sqrt(2 / 2.0) * np.cos(2 * math.pi * x / 2.0), b, QuadratureSpec(1025))
        np.testing.assert_allclose(c.values, np.eye(6)[2], atol=1e-8)

    def test_constant(self):
        d = IntervalDomain(3.0)
        c = analyze(d, lambda x: np.ones_like(x), interval_basis(d, 5))
        np.testing.assert_allclose(c.values, [math.sqrt(3), 0, 0, 0, 0], atol=1e-10)

    def test_linear_function(self):
        d = IntervalDomain(1.0)
        c = analyze(d, lambda x: x, interval_basis(d, 4), QuadratureSpec(2049))
        np.testing.assert_allclose(c.values.real, [C_X[k] for k in range(4)], atol=1e-10)
        # closed form sqrt(2)((-1)^k - 1)/(k pi)^2
        assert C_X[1] == pytest.approx(-2 * math.sqrt(2) / PI2, rel=1e-15)

    def test_rectangle_pure_mode(self):
        d = RectangleDomain(1.0, 2.0)
        b = rectangle_basis(d, 3, 3)
        k = b.mode_labels.index((1, 2))
        target = b.unit(k)
        nodes, _ = quadrature_nodes(d, QuadratureSpec(257))
        vals = synthesize(target, nodes)
        c = analyze(d, vals, b, QuadratureSpec(257))
        np.testing.assert_allclose(c.values, target.values, atol=1e-8)

    def test_linearity(self, rng):
        d = IntervalDomain(1.5)
        b = interval_basis(d, 8)
        f = lambda x: np.exp(-x) * np.sin(3 * x)
        g = lambda x: x**2
        alpha = 2 - 0.5j
        lhs = analyze(d, lambda x: alpha * f(x) + g(x), b)
        rhs = analyze(d, f, b) * alpha + analyze(d, g, b)
        np.testing.assert_allclose(lhs.values, rhs.values, atol=1e-12)

    def test_domain_mismatch(self):
        with pytest.raises(ValueError):
            analyze(IntervalDomain(1.0), lambda x: x, interval_basis(IntervalDomain(2.0), 3))

    def test_orthonormal_gram(self):
        d = RectangleDomain(1.0, 1.5)
        b = rectangle_basis(d, 4, 3)
        nodes, w = quadrature_nodes(d, QuadratureSpec(257))
        E = eigenfunctions(b, nodes)
        np.testing.assert_allclose((E * w) @ E.T, np.eye(b.truncation), atol=1e-8)


class TestSynthesize:
    def test_constant(self):
        L = 2.0
        b = interval_basis(IntervalDomain(L), 4)
        vals = synthesize(SpectralCoeffs(b, [math.sqrt(L), 0, 0, 0]), np.linspace(0, L, 9))
        np.testing.assert_allclose(vals, 1.0, rtol=1e-14)

    def test_unit_mode(self):
        L = 3.0
        b = interval_basis(IntervalDomain(L), 5)
        x = np.linspace(0, L, 11)
        np.testing.assert_allclose(synthesize(b.unit(3), x), math.sqrt(2 / L) * np.cos(3 * math.pi * x / L), atol=1e-14)

    def test_outside_rejected(self):
        b = interval_basis(IntervalDomain(1.0), 3)
        with pytest.raises(ValueError):
            synthesize(b.unit(0), [1.5])

    @pytest.mark.parametrize("shape", ["interval", "rectangle"])
    def test_roundtrip(self, rng, shape):
        if shape == "interval":
            d, b = IntervalDomain(2.0), interval_basis(IntervalDomain(2.0), 12)
        else:
            d, b = RectangleDomain(1.0, 2.0), rectangle_basis(RectangleDomain(1.0, 2.0), 4, 4)
        c = SpectralCoeffs(b, (rng.standard_normal(b.truncation) + 1j * rng.standard_normal(b.truncation)) / (1 + b.eigenvalues))
        nodes, _ = quadrature_nodes(d, QuadratureSpec(257))
        back = analyze(d, synthesize(c, nodes), b, QuadratureSpec(257))
        assert np.linalg.norm(back.values - c.values) <= 1e-6


class TestDirichletForm:
    def test_examples(self):
        b = interval_basis(IntervalDomain(math.pi), 2)
        assert dirichlet_form(b.unit(0), b.unit(0)) == 0
        assert dirichlet_form(b.unit(1), b.unit(1)) == 1

    @given(st.integers(1, 30), st.integers(0, 2**32 - 1))
    def test_identity(self, n, seed):
        r = np.random.default_rng(seed)
        b = interval_basis(IntervalDomain(1.3), n)
        v = SpectralCoeffs(b, r.standard_normal(n) + 1j * r.standard_normal(n))
        s = dirichlet_form(v, v)
        assert abs(s.imag) <= 1e-14 * abs(s)
        assert s.real == pytest.approx(sobolev_norm(v, 1) ** 2 - sobolev_norm(v, 0) ** 2, rel=1e-12, abs=1e-12)

    def test_basis_mismatch(self):
        a = interval_basis(IntervalDomain(1.0), 2)
        b = interval_basis(IntervalDomain(2.0), 2)
        with pytest.raises(ValueError):
            dirichlet_form(a.unit(0), b.unit(0))


class TestWeyl:
    def test_interval_example(self):
        w = weyl_count(interval_basis(IntervalDomain(math.pi), 10), 10.0)
        assert w.count == 4
        assert w.leading_term == pytest.approx(math.sqrt(10))
        assert not w.truncation_limited

    def test_zero(self):
        assert weyl_count(interval_basis(IntervalDomain(1.0), 3), 0.0).count == 1

    def test_rectangle(self):
        w = weyl_count(rectangle_basis(RectangleDomain(1, 1), 4, 4), 2 * PI2)
        assert w.count == 4
        assert w.leading_term == pytest.approx(2 * PI2 / (4 * math.pi))

    def test_truncation_flag(self):
        assert weyl_count(interval_basis(IntervalDomain(math.pi), 3), 9.0).truncation_limited

    @given(st.floats(0, 1e4), st.floats(0.2, 5))
    def test_interval_bound(self, lam, L):
        b = interval_basis(IntervalDomain(L), int(L * math.sqrt(1e4) / math.pi) + 3)
        w = weyl_count(b, lam)
        assert not w.truncation_limited
        assert abs(w.difference) <= 1

    def test_eigenvalue_asymptotics(self):
        b = interval_basis(IntervalDomain(2.0), 400)
        j = np.arange(1, 400)
        assert b.eigenvalues[399] / 399**2 == pytest.approx((math.pi / 2.0) ** 2)
        r = rectangle_basis(RectangleDomain(1, 1), 40, 40)
        ratios = r.eigenvalues[1:] / np.arange(1, r.truncation)
        # sorted 2D spectrum grows linearly in j within the fully resolved range
        limit = np.searchsorted(r.eigenvalues, r.ceiling)
        assert np.max(ratios[: limit - 1]) < 20
        assert np.all(np.diff(b.eigenvalues[j]) > 0)


class TestBoundaryFlux:
    def test_interval(self, rng):
        b = interval_basis(IntervalDomain(2.0), 40)
        c = SpectralCoeffs(b, rng.standard_normal(40))
        assert boundary_flux(c) <= 1e-12 * sobolev_norm(c, 1) * 40

    def test_zero(self):
        assert boundary_flux(interval_basis(IntervalDomain(1.0), 4).zeros()) == 0

    def test_rectangle(self, rng):
        b = rectangle_basis(RectangleDomain(1.0, 2.0), 6, 6)
        c = SpectralCoeffs(b, rng.standard_normal(b.truncation))
        assert boundary_flux(c) <= 1e-10 * sobolev_norm(c, 1) * b.truncation
