"""Neumann eigenbases on an interval and a rectangle.

Eigenfunctions are the normalized cosines ``e_0 = 1/sqrt(L)``,
``e_k = sqrt(2/L) cos(k pi x / L)``; on the rectangle they are tensor
products.  The rectangle's corners violate the smoothness the general theory
asks for, but every identity checked here is spectral and unaffected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .spectral_core import SpectralBasis, SpectralCoeffs

__all__ = [
    "IntervalDomain",
    "RectangleDomain",
    "QuadratureSpec",
    "WeylCount",
    "interval_basis",
    "rectangle_basis",
    "basis_for",
    "domain_of",
    "quadrature_nodes",
    "eigenfunctions",
    "analyze",
    "synthesize",
    "dirichlet_form",
    "weyl_count",
    "boundary_flux",
]


@dataclass(frozen=True)
class IntervalDomain:
    L: float

    def __post_init__(self):
        if not (math.isfinite(self.L) and self.L > 0):
            raise ValueError(f"interval length must be finite and positive, got {self.L}")

    @property
    def dim(self) -> int:
        return 1

    @property
    def measure(self) -> float:
        return self.L

    def metadata(self) -> dict:
        return {"domain": "interval", "L": float(self.L)}


@dataclass(frozen=True)
class RectangleDomain:
    Lx: float
    Ly: float

    def __post_init__(self):
        for side in (self.Lx, self.Ly):
            if not (math.isfinite(side) and side > 0):
                raise ValueError(f"rectangle sides must be finite and positive, got {side}")

    @property
    def dim(self) -> int:
        return 2

    @property
    def measure(self) -> float:
        return self.Lx * self.Ly

    def metadata(self) -> dict:
        return {"domain": "rectangle", "Lx": float(self.Lx), "Ly": float(self.Ly)}


@dataclass(frozen=True)
class QuadratureSpec:
    """Composite Simpson rule with ``node_count`` points per axis."""

    node_count: int = 513
    rtol: float = 1e-10
    rule: str = "simpson"

    def __post_init__(self):
        if self.rule != "simpson":
            raise ValueError(f"unsupported quadrature rule {self.rule!r}")
        if self.node_count < 3 or self.node_count % 2 == 0:
            raise ValueError("Simpson needs an odd node count >= 3")


def interval_basis(domain: IntervalDomain, N: int) -> SpectralBasis:
    if N < 1:
        raise ValueError("N must be >= 1")
    k = np.arange(N)
    lam = (k * (math.pi / domain.L)) ** 2  # pi/L first: exact integers k^2 for L = pi
    meta = domain.metadata()
    return SpectralBasis(lam, tuple(int(i) for i in k), meta, ceiling=(N * (math.pi / domain.L)) ** 2)


def rectangle_basis(domain: RectangleDomain, Nx: int, Ny: int) -> SpectralBasis:
    if Nx < 1 or Ny < 1:
        raise ValueError("Nx and Ny must be >= 1")
    labels = [(p, q) for p in range(Nx) for q in range(Ny)]
    lam = [(p * (math.pi / domain.Lx)) ** 2 + (q * (math.pi / domain.Ly)) ** 2 for p, q in labels]
    # stable sort on lexicographically ordered labels breaks ties by (p, q)
    order = sorted(range(len(labels)), key=lambda i: lam[i])
    meta = domain.metadata() | {"Nx": Nx, "Ny": Ny}
    ceiling = min((Nx * (math.pi / domain.Lx)) ** 2, (Ny * (math.pi / domain.Ly)) ** 2)
    return SpectralBasis(
        np.array([lam[i] for i in order]), tuple(labels[i] for i in order), meta, ceiling
    )


def domain_of(basis: SpectralBasis) -> IntervalDomain | RectangleDomain:
    meta = basis.domain
    kind = meta.get("domain")
    if kind == "interval":
        return IntervalDomain(float(meta["L"]))
    if kind == "rectangle":
        return RectangleDomain(float(meta["Lx"]), float(meta["Ly"]))
    raise ValueError(f"basis is not tied to a model domain ({kind!r})")


def basis_for(meta: dict, N: int | None = None) -> SpectralBasis:
    """Rebuild a basis from ``domain_tag`` style metadata."""
    kind = meta.get("domain")
    if kind == "interval":
        return interval_basis(IntervalDomain(float(meta["L"])), int(N if N is not None else meta["N"]))
    if kind == "rectangle":
        return rectangle_basis(
            RectangleDomain(float(meta["Lx"]), float(meta["Ly"])), int(meta["Nx"]), int(meta["Ny"])
        )
    raise ValueError(f"unknown domain {kind!r}")


def _check_domain(domain, basis: SpectralBasis):
    if domain.metadata().items() - basis.domain.items():
        raise ValueError(f"basis ({basis.domain_tag}) was not generated from {domain}")


def _cos_modes(x: np.ndarray, k: np.ndarray, L: float) -> np.ndarray:
    """Normalized 1-D Neumann eigenfunctions, shape (len(k), len(x))."""
    scale = np.where(k == 0, 1.0 / math.sqrt(L), math.sqrt(2.0 / L))
    return scale[:, None] * np.cos(np.outer(k, x) * (math.pi / L))


def _sin_modes_dx(x: np.ndarray, k: np.ndarray, L: float) -> np.ndarray:
    """x-derivatives of :func:`_cos_modes`."""
    scale = np.where(k == 0, 0.0, math.sqrt(2.0 / L))
    return -(scale * k * math.pi / L)[:, None] * np.sin(np.outer(k, x) * (math.pi / L))


def _pq(basis: SpectralBasis) -> tuple[np.ndarray, np.ndarray]:
    labels = np.array(basis.mode_labels)
    return labels[:, 0], labels[:, 1]


def eigenfunctions(basis: SpectralBasis, points) -> np.ndarray:
    """Matrix ``E[k, i] = e_k(point_i)``."""
    domain = domain_of(basis)
    pts = np.asarray(points, dtype=float)
    if isinstance(domain, IntervalDomain):
        x = pts.reshape(-1)
        return _cos_modes(x, np.array(basis.mode_labels), domain.L)
    pts = pts.reshape(-1, 2)
    p, q = _pq(basis)
    return _cos_modes(pts[:, 0], p, domain.Lx) * _cos_modes(pts[:, 1], q, domain.Ly)


def _simpson_weights(n: int, h: float) -> np.ndarray:
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (h / 3.0)


def quadrature_nodes(domain, quad: QuadratureSpec):
    """Nodes and Simpson weights; rectangle nodes are (n*n, 2), x-major."""
    n = quad.node_count
    if isinstance(domain, IntervalDomain):
        x = np.linspace(0.0, domain.L, n)
        return x, _simpson_weights(n, domain.L / (n - 1))
    x = np.linspace(0.0, domain.Lx, n)
    y = np.linspace(0.0, domain.Ly, n)
    wx = _simpson_weights(n, domain.Lx / (n - 1))
    wy = _simpson_weights(n, domain.Ly / (n - 1))
    X, Y = np.meshgrid(x, y, indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel()]), np.outer(wx, wy).ravel()


def analyze(
    domain,
    f: Callable | np.ndarray,
    basis: SpectralBasis,
    quad: QuadratureSpec | None = None,
) -> SpectralCoeffs:
    """Project ``f`` onto the eigenbasis, ``c_k = int f e_k dx`` (composite Simpson).

    ``f`` is either point-evaluable (called with the node array) or an array
    of samples at :func:`quadrature_nodes`.
    """
    quad = quad or QuadratureSpec()
    _check_domain(domain, basis)
    nodes, weights = quadrature_nodes(domain, quad)
    if callable(f):
        vals = f(nodes) if isinstance(domain, IntervalDomain) else f(nodes[:, 0], nodes[:, 1])
    else:
        vals = f
    vals = np.asarray(vals, dtype=complex).reshape(-1)
    if vals.size != weights.size:
        raise ValueError(f"expected {weights.size} samples on the quadrature nodes, got {vals.size}")
    E = eigenfunctions(basis, nodes)
    return SpectralCoeffs(basis, E @ (weights * vals))


def _check_inside(domain, pts: np.ndarray, tol=1e-12):
    if isinstance(domain, IntervalDomain):
        bad = (pts < -tol * domain.L) | (pts > domain.L * (1 + tol))
    else:
        bad = (
            (pts[:, 0] < -tol * domain.Lx) | (pts[:, 0] > domain.Lx * (1 + tol))
            | (pts[:, 1] < -tol * domain.Ly) | (pts[:, 1] > domain.Ly * (1 + tol))
        )
    if np.any(bad):
        raise ValueError(f"{int(np.sum(bad))} points lie outside the closed domain")


def synthesize(coeffs: SpectralCoeffs, points) -> np.ndarray:
    """Partial sums ``sum_k c_k e_k(x)`` at the given points."""
    domain = domain_of(coeffs.basis)
    pts = np.asarray(points, dtype=float)
    pts = pts.reshape(-1) if domain.dim == 1 else pts.reshape(-1, 2)
    _check_inside(domain, pts)
    return coeffs.values @ eigenfunctions(coeffs.basis, pts)


def dirichlet_form(u: SpectralCoeffs, v: SpectralCoeffs) -> complex:
    """``s(u, v) = int grad u . conj(grad v) = sum_k lambda_k u_k conj(v_k)``."""
    if not u.basis.compatible(v.basis):
        raise ValueError("dirichlet_form needs both arguments in one basis")
    terms = u.eigenvalues * u.values * np.conj(v.values)
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


@dataclass(frozen=True)
class WeylCount:
    lam: float
    count: int
    leading_term: float
    truncation_limited: bool

    @property
    def difference(self) -> float:
        return self.count - self.leading_term

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "count": self.count,
            "leading_term": self.leading_term,
            "difference": self.difference,
            "truncation_limited": self.truncation_limited,
        }


def weyl_count(basis: SpectralBasis, lam: float) -> WeylCount:
    """``N(lam) = #{j : lambda_j <= lam}`` against ``(sqrt(lam)/2pi)^n omega_n |Omega|``."""
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    domain = domain_of(basis)
    n = domain.dim
    omega_n = {1: 2.0, 2: math.pi}[n]  # unit-ball volumes, exact closed forms
    # constant first: for the interval it is L/pi, exactly 1 when L = pi
    leading = omega_n * domain.measure / (2 * math.pi) ** n * math.sqrt(lam) ** n
    count = int(np.searchsorted(basis.eigenvalues, lam, side="right"))
    ceiling = basis.ceiling if basis.ceiling is not None else basis.eigenvalues[-1]
    return WeylCount(float(lam), count, leading, bool(lam >= ceiling))


def boundary_flux(coeffs: SpectralCoeffs, boundary_samples: int = 65) -> float:
    """Max ``|d/dnu|`` of the partial sum over sampled boundary points.

    On the interval the boundary is the two endpoints; on the rectangle each
    edge is sampled at ``boundary_samples`` points.
    """
    basis = coeffs.basis
    domain = domain_of(basis)
    c = coeffs.values
    if isinstance(domain, IntervalDomain):
        k = np.array(basis.mode_labels)
        d = c @ _sin_modes_dx(np.array([0.0, domain.L]), k, domain.L)
        return float(np.max(np.abs(d)))
    p, q = _pq(basis)
    s = np.linspace(0.0, 1.0, boundary_samples)
    xs, ys = s * domain.Lx, s * domain.Ly
    fluxes = []
    for xb in (0.0, domain.Lx):  # vertical edges: d/dx
        gx = _sin_modes_dx(np.array([xb]), p, domain.Lx)[:, 0]
        fluxes.append(c @ (gx[:, None] * _cos_modes(ys, q, domain.Ly)))
    for yb in (0.0, domain.Ly):  # horizontal edges: d/dy
        gy = _sin_modes_dx(np.array([yb]), q, domain.Ly)[:, 0]
        fluxes.append(c @ (_cos_modes(xs, p, domain.Lx) * gy[:, None]))
    return float(max(np.max(np.abs(f)) for f in fluxes))
