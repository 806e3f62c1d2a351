"""Forward Cauchy problem ``u' + Au = f``, ``u(0) = u0``, solved mode by mode.

Sources are piecewise linear in time per mode, which makes the exponential
integrator below exact: on a step of length ``d`` with ``z = -lambda d``,

    u_{m+1} = e^z u_m + d [phi1(z) f_m + phi2(z) (f_{m+1} - f_m)].
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .spectral_core import SpectralBasis, SpectralCoeffs, sobolev_weights

__all__ = [
    "TimeGrid",
    "SourceTerm",
    "Trajectory",
    "HolderResult",
    "phi1",
    "phi2",
    "solve_forward",
    "compute_yield",
    "time_derivative",
    "norm_X0",
    "norm_X1",
    "norm_X_full",
    "norm_X_equivalent",
    "holder_seminorm",
    "regularity_ratio",
    "trapezoid",
]

SERIES_CUTOFF = 1e-3
_DIRECT_CUTOFF = 1.0
_SERIES_TERMS = 10


def _frozen(a):
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TimeGrid:
    nodes: np.ndarray

    def __post_init__(self):
        t = np.array(self.nodes, dtype=float).reshape(-1)
        if t.size < 2:
            raise ValueError("a time grid needs at least two nodes")
        if t[0] != 0.0:
            raise ValueError("time grids start at t = 0")
        if not np.all(np.isfinite(t)) or np.any(np.diff(t) <= 0):
            raise ValueError("time nodes must be finite and strictly increasing")
        object.__setattr__(self, "nodes", _frozen(t))

    @classmethod
    def uniform(cls, T: float, M: int) -> "TimeGrid":
        if not T > 0 or M < 1:
            raise ValueError("uniform grid needs T > 0 and M >= 1")
        t = np.linspace(0.0, T, M + 1)
        t[-1] = T
        return cls(t)

    @property
    def T(self) -> float:
        return float(self.nodes[-1])

    @property
    def M(self) -> int:
        return self.nodes.size - 1

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.nodes)

    def __eq__(self, other):
        return isinstance(other, TimeGrid) and np.array_equal(self.nodes, other.nodes)

    def __hash__(self):
        return hash((self.M, self.T))


def _check_block(basis: SpectralBasis, grid: TimeGrid, data, what: str) -> np.ndarray:
    a = np.array(data, dtype=complex)
    if a.shape != (basis.truncation, grid.nodes.size):
        raise ValueError(
            f"{what} must have shape (modes, nodes) = "
            f"{(basis.truncation, grid.nodes.size)}, got {a.shape}"
        )
    return a


@dataclass(frozen=True, eq=False)
class SourceTerm:
    """Samples ``f_k(t_m)``; linear in time between nodes."""

    basis: SpectralBasis
    grid: TimeGrid
    samples: np.ndarray

    def __post_init__(self):
        a = _check_block(self.basis, self.grid, self.samples, "source samples")
        if not np.all(np.isfinite(a)):
            raise ValueError("source samples must be finite")
        object.__setattr__(self, "samples", _frozen(a))

    @classmethod
    def zero(cls, basis: SpectralBasis, grid: TimeGrid) -> "SourceTerm":
        return cls(basis, grid, np.zeros((basis.truncation, grid.nodes.size)))

    @classmethod
    def constant(cls, coeffs: SpectralCoeffs, grid: TimeGrid) -> "SourceTerm":
        return cls(coeffs.basis, grid, np.repeat(coeffs.values[:, None], grid.nodes.size, axis=1))

    def at(self, m: int) -> SpectralCoeffs:
        return SpectralCoeffs(self.basis, self.samples[:, m])

    def l2_norm(self, s: int = 0) -> float:
        """``(int_0^T ||f(t)||_s^2 dt)^(1/2)`` by the trapezoid rule."""
        return math.sqrt(trapezoid(_scale_sq(self.basis, self.samples, s), self.grid))

    def sup_norm(self) -> float:
        return float(np.max(np.sqrt(np.sum(np.abs(self.samples) ** 2, axis=0))))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States ``u_k(t_m)``; ``overflow`` marks entries clipped by an overflow policy."""

    basis: SpectralBasis
    grid: TimeGrid
    states: np.ndarray
    provenance: str = "forward"
    overflow: np.ndarray | None = None

    def __post_init__(self):
        a = _check_block(self.basis, self.grid, self.states, "trajectory states")
        if self.provenance not in ("forward", "backward"):
            raise ValueError(f"unknown provenance {self.provenance!r}")
        object.__setattr__(self, "states", _frozen(a))
        if self.overflow is not None:
            object.__setattr__(self, "overflow", _frozen(np.array(self.overflow, dtype=bool)))

    def at(self, m: int) -> SpectralCoeffs:
        return SpectralCoeffs(self.basis, self.states[:, m])

    def initial(self) -> SpectralCoeffs:
        return self.at(0)

    def final(self) -> SpectralCoeffs:
        return self.at(-1)

    @property
    def flagged(self) -> bool:
        return self.overflow is not None and bool(self.overflow.any())


def _series(z: np.ndarray, k: int) -> np.ndarray:
    """``sum_j z^j / (j+k)!``, accurate for small |z|."""
    out = np.zeros_like(z)
    for j in reversed(range(_SERIES_TERMS)):
        out = out * z + 1.0 / math.factorial(j + k)
    return out


def _em1mz(z: np.ndarray) -> np.ndarray:
    """``e^z - 1 - z`` without cancellation for real z with |z| < 1.

    Halves z until it is below the series cutoff, then rebuilds with
    ``g(2x) = expm1(x)^2 + 2 g(x)``: both terms are nonnegative.
    """
    mag = np.abs(z)
    levels = np.maximum(0, np.ceil(np.log2(np.maximum(mag, 1e-300) / SERIES_CUTOFF))).astype(int)
    x = z / 2.0**levels
    g = x * x * _series(x, 2)
    for lev in range(int(levels.max(initial=0))):
        act = levels > lev
        xa = x[act]
        g[act] = np.expm1(xa) ** 2 + 2.0 * g[act]
        x[act] = 2.0 * xa
    return g


def phi1(z) -> np.ndarray:
    """``(e^z - 1)/z`` with ``phi1(0) = 1``."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < SERIES_CUTOFF
    out = np.empty_like(z)
    out[small] = _series(z[small], 1)
    zb = z[~small]
    out[~small] = np.expm1(zb) / zb
    return out


def phi2(z) -> np.ndarray:
    """``(e^z - 1 - z)/z^2`` with ``phi2(0) = 1/2``."""
    z = np.asarray(z, dtype=float)
    mag = np.abs(z)
    small = mag < SERIES_CUTOFF
    mid = (~small) & (mag < _DIRECT_CUTOFF)
    big = mag >= _DIRECT_CUTOFF
    out = np.empty_like(z)
    out[small] = _series(z[small], 2)
    zm = z[mid]
    out[mid] = _em1mz(zm) / (zm * zm)
    zb = z[big]
    out[big] = (np.expm1(zb) - zb) / (zb * zb)
    return out


def _check_pair(u0: SpectralCoeffs, f: SourceTerm):
    if not u0.basis.compatible(f.basis):
        raise ValueError("initial state and source live in different bases")


def _integrate(lam: np.ndarray, grid: TimeGrid, start: np.ndarray, f: np.ndarray, keep: bool):
    u = start.astype(complex)
    out = np.empty((lam.size, grid.nodes.size), dtype=complex) if keep else None
    if keep:
        out[:, 0] = u
    cache = {}  # uniform grids need one set of weights
    for m, d in enumerate(grid.steps):
        if d not in cache:
            z = -lam * d
            cache[d] = (np.exp(z), d * phi1(z), d * phi2(z))
        E, P1, P2 = cache[d]
        u = E * u + (P1 * f[:, m] + P2 * (f[:, m + 1] - f[:, m]))
        if keep:
            out[:, m + 1] = u
    return out if keep else u


def solve_forward(u0: SpectralCoeffs, f: SourceTerm) -> Trajectory:
    """Duhamel solution on the source's time grid, exact for piecewise-linear f."""
    _check_pair(u0, f)
    states = _integrate(u0.eigenvalues, f.grid, u0.values, f.samples, keep=True)
    return Trajectory(u0.basis, f.grid, states, "forward")


def compute_yield(f: SourceTerm) -> SpectralCoeffs:
    """``y_f = int_0^T exp(-(T - t)A) f(t) dt``: the final state reached from rest."""
    lam = f.basis.eigenvalues
    y = _integrate(lam, f.grid, np.zeros(lam.size, dtype=complex), f.samples, keep=False)
    return SpectralCoeffs(f.basis, y)


def time_derivative(traj: Trajectory, f: SourceTerm) -> np.ndarray:
    """``u'(t_m) = f(t_m) - A u(t_m)``, read off the equation."""
    if not (traj.basis.compatible(f.basis) and traj.grid == f.grid):
        raise ValueError("trajectory and source do not share basis and grid")
    if traj.provenance != "forward" and traj.flagged:
        warnings.warn("trajectory carries overflow flags; derivative is unreliable", stacklevel=2)
    return f.samples - traj.basis.eigenvalues[:, None] * traj.states


def trapezoid(values: np.ndarray, grid: TimeGrid) -> float:
    return float(np.trapezoid(values, grid.nodes))


def _scale_sq(basis: SpectralBasis, block: np.ndarray, s: int) -> np.ndarray:
    """Per-node ``||.||_s^2`` of a (modes, nodes) block."""
    w = sobolev_weights(basis.eigenvalues, s)
    return np.sum(w[:, None] * np.abs(block) ** 2, axis=0)


def _solution_norm(traj, f, s_space, s_sup, s_dt):
    du = time_derivative(traj, f)
    b = traj.basis
    return math.sqrt(
        trapezoid(_scale_sq(b, traj.states, s_space), traj.grid)
        + float(np.max(_scale_sq(b, traj.states, s_sup)))
        + trapezoid(_scale_sq(b, du, s_dt), traj.grid)
    )


def norm_X0(traj: Trajectory, f: SourceTerm) -> float:
    """``(int ||u||_1^2 + max_m ||u(t_m)||_0^2 + int ||u'||_{-1}^2)^(1/2)``.

    The sup over [0, T] is taken over grid nodes, so it is a lower bound.
    """
    return _solution_norm(traj, f, 1, 0, -1)


def norm_X1(traj: Trajectory, f: SourceTerm) -> float:
    """``(int ||u||_2^2 + max_m ||u(t_m)||_1^2 + int ||u'||_0^2)^(1/2)``."""
    return _solution_norm(traj, f, 2, 1, 0)


def norm_X_full(traj: Trajectory, f: SourceTerm) -> float:
    """X-norm including the redundant ``int ||u||_{-1}^2`` term."""
    extra = trapezoid(_scale_sq(traj.basis, traj.states, -1), traj.grid)
    return math.sqrt(norm_X0(traj, f) ** 2 + extra)


def norm_X_equivalent(traj: Trajectory, f: SourceTerm) -> float:
    """The equivalent norm ``(int ||u||_1^2 + int ||u'||_{-1}^2)^(1/2)``."""
    du = time_derivative(traj, f)
    return math.sqrt(
        trapezoid(_scale_sq(traj.basis, traj.states, 1), traj.grid)
        + trapezoid(_scale_sq(traj.basis, du, -1), traj.grid)
    )


@dataclass(frozen=True)
class HolderResult:
    value: float
    pair: tuple[int, int] | None


def holder_seminorm(f: SourceTerm, sigma: float) -> HolderResult:
    """``max_{s<t} ||f(t) - f(s)||_0 |t - s|^(-sigma)`` over grid node pairs."""
    if not 0 < sigma < 1:
        raise ValueError("sigma must lie in (0, 1)")
    t = f.grid.nodes
    best, pair = 0.0, None
    for i in range(t.size - 1):
        diff = np.sqrt(np.sum(np.abs(f.samples[:, i + 1:] - f.samples[:, [i]]) ** 2, axis=0))
        q = diff / (t[i + 1:] - t[i]) ** sigma
        j = int(np.argmax(q))
        if q[j] > best:
            best, pair = float(q[j]), (i, i + 1 + j)
    return HolderResult(best, pair)


def regularity_ratio(traj: Trajectory, f: SourceTerm) -> float:
    """``(int |u|^2 + |Au|^2 + |u'|^2)^(1/2) / (int |f|^2 + ||u0||_1^2)^(1/2)``."""
    lam = traj.basis.eigenvalues
    du = time_derivative(traj, f)
    mag = np.abs(traj.states) ** 2
    num = trapezoid(np.sum((1.0 + lam[:, None] ** 2) * mag + np.abs(du) ** 2, axis=0), traj.grid)
    u0 = traj.initial()
    den = f.l2_norm(0) ** 2 + float(np.sum((1.0 + lam) * np.abs(u0.values) ** 2))
    if den == 0:
        raise ValueError("zero data: the ratio is undefined")
    return math.sqrt(num / den)
