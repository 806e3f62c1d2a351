"""Diagonal semigroup calculus on truncated Neumann eigenbases.

Everything here acts mode by mode on coefficient sequences: the operator
``A = -Laplacian_N`` is ``diag(lambda_k)``, the forward semigroup multiplies
by ``exp(-lambda_k t)`` and its (unbounded) inverse by ``exp(+lambda_k t)``.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Sequence

import numpy as np
from scipy import integrate

__all__ = [
    "SpectralBasis",
    "SpectralCoeffs",
    "OverflowPolicy",
    "SemigroupOverflowError",
    "BackwardResult",
    "DecayEstimate",
    "LOG_REALMAX",
    "SOBOLEV_SCALES",
    "apply_forward_semigroup",
    "apply_backward_semigroup",
    "backward_overflow_mask",
    "amplify",
    "sobolev_norm",
    "sobolev_weights",
    "graph_norm_DA",
    "interpolation_half_norm",
    "lions_magenes_constant",
    "lions_magenes_norm",
    "estimate_decay_rate",
]

#: natural log of the largest finite double, ~709.78
LOG_REALMAX = math.log(sys.float_info.max)

SOBOLEV_SCALES = (-1, 0, 1, 2)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Ordered eigenvalues of a Neumann Laplacian, truncated to N modes.

    ``domain`` is a plain dict of geometry metadata (``{"domain": "interval",
    "L": 3.14...}``); ``ceiling`` is the smallest eigenvalue that is *not*
    retained, when known, and bounds the range where eigenvalue counts are
    exact.
    """

    eigenvalues: np.ndarray
    mode_labels: tuple = ()
    domain: dict = field(default_factory=lambda: {"domain": "custom"})
    ceiling: float | None = None

    def __post_init__(self):
        lam = np.array(self.eigenvalues, dtype=float).reshape(-1)
        if lam.size < 1:
            raise ValueError("a basis needs at least one mode")
        if not np.all(np.isfinite(lam)) or np.any(lam < 0):
            raise ValueError("eigenvalues must be finite and nonnegative")
        if np.any(np.diff(lam) < 0):
            raise ValueError("eigenvalues must be sorted ascending")
        labels = tuple(self.mode_labels) or tuple(range(lam.size))
        if len(labels) != lam.size:
            raise ValueError("one label per mode required")
        object.__setattr__(self, "eigenvalues", _frozen(lam))
        object.__setattr__(self, "mode_labels", labels)
        object.__setattr__(self, "domain", dict(self.domain))

    @property
    def truncation(self) -> int:
        return self.eigenvalues.size

    @property
    def domain_tag(self) -> str:
        """One-line ``key=value`` description, as written to file headers."""
        parts = [f"domain={self.domain.get('domain', 'custom')}"]
        for key, val in self.domain.items():
            if key != "domain":
                parts.append(f"{key}={val!r}" if isinstance(val, float) else f"{key}={val}")
        parts.append(f"N={self.truncation}")
        return " ".join(parts)

    def compatible(self, other: "SpectralBasis") -> bool:
        return self is other or (
            self.domain == other.domain
            and np.array_equal(self.eigenvalues, other.eigenvalues)
        )

    def __eq__(self, other):
        return isinstance(other, SpectralBasis) and self.compatible(other)

    def __hash__(self):
        return hash((self.truncation, self.domain_tag))

    def unit(self, k: int) -> "SpectralCoeffs":
        """Coefficients of the k-th normalized eigenfunction."""
        v = np.zeros(self.truncation, dtype=complex)
        v[k] = 1.0
        return SpectralCoeffs(self, v)

    def zeros(self) -> "SpectralCoeffs":
        return SpectralCoeffs(self, np.zeros(self.truncation, dtype=complex))

    def truncate(self, n: int) -> "SpectralBasis":
        """The basis of the first ``n`` modes."""
        if not 1 <= n <= self.truncation:
            raise ValueError(f"cannot truncate {self.truncation} modes to {n}")
        ceiling = self.eigenvalues[n] if n < self.truncation else self.ceiling
        return SpectralBasis(self.eigenvalues[:n], self.mode_labels[:n], self.domain, ceiling)


@dataclass(frozen=True, eq=False)
class SpectralCoeffs:
    """A finite coefficient vector ``c_k`` in a :class:`SpectralBasis`."""

    basis: SpectralBasis
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=complex).reshape(-1)
        if v.size != self.basis.truncation:
            raise ValueError(
                f"expected {self.basis.truncation} coefficients, got {v.size}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.basis.eigenvalues

    def __len__(self):
        return self.values.size

    def _check(self, other: "SpectralCoeffs"):
        if not self.basis.compatible(other.basis):
            raise ValueError("coefficient vectors live in different bases")

    def __add__(self, other):
        self._check(other)
        return SpectralCoeffs(self.basis, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return SpectralCoeffs(self.basis, self.values - other.values)

    def __mul__(self, scalar):
        return SpectralCoeffs(self.basis, self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralCoeffs(self.basis, -self.values)

    def truncate(self, n: int) -> "SpectralCoeffs":
        return SpectralCoeffs(self.basis.truncate(n), self.values[:n])


class OverflowPolicy(str, Enum):
    FAIL = "fail"
    ZERO = "zero"
    SATURATE = "saturate"


class SemigroupOverflowError(ArithmeticError):
    """Raised by the ``fail`` policy; ``modes`` lists the offending indices."""

    def __init__(self, modes: Sequence[int], message: str | None = None):
        self.modes = [int(k) for k in modes]
        shown = ", ".join(map(str, self.modes[:20]))
        more = "" if len(self.modes) <= 20 else f" (+{len(self.modes) - 20} more)"
        super().__init__(message or f"exp(+lambda*t) overflows in modes {shown}{more}")


@dataclass(frozen=True)
class BackwardResult:
    coeffs: SpectralCoeffs
    overflow: np.ndarray  # bool per mode

    @property
    def flagged_modes(self) -> list[int]:
        return [int(k) for k in np.flatnonzero(self.overflow)]


def apply_forward_semigroup(v: SpectralCoeffs, t: float) -> SpectralCoeffs:
    """``exp(-tA) v``: damp mode k by ``exp(-lambda_k t)``."""
    if not t >= 0:
        raise ValueError(f"forward semigroup needs t >= 0, got {t}")
    return SpectralCoeffs(v.basis, np.exp(-v.eigenvalues * t) * v.values)


def backward_overflow_mask(lam: np.ndarray, values: np.ndarray, t: float) -> np.ndarray:
    """Modes whose amplified magnitude ``exp(lambda t)|v|`` is not a finite double."""
    with np.errstate(divide="ignore"):
        log_mag = lam * t + np.log(np.abs(values))
    return log_mag >= LOG_REALMAX


def amplify(exponent: np.ndarray, values: np.ndarray) -> np.ndarray:
    """``exp(exponent) * values`` for entries whose result is representable.

    Falls back to ``exp(exponent + ln|v|)`` with the phase of ``v`` when the
    factor alone would overflow; zero entries stay zero.
    """
    exponent = np.asarray(exponent, dtype=float)
    values = np.asarray(values, dtype=complex)
    exponent, values = np.broadcast_arrays(exponent, values)
    out = np.zeros(values.shape, dtype=complex)
    nz = values != 0
    direct = nz & (exponent < LOG_REALMAX)
    out[direct] = np.exp(exponent[direct]) * values[direct]
    big = nz & ~direct
    v = values[big]
    out[big] = np.exp(exponent[big] + np.log(np.abs(v))) * np.exp(1j * np.angle(v))
    return out


def apply_backward_semigroup(
    v: SpectralCoeffs, t: float, policy: OverflowPolicy | str = OverflowPolicy.FAIL
) -> BackwardResult:
    """``exp(+tA) v`` with a per-mode exponent pre-check.

    Overflowing modes either abort (``fail``), are set to zero (``zero``) or
    are clipped to the largest finite magnitude keeping their phase
    (``saturate``); the last two always report the flags.
    """
    policy = OverflowPolicy(policy)
    if not t > 0:
        raise ValueError(f"backward semigroup needs t > 0, got {t}")
    lam, c = v.eigenvalues, v.values
    over = backward_overflow_mask(lam, c, t)
    if over.any() and policy is OverflowPolicy.FAIL:
        raise SemigroupOverflowError(np.flatnonzero(over))
    out = np.where(over, 0.0, amplify(np.where(over, 0.0, lam * t), c))
    if policy is OverflowPolicy.SATURATE:
        out[over] = sys.float_info.max * np.exp(1j * np.angle(c[over]))
    return BackwardResult(SpectralCoeffs(v.basis, out), _frozen(over))


def sobolev_weights(lam: np.ndarray, s: int) -> np.ndarray:
    if s not in SOBOLEV_SCALES:
        raise ValueError(f"Sobolev scale must be one of {SOBOLEV_SCALES}, got {s}")
    return (1.0 + lam) ** s


def _scaled_l2(a: np.ndarray) -> float:
    """Euclidean norm of nonnegative terms, rescaled so squares cannot overflow."""
    top = float(np.max(a)) if a.size else 0.0
    if top == 0.0 or not math.isfinite(top):
        return top
    return top * math.sqrt(math.fsum((a / top) ** 2))


def sobolev_norm(v: SpectralCoeffs, s: int) -> float:
    """``(sum_k (1+lambda_k)^s |c_k|^2)^(1/2)``, s in {-1, 0, 1, 2}."""
    w = sobolev_weights(v.eigenvalues, s)
    return _scaled_l2(np.sqrt(w) * np.abs(v.values))


def graph_norm_DA(v: SpectralCoeffs) -> float:
    """Graph norm of D(A): ``(|v|^2 + |Av|^2)^(1/2)``."""
    lam = v.eigenvalues
    return _scaled_l2(np.sqrt(1.0 + lam**2) * np.abs(v.values))


def interpolation_half_norm(v: SpectralCoeffs) -> float:
    """Norm on ``[D(A), H]_{1/2} = H^1`` realized with ``Lambda = 1 - Laplacian``.

    This is one member of a class of equivalent norms; the semigroup-based one
    is :func:`lions_magenes_norm` with ``theta = 1/2``.
    """
    return sobolev_norm(v, 1)


def _lm_integrand_head(s, theta):
    # ((1 - e^-s)/s)^2, smooth at 0; the s^(2 theta - 1) factor is the quad weight
    return (np.expm1(-s) / s) ** 2 if s > 0 else 1.0


def lions_magenes_constant(theta: float, rtol: float = 1e-12) -> float:
    """``C(theta) = int_0^inf s^(2 theta - 3) (1 - e^-s)^2 ds`` by adaptive quadrature."""
    if not 0 < theta < 1:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    head, _ = integrate.quad(
        _lm_integrand_head, 0.0, 1.0, args=(theta,), weight="alg",
        wvar=(2 * theta - 1, 0.0), epsabs=0.0, epsrel=rtol, limit=200,
    )
    tail, _ = integrate.quad(
        lambda s: s ** (2 * theta - 3) * (-np.expm1(-s)) ** 2, 1.0, np.inf,
        epsabs=0.0, epsrel=rtol, limit=200,
    )
    return head + tail


def lions_magenes_norm(a: SpectralCoeffs, theta: float, quadrature: Any = None) -> float:
    """Semigroup characterization of the ``[D(A), H]_theta`` norm.

    ``(|a|^2 + int_0^inf t^(2 theta - 1) |(e^{-tA} a - a)/t|^2 dt)^(1/2)``; for a
    diagonal generator the substitution ``s = lambda_k t`` turns the integral
    into ``C(theta) * sum_k lambda_k^(2 - 2 theta) |a_k|^2``.

    ``quadrature`` may carry an ``rtol`` attribute (e.g. a QuadratureSpec).
    """
    rtol = getattr(quadrature, "rtol", 1e-12) if quadrature is not None else 1e-12
    c = lions_magenes_constant(theta, rtol=rtol)
    lam = a.eigenvalues
    mag2 = np.abs(a.values) ** 2
    weights = 1.0 + c * lam ** (2.0 - 2.0 * theta)
    return math.sqrt(math.fsum(weights * mag2))


@dataclass(frozen=True)
class DecayEstimate:
    """Fit of ``ln|c_k| ~ alpha - rho * lambda_k`` over tail modes.

    ``rho`` is NaN and ``determined`` False when fewer than three usable modes
    (nonzero coefficients at two or more distinct eigenvalues) exist.
    """

    rho: float
    fit_residual: float
    modes_used: tuple[int, int]
    determined: bool = True
    intercept: float = float("nan")

    def supports(self, t: float) -> bool:
        """Coefficients decay at least like ``exp(-t lambda)``."""
        return self.determined and self.rho >= t

    def to_dict(self) -> dict:
        return {
            "rho": self.rho if self.determined else None,
            "residual": self.fit_residual if self.determined else None,
            "modes_used": list(self.modes_used),
            "determined": self.determined,
        }


def estimate_decay_rate(v: SpectralCoeffs, tail_fraction: float = 0.5) -> DecayEstimate:
    if not 0 < tail_fraction <= 1:
        raise ValueError("tail_fraction must lie in (0, 1]")
    n = v.basis.truncation
    start = n - max(1, math.ceil(tail_fraction * n))
    lam = v.eigenvalues[start:]
    mag = np.abs(v.values[start:])
    use = mag > 0
    rng = (start, n)
    if use.sum() < 3 or np.ptp(lam[use]) == 0:
        return DecayEstimate(float("nan"), float("nan"), rng, determined=False)
    x, y = lam[use], np.log(mag[use])
    design = np.column_stack([np.ones_like(x), -x])
    (alpha, rho), *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ np.array([alpha, rho])
    return DecayEstimate(float(rho), float(np.sqrt(np.mean(resid**2))), rng, True, float(alpha))
