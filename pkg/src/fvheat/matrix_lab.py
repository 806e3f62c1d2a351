"""Finite-dimensional laboratory for non-self-adjoint generators.

Conventions: ``A`` is the (coercive, possibly non-normal) operator and the
semigroup is generated by ``-A``, so ``u(t) = expm(-tA) u0`` solves
``u' + Au = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize

__all__ = [
    "MatrixOperator",
    "CoercivityProfile",
    "HeightCurve",
    "OverflowBudgetError",
    "expm",
    "matrix_exponential",
    "coercivity_profile",
    "height_curve",
    "logconvexity_values",
    "logconvexity_criterion_min",
    "logconvexity_check",
    "find_logconvexity_violation",
    "hyponormality_gap",
    "sector_check",
    "laplace_identity_check",
    "translation_check",
    "injectivity_probe",
    "matrix_fvp_solve",
    "matrix_phi",
    "advection_matrix",
    "advection_diffusion_builder",
    "random_coercive",
    "OVERFLOW_BUDGET",
]

EPS = np.finfo(float).eps
#: largest admissible T * (spectral abscissa of A) for exp(TA)
OVERFLOW_BUDGET = 300.0


class OverflowBudgetError(ArithmeticError):
    pass


@dataclass(frozen=True, eq=False)
class MatrixOperator:
    A: np.ndarray

    def __post_init__(self):
        a = np.array(self.A, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError(f"need a square n x n matrix with n >= 1, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix entries must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "A", a)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def H(self) -> np.ndarray:
        return self.A.conj().T

    def hermitian_part(self) -> np.ndarray:
        return 0.5 * (self.A + self.H)

    def spectral_abscissa(self) -> float:
        """``max Re`` over the eigenvalues of ``A``."""
        return float(np.max(np.linalg.eigvals(self.A).real))


# Pade [13/13] coefficients and the scaling threshold (Higham 2005)
_B13 = (
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0,
)
_THETA13 = 5.371920351148152


def expm(M: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling and squaring with the [13/13] Pade approximant.

    The scaling ``s`` brings ``||2^-s M||_1 <= 5.37``, where the approximant's
    backward error is below unit roundoff; the computed result is then
    ``exp(M + E)`` with ``||E|| <= u ||M||`` up to the conditioning of the
    squaring phase.
    """
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("expm needs a square matrix")
    n = M.shape[0]
    dtype = np.result_type(M.dtype, float)
    norm1 = float(np.max(np.sum(np.abs(M), axis=0))) if n else 0.0
    if not math.isfinite(norm1):
        raise ValueError("matrix has non-finite entries")
    if norm1 == 0.0:
        return np.eye(n, dtype=dtype)
    s = max(0, int(math.ceil(math.log2(norm1 / _THETA13)))) if norm1 > _THETA13 else 0
    X = M / 2.0**s
    b = _B13
    ident = np.eye(n, dtype=dtype)
    X2 = X @ X
    X4 = X2 @ X2
    X6 = X4 @ X2
    U = X @ (X6 @ (b[13] * X6 + b[11] * X4 + b[9] * X2) + b[7] * X6 + b[5] * X4 + b[3] * X2 + b[1] * ident)
    V = X6 @ (b[12] * X6 + b[10] * X4 + b[8] * X2) + b[6] * X6 + b[4] * X4 + b[2] * X2 + b[0] * ident
    R = np.linalg.solve(V - U, V + U)
    for _ in range(s):
        R = R @ R
    return R


def _budget_check(Aop: MatrixOperator, t: float):
    """``expm(-tA)`` grows like ``exp(t * max Re eig(-A))``; refuse past the budget."""
    growth = float(np.max((-t * np.linalg.eigvals(Aop.A)).real))
    if growth > OVERFLOW_BUDGET:
        raise OverflowBudgetError(
            f"exp(-tA) at t={t} grows like exp({growth:.3g}), beyond the budget exp({OVERFLOW_BUDGET:g})"
        )


def matrix_exponential(Aop: MatrixOperator, t: float) -> np.ndarray:
    """The semigroup ``exp(-tA)`` (``t < 0`` gives the inverse ``exp(|t| A)``)."""
    _budget_check(Aop, t)
    return expm(-t * Aop.A)


@dataclass(frozen=True)
class CoercivityProfile:
    """Constants of ``|a(u,v)| <= C3|u||v|`` and ``Re a(v,v) >= C4|v|^2 - k|v|^2``.

    ``hermitian_min`` is the least eigenvalue ``m`` of ``(A + A*)/2``; when
    ``m <= 0`` the operator is shifted by ``(k+1) I`` and ``C4`` is the shifted
    constant.  ``omega = -m`` and ``M = 1`` give ``||exp(-tA)|| <= M e^{omega t}``.
    """

    C3: float
    C4: float
    k: float
    theta: float
    hermitian_min: float
    omega: float
    M: float = 1.0

    @property
    def sector_vertex(self) -> float:
        """Vertex ``C4 - m`` of a sector ``omega + S_{theta + pi/2}`` free of the spectrum of ``-A``."""
        return self.C4 - self.hermitian_min

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def coercivity_profile(Aop: MatrixOperator) -> CoercivityProfile:
    C3 = float(np.linalg.norm(Aop.A, 2))
    m = float(np.linalg.eigvalsh(Aop.hermitian_part())[0])
    k = max(0.0, -m)
    C4 = m if m > 0 else m + k + 1.0
    theta = math.atan2(C4, C3)  # arccot(C3 / C4), also valid for C3 = 0
    return CoercivityProfile(C3, C4, k, theta, m, -m)


@dataclass(frozen=True)
class HeightCurve:
    """``h(t) = |expm(-tA) u0|`` with ``h'``, ``h''`` from the closed formulas.

    ``fd_error_1`` / ``fd_error_2`` are relative gaps to centered differences
    with step ``fd_step``.
    """

    t: np.ndarray
    h: np.ndarray
    dh: np.ndarray
    d2h: np.ndarray
    fd_step: float
    fd_error_1: np.ndarray
    fd_error_2: np.ndarray

    def __post_init__(self):
        if np.any(self.h <= 0):
            raise ValueError("height must stay strictly positive")


def _height_derivatives(A: np.ndarray, U: np.ndarray):
    """h, h', h'' for states stored column-wise in U."""
    AU = A @ U
    A2U = A @ AU
    h = np.linalg.norm(U, axis=0)
    re_a = np.real(np.sum(AU * U.conj(), axis=0))
    re_a2 = np.real(np.sum(A2U * U.conj(), axis=0))
    au2 = np.sum(np.abs(AU) ** 2, axis=0)
    dh = -re_a / h
    d2h = (re_a2 + au2) / h - re_a**2 / h**3
    return h, dh, d2h


def _evolve(Aop: MatrixOperator, u0: np.ndarray, times: np.ndarray) -> np.ndarray:
    return np.column_stack([matrix_exponential(Aop, float(t)) @ u0 for t in times])


def height_curve(Aop: MatrixOperator, u0, grid, fd_step: float = 1e-4) -> HeightCurve:
    u0 = np.asarray(u0, dtype=complex).reshape(-1)
    if u0.size != Aop.n:
        raise ValueError("u0 has the wrong length")
    if not np.any(u0):
        raise ValueError("u0 = 0 has identically zero height")
    t = np.asarray(getattr(grid, "nodes", grid), dtype=float)
    U = _evolve(Aop, u0, t)
    h, dh, d2h = _height_derivatives(Aop.A, U)
    # neighbours from each state so the difference quotient sees one rounding pattern
    Ep, Em = matrix_exponential(Aop, fd_step), matrix_exponential(Aop, -fd_step)
    hp = np.linalg.norm(Ep @ U, axis=0)
    hm = np.linalg.norm(Em @ U, axis=0)
    fd1 = (hp - hm) / (2 * fd_step)
    fd2 = (hp - 2 * h + hm) / fd_step**2
    with np.errstate(divide="ignore", invalid="ignore"):
        err1 = np.abs(dh - fd1) / np.abs(dh)
        err2 = np.abs(d2h - fd2) / np.abs(d2h)
    return HeightCurve(t, h, dh, d2h, fd_step, err1, err2)


def logconvexity_values(curve: HeightCurve) -> np.ndarray:
    """``h'' h - (h')^2`` per node; ``(ln h)'' >= 0`` iff this is ``>= 0``."""
    return curve.d2h * curve.h - curve.dh**2


@dataclass(frozen=True)
class LogConvexityVerdict:
    minimum: float
    node: int
    scale: float
    tol: float

    @property
    def log_convex(self) -> bool:
        return self.minimum >= -self.tol * self.scale


def logconvexity_check(curve: HeightCurve, tol: float = 1e-9) -> LogConvexityVerdict:
    vals = logconvexity_values(curve)
    i = int(np.argmin(vals))
    scale = float(np.max(np.abs(curve.d2h * curve.h) + curve.dh**2))
    return LogConvexityVerdict(float(vals[i]), i, scale, tol)


def _criterion(A: np.ndarray, X: np.ndarray) -> np.ndarray:
    """``Re<A^2x,x> + |Ax|^2 - 2 (Re<Ax,x>)^2`` for unit columns of X."""
    AX = A @ X
    re_a = np.real(np.sum(AX * X.conj(), axis=0))
    re_a2 = np.real(np.sum((A @ AX) * X.conj(), axis=0))
    return re_a2 + np.sum(np.abs(AX) ** 2, axis=0) - 2.0 * re_a**2


@dataclass(frozen=True)
class CriterionResult:
    minimum: float
    vector: np.ndarray
    samples: int
    tol: float

    @property
    def holds(self) -> bool:
        return self.minimum >= -self.tol

    def to_dict(self) -> dict:
        return {
            "minimum": self.minimum,
            "holds": self.holds,
            "samples": self.samples,
            "tol": self.tol,
            "vector_re": [float(x) for x in self.vector.real],
            "vector_im": [float(x) for x in self.vector.imag],
        }


def _random_unit(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    X = rng.standard_normal((n, count)) + 1j * rng.standard_normal((n, count))
    return X / np.linalg.norm(X, axis=0)


def logconvexity_criterion_min(
    Aop: MatrixOperator, count: int = 4096, seed: int = 0, rounds: int = 4, tol: float = 1e-10
) -> CriterionResult:
    """Minimum of the log-convexity criterion over the unit sphere.

    Random sampling, then ``rounds`` local BFGS polishes started from the best
    samples.  Deterministic for a given seed.  A negative value comes with its
    witnessing vector; a nonnegative one is only a sampled verdict.
    """
    A = Aop.A
    n = Aop.n
    rng = np.random.default_rng(seed)
    X = _random_unit(n, count, rng)
    q = _criterion(A, X)
    best_idx = np.argsort(q)[: max(1, rounds)]

    def objective(p):
        x = p[:n] + 1j * p[n:]
        x = x / np.linalg.norm(x)
        return float(_criterion(A, x[:, None])[0])

    best_val, best_vec = float(q[best_idx[0]]), X[:, best_idx[0]]
    for i in best_idx:
        x0 = np.concatenate([X[:, i].real, X[:, i].imag])
        res = optimize.minimize(objective, x0, method="BFGS", options={"gtol": 1e-12})
        if res.fun < best_val:
            v = res.x[:n] + 1j * res.x[n:]
            best_val, best_vec = float(res.fun), v / np.linalg.norm(v)
    return CriterionResult(best_val, best_vec, count, tol)


@dataclass(frozen=True)
class ViolationSearch:
    minimum: float
    u0: np.ndarray
    t: float
    scale: float
    tol: float

    @property
    def found(self) -> bool:
        return self.minimum < -self.tol * self.scale

    def to_dict(self) -> dict:
        return {"minimum": self.minimum, "t": self.t, "found": self.found, "scale": self.scale}


def find_logconvexity_violation(
    Aop: MatrixOperator, grid, count: int = 512, seed: int = 0, tol: float = 1e-9
) -> ViolationSearch:
    """Grid search over random ``u0`` and time nodes for ``h'' h - (h')^2 < 0``."""
    t = np.asarray(getattr(grid, "nodes", grid), dtype=float)
    rng = np.random.default_rng(seed)
    X = _random_unit(Aop.n, count, rng)
    best = (math.inf, None, 0.0, 1.0)
    for tm in t:
        U = matrix_exponential(Aop, float(tm)) @ X
        h, dh, d2h = _height_derivatives(Aop.A, U)
        vals = (d2h * h - dh**2) / h**2  # scale-free: (ln h)''
        i = int(np.argmin(vals))
        if vals[i] < best[0]:
            best = (float(vals[i]), X[:, i], float(tm), 1.0)
    scale = float(np.linalg.norm(Aop.A, 2) ** 2)
    return ViolationSearch(best[0], best[1], best[2], scale, tol)


@dataclass(frozen=True)
class HyponormalityGap:
    gap: float
    normal: bool


def hyponormality_gap(Aop: MatrixOperator, tol: float | None = None) -> HyponormalityGap:
    """Least eigenvalue of ``A*A - AA*``.

    The commutator has zero trace, so in finite dimension the gap is never
    positive and vanishes exactly for normal ``A``.
    """
    C = Aop.H @ Aop.A - Aop.A @ Aop.H
    C = 0.5 * (C + C.conj().T)
    gap = float(np.linalg.eigvalsh(C)[0])
    tol = 64 * EPS * max(1.0, float(np.linalg.norm(Aop.A, 2)) ** 2) if tol is None else tol
    if abs(gap) <= tol:
        gap = 0.0
    return HyponormalityGap(gap, gap == 0.0)


@dataclass(frozen=True)
class SectorResult:
    sup: float
    argmax: complex
    samples: int
    singular: tuple[complex, ...]
    spectrum_in_sector: bool

    @property
    def flagged(self) -> bool:
        return bool(self.singular) or self.spectrum_in_sector

    def to_dict(self) -> dict:
        return {
            "sup": self.sup,
            "argmax": [self.argmax.real, self.argmax.imag],
            "samples": self.samples,
            "singular_samples": len(self.singular),
            "spectrum_in_sector": self.spectrum_in_sector,
        }


def sector_check(
    Aop: MatrixOperator,
    omega: float,
    theta: float,
    radii: np.ndarray | None = None,
    angles: int = 41,
    sing_tol: float = 1e-10,
) -> SectorResult:
    """``sup |lam - omega| ||(lam I - G)^-1||`` over ``lam`` in ``omega + S_{theta + pi/2}``, ``G = -A``.

    Samples a log-radial grid strictly inside the open sector.  Samples where
    ``lam I - G`` is numerically singular are excluded and returned.
    """
    if not 0 < theta < math.pi / 2:
        raise ValueError("theta must lie in (0, pi/2)")
    radii = np.logspace(-3, 3, 61) if radii is None else np.asarray(radii, dtype=float)
    half = (theta + math.pi / 2) * (1 - 1e-6)
    phis = np.linspace(-half, half, angles) if angles > 1 else np.zeros(1)
    G = -Aop.A
    gnorm = float(np.linalg.norm(G, 2))
    ident = np.eye(Aop.n)
    best, arg, singular = 0.0, complex(omega), []
    for r in radii:
        for phi in phis:
            lam = omega + r * complex(math.cos(phi), math.sin(phi))
            smin = float(np.linalg.svd(lam * ident - G, compute_uv=False)[-1])
            if smin <= sing_tol * (abs(lam) + gnorm + 1.0):
                singular.append(lam)
                continue
            val = r / smin
            if val > best:
                best, arg = val, lam
    ev = np.linalg.eigvals(G) - omega
    inside = bool(np.any((np.abs(ev) <= sing_tol) | (np.abs(np.angle(ev)) < theta + math.pi / 2)))
    return SectorResult(best, arg, radii.size * phis.size, tuple(singular), inside)


@dataclass(frozen=True)
class LaplaceCheck:
    defect: float
    quadrature_estimate: float
    truncation: float
    resolvent_norm: float

    @property
    def within_budget(self) -> bool:
        return bool(self.defect <= 2.0 * (self.quadrature_estimate + self.truncation) + 100 * EPS * self.resolvent_norm)

    def to_dict(self) -> dict:
        return dict(self.__dict__, within_budget=self.within_budget)


def _simpson_semigroup(K: np.ndarray, horizon: float, steps: int) -> np.ndarray:
    """Composite Simpson for ``int_0^H expm(tK) dt`` with ``steps`` nodes."""
    h = horizon / (steps - 1)
    step = expm(h * K)
    P = np.eye(K.shape[0], dtype=complex)
    total = P.copy()  # weight 1 at t = 0
    for j in range(1, steps):
        P = P @ step
        w = 1.0 if j == steps - 1 else (4.0 if j % 2 else 2.0)
        total += w * P
    return total * (h / 3.0)


def laplace_identity_check(
    Aop: MatrixOperator, lam: complex, horizon: float = 40.0, steps: int = 4001
) -> LaplaceCheck:
    """Compare ``int_0^H e^{-t lam} expm(-tA) dt`` with ``(lam I + A)^{-1}``.

    The omitted tail ``int_H^inf`` equals ``expm(H(G - lam)) (lam - G)^{-1}``
    exactly and is reported as ``truncation``; the quadrature error is
    estimated by Richardson comparison with half the nodes.
    """
    if steps < 5 or steps % 2 == 0 or (steps - 1) % 4:
        raise ValueError("steps must be odd with (steps - 1) divisible by 4")
    G = -Aop.A
    abscissa = float(np.max(np.linalg.eigvals(G).real))
    gap = complex(lam).real - abscissa
    if gap <= 0:
        raise ValueError(f"Re lam must exceed the spectral abscissa {abscissa:.6g}")
    if horizon * gap < 30:
        raise ValueError("horizon too short: need horizon * (Re lam - abscissa) >= 30")
    ident = np.eye(Aop.n)
    K = G - lam * ident
    R = np.linalg.solve(lam * ident - G, ident)
    Q = _simpson_semigroup(K, horizon, steps)
    Q_half = _simpson_semigroup(K, horizon, (steps + 1) // 2)
    trunc = float(np.linalg.norm(expm(horizon * K) @ R, 2))
    return LaplaceCheck(
        float(np.linalg.norm(Q - R, 2)),
        float(np.linalg.norm(Q - Q_half, 2)) / 15.0,
        trunc,
        float(np.linalg.norm(R, 2)),
    )


def translation_check(Aop: MatrixOperator, mu: complex, t: float) -> float:
    """Relative gap ``||e^{tG} - e^{t mu} e^{t(G - mu)}|| / ||e^{tG}||`` with ``G = -A``."""
    G = -Aop.A
    left = expm(t * G)
    right = np.exp(t * mu) * expm(t * (G - mu * np.eye(Aop.n)))
    return float(np.linalg.norm(left - right, 2) / np.linalg.norm(left, 2))


@dataclass(frozen=True)
class InjectivityProbe:
    minimum: float
    node: int
    lower_bounds: np.ndarray  # exp(-t ||A||) |v - w| per node
    distances: np.ndarray

    @property
    def bound_holds(self) -> bool:
        return bool(np.all(self.distances >= self.lower_bounds * (1 - 1e-12)))


def injectivity_probe(Aop: MatrixOperator, v, w, grid) -> InjectivityProbe:
    """Distance ``|expm(-tA)(v - w)|`` between two trajectories over the nodes."""
    d0 = np.asarray(v, dtype=complex) - np.asarray(w, dtype=complex)
    if not np.any(d0):
        raise ValueError("v and w coincide")
    t = np.asarray(getattr(grid, "nodes", grid), dtype=float)
    dist = np.linalg.norm(_evolve(Aop, d0, t), axis=0)
    bounds = np.exp(-t * np.linalg.norm(Aop.A, 2)) * np.linalg.norm(d0)
    i = int(np.argmin(dist))
    return InjectivityProbe(float(dist[i]), i, bounds, dist)


def matrix_phi(Z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(e^Z, phi1(Z), phi2(Z))`` from one exponential of a 3n x 3n block matrix."""
    n = Z.shape[0]
    B = np.zeros((3 * n, 3 * n), dtype=complex)
    B[:n, :n] = Z
    B[:n, n:2 * n] = np.eye(n)
    B[n:2 * n, 2 * n:] = np.eye(n)
    E = expm(B)
    return E[:n, :n], E[:n, n:2 * n], E[:n, 2 * n:]


def _matrix_integrate(A, times, start, F):
    """Exact stepping of ``u' + Au = f`` for piecewise-linear f; returns all states."""
    cache = {}
    U = np.empty((A.shape[0], times.size), dtype=complex)
    U[:, 0] = start
    for m, d in enumerate(np.diff(times)):
        if d not in cache:
            cache[d] = matrix_phi(-d * A)
        E, P1, P2 = cache[d]
        U[:, m + 1] = E @ U[:, m] + d * (P1 @ F[:, m] + P2 @ (F[:, m + 1] - F[:, m]))
    return U


@dataclass(frozen=True)
class MatrixFVPResult:
    u0: np.ndarray
    times: np.ndarray
    states: np.ndarray
    yield_: np.ndarray
    condition: float  # ||e^{TA}|| ||e^{-TA}||
    terminal_residual: float
    residual_bound: float

    def to_dict(self) -> dict:
        return {
            "u0_re": [float(x) for x in self.u0.real],
            "u0_im": [float(x) for x in self.u0.imag],
            "condition": self.condition,
            "terminal_residual": self.terminal_residual,
            "residual_bound": self.residual_bound,
        }


def matrix_fvp_solve(Aop: MatrixOperator, u_T, f, grid, K: float = 64.0) -> MatrixFVPResult:
    """``u0 = e^{TA}(u_T - y_f)`` and the trajectory from it.

    ``f`` is an (n, nodes) array of samples, linear in time between nodes.
    """
    t = np.asarray(getattr(grid, "nodes", grid), dtype=float)
    T = float(t[-1])
    u_T = np.asarray(u_T, dtype=complex).reshape(-1)
    F = np.zeros((Aop.n, t.size)) if f is None else np.asarray(f, dtype=complex)
    if F.shape != (Aop.n, t.size) or u_T.size != Aop.n:
        raise ValueError("u_T / f dimensions do not match the operator and grid")
    back = matrix_exponential(Aop, -T)
    fwd = matrix_exponential(Aop, T)
    y = _matrix_integrate(Aop.A, t, np.zeros(Aop.n), F)[:, -1]
    u0 = back @ (u_T - y)
    U = _matrix_integrate(Aop.A, t, u0, F)
    kappa = float(np.linalg.norm(back, 2) * np.linalg.norm(fwd, 2))
    resid = float(np.linalg.norm(U[:, -1] - u_T))
    bound = kappa * K * EPS * (np.linalg.norm(u_T) + np.linalg.norm(y))
    return MatrixFVPResult(u0, t, U, y, kappa, resid, float(bound))


_BCS = ("dirichlet", "neumann", "robin")


def _ghost_factor(bc, h):
    """Ghost node = factor * adjacent interior node."""
    kind, beta = (bc, 0.0) if isinstance(bc, str) else bc
    if isinstance(kind, str) and kind.startswith("robin:"):
        kind, beta = "robin", float(kind.split(":", 1)[1])
    if kind not in _BCS:
        raise ValueError(f"unknown boundary condition {bc!r}")
    if kind == "dirichlet":
        return 0.0
    if kind == "neumann":
        return 1.0
    return 1.0 / (1.0 + beta * h)


def _tridiag(n, lower, diag, upper, gl, gr):
    M = np.diag(np.full(n, diag)) + np.diag(np.full(n - 1, lower), -1) + np.diag(np.full(n - 1, upper), 1)
    M[0, 0] += gl * lower
    M[-1, -1] += gr * upper
    return M


def advection_matrix(n: int, bc_left="dirichlet", bc_right="dirichlet") -> np.ndarray:
    """Centered ``d/dx`` on ``x_i = i/(n+1)``, ghost nodes eliminated by the boundary rows."""
    h = 1.0 / (n + 1)
    gl, gr = _ghost_factor(bc_left, h), _ghost_factor(bc_right, h)
    return _tridiag(n, -1 / (2 * h), 0.0, 1 / (2 * h), gl, gr)


def advection_diffusion_builder(n: int, sign: int = 1, bc_left="dirichlet", bc_right="dirichlet") -> MatrixOperator:
    """Finite differences for ``-u'' + sign * u'`` on (0, 1), ``h = 1/(n+1)``.

    Interior rows are ``[-1/h^2 - sign/(2h), 2/h^2, -1/h^2 + sign/(2h)]``.
    Boundary conditions enter through first-order one-sided ghost values:
    Dirichlet ``u_0 = 0``; Neumann ``u_0 = u_1``; Robin ``-u'(0) + beta u(0) = 0``
    gives ``u_0 = u_1/(1 + beta h)`` (mirrored on the right).  Pass Robin as
    ``("robin", beta)`` or ``"robin:beta"``.
    """
    if n < 3:
        raise ValueError("need n >= 3")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    h = 1.0 / (n + 1)
    gl, gr = _ghost_factor(bc_left, h), _ghost_factor(bc_right, h)
    diffusion = _tridiag(n, -1 / h**2, 2 / h**2, -1 / h**2, gl, gr)
    return MatrixOperator(diffusion + sign * advection_matrix(n, bc_left, bc_right))


def random_coercive(n: int, rng: np.random.Generator, self_adjoint: bool = False, skew: float = 1.0) -> MatrixOperator:
    """Random matrix with Hermitian part ``>= I/2``; non-normal unless ``self_adjoint``."""
    X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    P = X @ X.conj().T / n + 0.5 * np.eye(n)
    if self_adjoint:
        return MatrixOperator(P)
    S = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return MatrixOperator(P + skew * 0.5 * (S - S.conj().T) / math.sqrt(n))
