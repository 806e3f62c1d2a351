"""The final value problem ``u' + Au = f``, ``u(T) = u_T``.

A solution exists exactly when ``w = u_T - y_f`` lies in the domain of
``exp(TA)``; then ``u(t) = exp(-(t - T)A) w + int_0^t exp(-(t-s)A) f(s) ds``.
At finite truncation every vector qualifies, so membership is judged from
the tail: per-mode log margins, partial norms of ``exp(TA) w`` and a fitted
decay rate, condensed into a three-level verdict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .evolution import (
    SourceTerm,
    TimeGrid,
    Trajectory,
    compute_yield,
    norm_X1,
    phi1,
    phi2,
    solve_forward,
)
from .spectral_core import (
    LOG_REALMAX,
    DecayEstimate,
    OverflowPolicy,
    SemigroupOverflowError,
    SpectralBasis,
    SpectralCoeffs,
    amplify,
    apply_backward_semigroup,
    backward_overflow_mask,
    estimate_decay_rate,
    sobolev_norm,
    sobolev_weights,
)

__all__ = [
    "FinalData",
    "Verdict",
    "Thresholds",
    "CompatibilityReport",
    "DivergentNormError",
    "RoundTripReport",
    "StabilityReport",
    "InstabilityRow",
    "DomainChainTable",
    "CutoffResult",
    "reconstruct_initial",
    "check_compatibility",
    "solve_backward",
    "duhamel_terms",
    "norm_Y0",
    "norm_Y1",
    "roundtrip",
    "random_smooth_data",
    "stability_report",
    "instability_table",
    "domain_chain_demo",
    "spectral_cutoff",
]

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class FinalData:
    u_T: SpectralCoeffs
    f: SourceTerm

    def __post_init__(self):
        if not self.u_T.basis.compatible(self.f.basis):
            raise ValueError("final state and source live in different bases")

    @classmethod
    def homogeneous(cls, u_T: SpectralCoeffs, grid: TimeGrid) -> "FinalData":
        return cls(u_T, SourceTerm.zero(u_T.basis, grid))

    @property
    def basis(self) -> SpectralBasis:
        return self.u_T.basis

    @property
    def grid(self) -> TimeGrid:
        return self.f.grid

    @property
    def T(self) -> float:
        return self.f.grid.T

    def difference(self) -> SpectralCoeffs:
        """``w = u_T - y_f``, the vector the compatibility condition is about."""
        return self.u_T - compute_yield(self.f)


class Verdict(str, Enum):
    COMPATIBLE = "COMPATIBLE"
    MARGINAL = "MARGINAL"
    INCOMPATIBLE = "INCOMPATIBLE"


@dataclass(frozen=True)
class Thresholds:
    """Verdict thresholds; ``margin_eps`` defaults to ``0.05 T``."""

    margin_eps: float | None = None
    tail_tol: float = 1e-6
    growth_factor: float = 10.0
    tail_fraction: float = 0.5

    def resolved(self, T: float) -> dict:
        return {
            "margin_eps": 0.05 * T if self.margin_eps is None else self.margin_eps,
            "tail_tol": self.tail_tol,
            "growth_factor": self.growth_factor,
            "tail_fraction": self.tail_fraction,
        }


def _log_partial_sq(lam, w, T, s):
    """Cumulative ``log sum_{k<N} (1+lam_k)^s exp(2 lam_k T) |w_k|^2``."""
    with np.errstate(divide="ignore"):
        log_terms = s * np.log1p(lam) + 2.0 * (lam * T + np.log(np.abs(w)))
    return np.logaddexp.accumulate(log_terms)


def _finite_or_none(x: float):
    return float(x) if math.isfinite(x) else None


@dataclass(frozen=True)
class CompatibilityReport:
    target_space: str
    T: float
    eigenvalues: np.ndarray
    per_mode_margin: np.ndarray
    log_partial_norms: np.ndarray  # natural log of partial norms, index N-1
    decay: DecayEstimate
    verdict: Verdict
    thresholds: dict
    tail_increment: float
    growth_ratio: float
    notes: tuple[str, ...] = ()

    @property
    def partial_norms(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_partial_norms)

    @property
    def ceiling(self) -> float:
        """Partial norm at the full truncation."""
        return float(self.partial_norms[-1])

    def to_dict(self) -> dict:
        pn = self.partial_norms
        return {
            "verdict": self.verdict.value,
            "target_space": self.target_space,
            "T": self.T,
            "thresholds": dict(self.thresholds),
            "tail_increment": _finite_or_none(self.tail_increment),
            "growth_ratio": _finite_or_none(self.growth_ratio),
            "per_mode": [
                {"mode": k, "lambda": float(lam), "margin": _finite_or_none(mu)}
                for k, (lam, mu) in enumerate(zip(self.eigenvalues, self.per_mode_margin))
            ],
            "partial_norms": [
                {"N": n + 1, "value": _finite_or_none(v), "log_value": _finite_or_none(lv)}
                for n, (v, lv) in enumerate(zip(pn, self.log_partial_norms))
            ],
            "decay": self.decay.to_dict(),
            "notes": list(self.notes),
        }


def _relative_increments(log_pn: np.ndarray) -> np.ndarray:
    """``1 - P_{N-1}/P_N`` for N >= 2 (zero where both vanish)."""
    prev, cur = log_pn[:-1], log_pn[1:]
    with np.errstate(invalid="ignore"):
        inc = -np.expm1(prev - cur)
    return np.where(np.isneginf(cur), 0.0, inc)


def check_compatibility(
    data: FinalData, target_space: str = "Y1", thresholds: Thresholds | None = None
) -> CompatibilityReport:
    """Judge whether ``u_T - y_f`` lies in ``D(exp(TA))`` (``Y0``) or ``D(exp(TA); H^1)`` (``Y1``).

    COMPATIBLE: fitted decay ``rho >= T + eps`` and partial norms of
    ``exp(TA) w`` have settled over the last quarter of modes; also whenever
    the tail holds too few nonzero modes to fit a rate (finitely supported
    data).  INCOMPATIBLE: ``rho < T - eps`` or those partial norms
    grow monotonically by more than ``growth_factor`` over the last quarter.
    MARGINAL otherwise.
    """
    if target_space not in ("Y0", "Y1"):
        raise ValueError(f"target space must be Y0 or Y1, got {target_space!r}")
    th = (thresholds or Thresholds()).resolved(data.T)
    T = data.T
    w = data.difference()
    lam = w.eigenvalues
    with np.errstate(divide="ignore"):
        margins = lam * T + np.log(np.abs(w.values))
    s = 0 if target_space == "Y0" else 1
    log_pn = 0.5 * _log_partial_sq(lam, w.values, T, s)
    decay = estimate_decay_rate(w, th["tail_fraction"])

    n = lam.size
    q = max(1, n // 4)
    inc = _relative_increments(log_pn)
    tail_inc = float(np.max(inc[-q:])) if inc.size else 0.0
    window = log_pn[-(q + 1):]
    if n > 1 and np.isfinite(window[0]):
        growth = float(np.exp(min(window[-1] - window[0], LOG_REALMAX)))
        monotone = bool(np.all(np.diff(window) > 0))
    else:
        growth, monotone = (float("nan") if n > 1 else 1.0), False
    grows = monotone and growth > th["growth_factor"]
    settled = tail_inc < th["tail_tol"]

    eps = th["margin_eps"]
    notes = []
    if decay.determined:
        if decay.rho < T - eps or grows:
            verdict = Verdict.INCOMPATIBLE
        elif decay.rho >= T + eps and settled:
            verdict = Verdict.COMPATIBLE
        else:
            verdict = Verdict.MARGINAL
    else:
        # finitely many nonzero modes lie in the domain of every exp(tA)
        notes.append("decay rate undetermined: fewer than 3 nonzero tail modes; data treated as finitely supported")
        verdict = Verdict.COMPATIBLE
    return CompatibilityReport(
        target_space, T, lam, margins, log_pn, decay, verdict, th, tail_inc, growth, tuple(notes)
    )


def reconstruct_initial(data: FinalData, policy: OverflowPolicy | str = OverflowPolicy.FAIL):
    """``u(0) = exp(TA)(u_T - y_f)``; returns a :class:`BackwardResult`."""
    return apply_backward_semigroup(data.difference(), data.T, policy)


def _backward_states(w: SpectralCoeffs, grid: TimeGrid, policy: OverflowPolicy):
    """``exp((T - t_m) lambda) w`` for every node, with overflow flags."""
    lam = w.eigenvalues
    T = grid.T
    remaining = T - grid.nodes
    over = np.stack([backward_overflow_mask(lam, w.values, r) for r in remaining], axis=1)
    if over.any() and policy is OverflowPolicy.FAIL:
        raise SemigroupOverflowError(np.flatnonzero(over[:, 0]))
    exponent = np.where(over, 0.0, np.outer(lam, remaining))
    states = np.where(over, 0.0, amplify(exponent, w.values[:, None]))
    if policy is OverflowPolicy.ZERO:
        states[over] = 0.0
    elif policy is OverflowPolicy.SATURATE:
        phase = np.exp(1j * np.angle(w.values))[:, None] * np.ones_like(states)
        states[over] = np.finfo(float).max * phase[over]
    return states, over


def solve_backward(data: FinalData, policy: OverflowPolicy | str = OverflowPolicy.FAIL) -> Trajectory:
    """Trajectory through ``u(T) = u_T``, evaluated as ``exp((T-t)lambda) w + convolution``.

    The growing factor multiplies ``w`` directly (never as a product of a huge
    and a tiny exponential).  At ``t = T`` the formula collapses to ``u_T``,
    which is stored as given.
    """
    policy = OverflowPolicy(policy)
    grid = data.grid
    w = data.difference()
    homog, over = _backward_states(w, grid, policy)
    conv = solve_forward(data.basis.zeros(), data.f).states
    states = homog + conv
    states[:, -1] = data.u_T.values
    return Trajectory(data.basis, grid, states, "backward", over if over.any() else None)


def duhamel_terms(data: FinalData, policy: OverflowPolicy | str = OverflowPolicy.FAIL):
    """The three pieces ``exp((T-t)A) u_T``, ``-exp((T-t)A) y_f`` and the convolution."""
    policy = OverflowPolicy(policy)
    y = compute_yield(data.f)
    grid = data.grid
    first, over1 = _backward_states(data.u_T, grid, policy)
    second, over2 = _backward_states(-y, grid, policy)
    conv = solve_forward(data.basis.zeros(), data.f).states
    return tuple(
        Trajectory(data.basis, grid, s, "backward", o if o is not None and o.any() else None)
        for s, o in ((first, over1), (second, over2), (conv, None))
    )


class DivergentNormError(ArithmeticError):
    """The ``exp(TA) w`` term of a data norm does not exist (or overflows).

    ``ceiling`` is the partial norm at full truncation (possibly inf) and
    ``partial_norms`` the table over truncation levels.
    """

    def __init__(self, message, ceiling, partial_norms):
        super().__init__(message)
        self.ceiling = ceiling
        self.partial_norms = partial_norms


def _data_norm(data: FinalData, s_f: int, s_u: int, report: CompatibilityReport | None) -> float:
    if report is not None and report.verdict is Verdict.INCOMPATIBLE:
        raise DivergentNormError(
            "data fail the compatibility condition; exp(TA)w term diverges",
            report.ceiling, report.partial_norms,
        )
    w = data.difference()
    try:
        back = apply_backward_semigroup(w, data.T, OverflowPolicy.FAIL).coeffs
    except SemigroupOverflowError as exc:
        log_pn = 0.5 * _log_partial_sq(w.eigenvalues, w.values, data.T, s_u)
        with np.errstate(over="ignore"):
            pn = np.exp(log_pn)
        raise DivergentNormError(str(exc), float(pn[-1]), pn) from exc
    return math.sqrt(
        data.f.l2_norm(s_f) ** 2 + sobolev_norm(data.u_T, s_u) ** 2 + sobolev_norm(back, s_u) ** 2
    )


def norm_Y0(data: FinalData, report: CompatibilityReport | None = None) -> float:
    """``(int ||f||_{-1}^2 + ||u_T||_0^2 + ||exp(TA) w||_0^2)^(1/2)``."""
    return _data_norm(data, -1, 0, report)


def norm_Y1(data: FinalData, report: CompatibilityReport | None = None) -> float:
    """``(int ||f||_0^2 + ||u_T||_1^2 + ||exp(TA) w||_1^2)^(1/2)``."""
    return _data_norm(data, 0, 1, report)


def _step_residual(traj: Trajectory, f: SourceTerm) -> float:
    """Largest defect of the exact one-step relation along a trajectory."""
    lam = traj.basis.eigenvalues
    worst = 0.0
    for m, d in enumerate(traj.grid.steps):
        z = -lam * d
        pred = np.exp(z) * traj.states[:, m] + d * (
            phi1(z) * f.samples[:, m] + phi2(z) * (f.samples[:, m + 1] - f.samples[:, m])
        )
        worst = max(worst, float(np.linalg.norm(traj.states[:, m + 1] - pred)))
    return worst


@dataclass(frozen=True)
class RoundTripReport:
    node_residuals: np.ndarray  # ||u_back(t_m) - u_fwd(t_m)||_0 per node
    initial_residual_h1: float
    terminal_residual: float
    step_residual: float
    amplification: float  # exp(lambda_max T), inf if not representable
    scale: float
    noise_amplification: np.ndarray | None = None

    @property
    def max_node_residual(self) -> float:
        return float(np.max(self.node_residuals))

    def to_dict(self) -> dict:
        out = {
            "max_node_residual": self.max_node_residual,
            "node_residuals": [float(r) for r in self.node_residuals],
            "initial_residual_h1": self.initial_residual_h1,
            "terminal_residual": self.terminal_residual,
            "step_residual": self.step_residual,
            "amplification": _finite_or_none(self.amplification),
            "scale": self.scale,
        }
        if self.noise_amplification is not None:
            out["noise_amplification"] = [_finite_or_none(a) for a in self.noise_amplification]
        return out


def roundtrip(
    u0: SpectralCoeffs,
    f: SourceTerm,
    noise: SpectralCoeffs | None = None,
    policy: OverflowPolicy | str = OverflowPolicy.FAIL,
) -> RoundTripReport:
    """Forward solve, hand the data ``(f, u(T))`` to the backward solver, compare.

    With ``noise`` the final state is perturbed first; the report then lists
    the per-mode ratio ``|u_back(0) - u0| / |noise|``, which is ``exp(lambda T)``
    on every contaminated mode.
    """
    fwd = solve_forward(u0, f)
    u_T = fwd.final()
    if noise is not None:
        u_T = u_T + noise
    data = FinalData(u_T, f)
    back = solve_backward(data, policy)
    diff = back.states - fwd.states
    node_res = np.sqrt(np.sum(np.abs(diff) ** 2, axis=0))
    init_err = sobolev_norm(back.initial() - u0, 1)
    term = float(np.linalg.norm(back.states[:, -1] - u_T.values))
    lam_max_T = float(u0.eigenvalues[-1]) * f.grid.T
    amp = math.exp(lam_max_T) if lam_max_T < LOG_REALMAX else math.inf
    scale = max(sobolev_norm(u0, 0), sobolev_norm(u_T, 0), f.sup_norm(), 1e-300)
    noise_amp = None
    if noise is not None:
        with np.errstate(divide="ignore", invalid="ignore"):
            noise_amp = np.where(
                np.abs(noise.values) > 0, np.abs(diff[:, 0]) / np.abs(noise.values), np.nan
            )
    return RoundTripReport(
        node_res, init_err, term, _step_residual(back, f), amp, scale, noise_amp
    )


def random_smooth_data(basis: SpectralBasis, grid: TimeGrid, rng: np.random.Generator, n_max=None):
    """A random ``(u0, f)`` with coefficients decaying like ``1/(1 + lambda)``.

    Draws are made for ``n_max`` modes (default: all) and truncated, so the
    same generator state gives nested data across truncation levels.
    """
    n = basis.truncation
    n_max = max(n, n_max or n)
    lam = basis.eigenvalues
    u0 = rng.standard_normal(n_max) + 1j * rng.standard_normal(n_max)
    slope = rng.standard_normal((n_max, 2)) + 1j * rng.standard_normal((n_max, 2))
    u0 = u0[:n] / (1.0 + lam)
    t = grid.nodes / grid.T
    f = (slope[:n, :1] + slope[:n, 1:] * t[None, :]) / np.sqrt(1.0 + lam)[:, None]
    return SpectralCoeffs(basis, u0), SourceTerm(basis, grid, f)


@dataclass(frozen=True)
class StabilityReport:
    ratios: np.ndarray

    @property
    def constant(self) -> float:
        return float(np.max(self.ratios))

    def to_dict(self) -> dict:
        return {
            "constant": self.constant,
            "cases": int(self.ratios.size),
            "mean_ratio": float(np.mean(self.ratios)),
        }


def stability_report(batch: Iterable[tuple[SpectralCoeffs, SourceTerm]]) -> StabilityReport:
    """Empirical constant ``max ||u||_X1 / ||(f, u_T)||_Y1`` over forward-generated data."""
    ratios = []
    for u0, f in batch:
        traj = solve_forward(u0, f)
        den = norm_Y1(FinalData(traj.final(), f))
        if den == 0:
            continue
        ratios.append(norm_X1(traj, f) / den)
    if not ratios:
        raise ValueError("stability batch is empty or contains only zero data")
    return StabilityReport(np.array(ratios))


@dataclass(frozen=True)
class InstabilityRow:
    j: int
    lam: float
    amplification: float | None  # exp(T lambda_j); None when it overflows
    log_amplification: float
    overflow: bool
    solved_norm: float | None = None  # ||u(0)||_0 from an actual backward solve
    relative_error: float | None = None

    def to_dict(self) -> dict:
        return {
            "j": self.j,
            "lambda": self.lam,
            "amplification": self.amplification,
            "log_amplification": self.log_amplification,
            "overflow": self.overflow,
            "solved_norm": self.solved_norm,
            "relative_error": self.relative_error,
        }


def instability_table(basis: SpectralBasis, T: float, J: int, steps: int = 8) -> list[InstabilityRow]:
    """Rows ``(j, lambda_j, exp(T lambda_j))`` for the unit data ``u_T = e_j``, ``f = 0``.

    For ``T > 0`` every representable row is re-derived by running
    :func:`solve_backward` on ``e_j``.
    """
    if not 1 <= J < basis.truncation:
        raise ValueError(f"J must satisfy 1 <= J < {basis.truncation}")
    if T < 0:
        raise ValueError("T must be nonnegative")
    grid = TimeGrid.uniform(T, steps) if T > 0 else None
    rows = []
    for j in range(1, J + 1):
        lam = float(basis.eigenvalues[j])
        log_amp = lam * T
        over = log_amp >= LOG_REALMAX
        row = dict(j=j, lam=lam, amplification=None if over else math.exp(log_amp),
                   log_amplification=log_amp, overflow=over)
        if grid is not None and not over:
            traj = solve_backward(FinalData.homogeneous(basis.unit(j), grid))
            solved = sobolev_norm(traj.initial(), 0)
            row.update(solved_norm=solved, relative_error=abs(solved - row["amplification"]) / row["amplification"])
        rows.append(InstabilityRow(**row))
    return rows


@dataclass(frozen=True)
class DomainChainTable:
    t: float
    t_prime: float
    t_mid: float
    s: int
    partial_t: np.ndarray  # partial norms of exp(tA) w
    partial_t_prime: np.ndarray  # partial norms of exp(t'A) w (may hold inf)
    increments_t: np.ndarray
    increments_t_prime: np.ndarray

    def rows(self) -> list[dict]:
        return [
            {
                "N": n + 1,
                "partial_t": float(self.partial_t[n]),
                "partial_t_prime": _finite_or_none(self.partial_t_prime[n]),
                "increment_t": float(self.increments_t[n]),
                "increment_t_prime": _finite_or_none(self.increments_t_prime[n]),
            }
            for n in range(self.partial_t.size)
        ]


def domain_chain_demo(
    basis: SpectralBasis, t: float, t_prime: float, t_mid: float | None = None, s: int = 0
) -> DomainChainTable:
    """Witness ``D(exp(t'A)) != D(exp(tA))`` with ``w_k = exp(-lambda_k t'')``, ``t < t'' < t'``.

    ``exp(tA) w`` has a convergent tail while ``exp(t'A) w`` has a divergent
    one; increments are ``P_N - P_{N-1}``.
    """
    if not 0 < t < t_prime:
        raise ValueError("need 0 < t < t_prime")
    t_mid = 0.5 * (t + t_prime) if t_mid is None else t_mid
    if not t < t_mid < t_prime:
        raise ValueError("t_mid must lie strictly between t and t_prime")
    lam = basis.eigenvalues
    w = np.exp(-lam * t_mid)
    tables = []
    for tt in (t, t_prime):
        log_pn = 0.5 * _log_partial_sq(lam, w, tt, s)
        with np.errstate(over="ignore"):
            pn = np.exp(log_pn)
        inc = np.diff(pn, prepend=0.0)
        tables.append((pn, inc))
    return DomainChainTable(t, t_prime, t_mid, s, tables[0][0], tables[1][0], tables[0][1], tables[1][1])


@dataclass(frozen=True)
class CutoffResult:
    u0: SpectralCoeffs
    kept_modes: int
    note: str = "spectral cutoff regularization; not covered by the exact final value theory"


def spectral_cutoff(data: FinalData, cutoff: float) -> CutoffResult:
    """Reconstruct ``u(0)`` keeping only modes with ``lambda_k <= cutoff``."""
    w = data.difference()
    keep = w.eigenvalues <= cutoff
    masked = SpectralCoeffs(w.basis, np.where(keep, w.values, 0.0))
    back = apply_backward_semigroup(masked, data.T, OverflowPolicy.FAIL)
    return CutoffResult(back.coeffs, int(keep.sum()))
