"""Command-line front end: every subcommand writes one JSON report plus CSV tables.

Exit codes: 0 ok, 2 unreadable/malformed input, 3 invalid configuration,
4 incompatible data or exponential overflow (also a failed round trip).
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .evolution import (
    SourceTerm,
    TimeGrid,
    norm_X0,
    norm_X1,
    norm_X_equivalent,
    norm_X_full,
    solve_forward,
)
from .fileio import (
    InputError,
    read_coeffs,
    read_matrix,
    read_source,
    write_coeffs,
    write_json,
    write_matrix,
    write_table,
    write_trajectory,
)
from .final_value import (
    DivergentNormError,
    FinalData,
    Thresholds,
    Verdict,
    check_compatibility,
    instability_table,
    norm_Y0,
    norm_Y1,
    random_smooth_data,
    roundtrip,
    solve_backward,
)
from .matrix_lab import (
    MatrixOperator,
    OverflowBudgetError,
    advection_diffusion_builder,
    coercivity_profile,
    find_logconvexity_violation,
    height_curve,
    hyponormality_gap,
    injectivity_probe,
    laplace_identity_check,
    logconvexity_check,
    logconvexity_criterion_min,
    logconvexity_values,
    matrix_fvp_solve,
    random_coercive,
    sector_check,
    translation_check,
)
from .model_domains import IntervalDomain, RectangleDomain, interval_basis, rectangle_basis, weyl_count
from .spectral_core import (
    OverflowPolicy,
    SemigroupOverflowError,
    SpectralBasis,
    SpectralCoeffs,
    interpolation_half_norm,
    lions_magenes_norm,
    sobolev_norm,
)

__all__ = ["RunConfig", "ConfigError", "build_parser", "resolve_config", "main", "COMMANDS"]

EXIT_OK, EXIT_INPUT, EXIT_CONFIG, EXIT_FAIL = 0, 2, 3, 4

COMMANDS = ("forward", "backward", "compat", "instability", "weyl", "logconv", "roundtrip", "matrix")
FIXTURES = ("jordan", "random", "random-sa", "advdiff")


class ConfigError(ValueError):
    pass


class Failure(RuntimeError):
    """Incompatible data, overflow or a failed check (exit 4)."""


@dataclass(frozen=True)
class RunConfig:
    command: str
    basis: str = "interval"
    L: float = math.pi
    Lx: float = 1.0
    Ly: float = 1.0
    N: int = 32
    T: float = 1.0
    steps: int = 16
    theta: float = 0.5
    seed: int = 0
    policy: str = "fail"
    out: str = "out"
    config: str | None = None
    # command specific
    u0: str | None = None
    f: str | None = None
    uT: str | None = None
    target: str = "Y1"
    margin_eps: float | None = None
    tail_tol: float = 1e-6
    growth_factor: float = 10.0
    decay: float | None = None
    J: int = 3
    lam: str = "10"
    cases: int = 20
    matrix: str | None = None
    fixture: str = "jordan"
    n: int = 8
    sign: int = 1
    bc_left: str = "dirichlet"
    bc_right: str = "dirichlet"
    samples: int = 2048

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown subcommand {self.command!r}")
        if self.basis not in ("interval", "rectangle"):
            raise ConfigError("basis must be interval or rectangle")
        positive = dict(L=self.L, Lx=self.Lx, Ly=self.Ly, T=self.T, tail_tol=self.tail_tol,
                        growth_factor=self.growth_factor)
        for name, val in positive.items():
            if not (math.isfinite(val) and val > 0):
                raise ConfigError(f"{name} must be finite and positive, got {val}")
        for name in ("N", "steps", "J", "cases", "n", "samples"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")
        if not 0 < self.theta < 1:
            raise ConfigError("theta must lie in (0, 1)")
        if self.margin_eps is not None and not self.margin_eps >= 0:
            raise ConfigError("margin_eps must be nonnegative")
        if self.decay is not None and not (math.isfinite(self.decay) and self.decay > 0):
            raise ConfigError("decay must be finite and positive")
        try:
            OverflowPolicy(self.policy)
        except ValueError:
            raise ConfigError("policy must be fail, zero or saturate") from None
        if self.target not in ("Y0", "Y1"):
            raise ConfigError("target must be Y0 or Y1")
        if self.fixture not in FIXTURES:
            raise ConfigError(f"fixture must be one of {', '.join(FIXTURES)}")
        if self.sign not in (1, -1):
            raise ConfigError("sign must be 1 or -1")
        self.lam_values()
        out = Path(self.out).resolve()
        for name in ("u0", "f", "uT", "matrix", "config"):
            p = getattr(self, name)
            if p is not None and Path(p).resolve().parent == out and Path(p).name in OUTPUTS[self.command]:
                raise ConfigError(f"input {name}={p} would be overwritten by an output")

    def lam_values(self) -> list[float]:
        try:
            vals = [float(x) for x in str(self.lam).split(",") if x.strip()]
        except ValueError:
            raise ConfigError(f"lam must be a comma-separated list of numbers, got {self.lam!r}") from None
        if not vals or any(not (math.isfinite(v) and v >= 0) for v in vals):
            raise ConfigError("lam values must be finite and nonnegative")
        return vals

    def report_config(self) -> dict:
        """Resolved configuration as embedded in reports (output location omitted)."""
        d = asdict(self)
        d.pop("out")
        d.pop("config")
        return d


OUTPUTS = {
    "forward": ("trajectory.csv", "norms.json", "u_T.csv", "source.csv", "u0.csv"),
    "backward": ("trajectory.csv", "compat.json", "ynorms.json", "u0.csv"),
    "compat": ("compat.json", "per_mode.csv", "partial_norms.csv"),
    "instability": ("report.json", "instability.csv"),
    "weyl": ("report.json", "weyl.csv"),
    "logconv": ("report.json", "height.csv", "matrix.csv"),
    "roundtrip": ("report.json", "cases.csv"),
    "matrix": ("report.json", "fvp_u0.csv", "matrix.csv"),
}

COMMAND_DEFAULTS = {
    "roundtrip": {"N": 6},
    "matrix": {"T": 0.5},
}

_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
_OPTIONAL_STR = {"config", "u0", "f", "uT", "matrix"}
_OPTIONAL_FLOAT = {"margin_eps", "decay"}


def _convert(name: str, raw):
    typ = _FIELD_TYPES[name]
    if name in _OPTIONAL_STR or typ in ("str", str):
        return str(raw)
    try:
        if name in _OPTIONAL_FLOAT or typ in ("float", float):
            return float(raw)
        if typ in ("int", int):
            return int(raw)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {raw!r}") from None
    return raw


def _read_config_file(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError):
        raise InputError(f"cannot read config file: {path}") from None
    values = {}
    for no, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{no}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELD_TYPES or key in ("command", "config"):
            raise ConfigError(f"{path}:{no}: unknown key {key!r}")
        values[key] = _convert(key, val)
    return values


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("common")
    g.add_argument("--basis", choices=("interval", "rectangle"), default=S)
    g.add_argument("--L", type=float, default=S, help="interval length (default pi)")
    g.add_argument("--Lx", type=float, default=S, help="rectangle side in x")
    g.add_argument("--Ly", type=float, default=S, help="rectangle side in y")
    g.add_argument("--N", type=int, default=S, help="modes (per axis for the rectangle)")
    g.add_argument("--T", type=float, default=S, help="final time")
    g.add_argument("--steps", type=int, default=S, help="time steps M")
    g.add_argument("--theta", type=float, default=S, help="interpolation parameter in (0,1)")
    g.add_argument("--seed", type=int, default=S)
    g.add_argument("--policy", choices=("fail", "zero", "saturate"), default=S)
    g.add_argument("--out", default=S, help="output directory")
    g.add_argument("--config", default=S, help="key=value file; flags take precedence")

    parser = _Parser(prog="fvheat", description="Final value heat conduction toolkit")
    parser.add_argument("--version", action="version", version=f"fvheat {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def thresholds(p):
        p.add_argument("--target", choices=("Y0", "Y1"), default=S)
        p.add_argument("--margin-eps", dest="margin_eps", type=float, default=S)
        p.add_argument("--tail-tol", dest="tail_tol", type=float, default=S)
        p.add_argument("--growth-factor", dest="growth_factor", type=float, default=S)

    def matrix_source(p):
        p.add_argument("--matrix", default=S, help="matrix CSV (triplets or dense)")
        p.add_argument("--fixture", choices=FIXTURES, default=S)
        p.add_argument("--n", type=int, default=S, help="size of generated matrices")
        p.add_argument("--sign", type=int, choices=(1, -1), default=S)
        p.add_argument("--bc-left", dest="bc_left", default=S)
        p.add_argument("--bc-right", dest="bc_right", default=S)

    p = sub.add_parser("forward", parents=[common], help="forward solve and X-norms")
    p.add_argument("--u0", default=S, help="initial coefficients CSV (default: seeded random)")
    p.add_argument("--f", default=S, help="source samples CSV (default: zero or seeded random)")

    p = sub.add_parser("backward", parents=[common], help="final value solve")
    p.add_argument("--uT", default=S, help="final coefficients CSV (default: seeded fixture)")
    p.add_argument("--f", default=S)
    thresholds(p)

    p = sub.add_parser("compat", parents=[common], help="compatibility verdict")
    p.add_argument("--uT", default=S)
    p.add_argument("--f", default=S)
    p.add_argument("--decay", type=float, default=S, help="synthetic data w_k = exp(-decay lambda_k)")
    thresholds(p)

    p = sub.add_parser("instability", parents=[common], help="amplification table exp(T lambda_j)")
    p.add_argument("--J", type=int, default=S)

    p = sub.add_parser("weyl", parents=[common], help="eigenvalue counts")
    p.add_argument("--lam", default=S, help="comma-separated thresholds")

    p = sub.add_parser("logconv", parents=[common], help="log-convexity diagnostics")
    matrix_source(p)
    p.add_argument("--samples", type=int, default=S)

    p = sub.add_parser("roundtrip", parents=[common], help="forward/backward isomorphism check")
    p.add_argument("--cases", type=int, default=S)

    p = sub.add_parser("matrix", parents=[common], help="matrix semigroup checks and final value solve")
    matrix_source(p)
    return parser


def resolve_config(argv) -> RunConfig:
    """Defaults < per-command defaults < config file < flags."""
    ns = vars(build_parser().parse_args(argv))
    command = ns.pop("command")
    values = dict(COMMAND_DEFAULTS.get(command, {}))
    if "config" in ns:
        values.update(_read_config_file(ns["config"]))
    values.update(ns)
    return RunConfig(command=command, **values)


# ---------------------------------------------------------------------------
# helpers


def _basis(cfg: RunConfig) -> SpectralBasis:
    if cfg.basis == "interval":
        return interval_basis(IntervalDomain(cfg.L), cfg.N)
    return rectangle_basis(RectangleDomain(cfg.Lx, cfg.Ly), cfg.N, cfg.N)


def _grid(cfg: RunConfig) -> TimeGrid:
    return TimeGrid.uniform(cfg.T, cfg.steps)


def _header(cfg: RunConfig, basis: SpectralBasis | None = None) -> dict:
    out = {"command": cfg.command, "version": __version__, "config": cfg.report_config()}
    if basis is not None:
        out["basis"] = basis.domain_tag
    return out


def _out(cfg: RunConfig, name: str) -> Path:
    assert name in OUTPUTS[cfg.command], name
    return Path(cfg.out) / name


def _load_final_data(cfg: RunConfig, generate) -> FinalData:
    if cfg.uT is None:
        return generate()
    u_T = read_coeffs(cfg.uT)
    if cfg.f is not None:
        f = read_source(cfg.f, u_T.basis)
    else:
        f = SourceTerm.zero(u_T.basis, _grid(cfg))
    return FinalData(u_T, f)


def _thresholds(cfg: RunConfig) -> Thresholds:
    return Thresholds(cfg.margin_eps, cfg.tail_tol, cfg.growth_factor)


def _operator(cfg: RunConfig) -> MatrixOperator:
    if cfg.matrix is not None:
        try:
            return MatrixOperator(read_matrix(cfg.matrix))
        except ValueError as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"{cfg.matrix}: {exc}") from None
    rng = np.random.default_rng(cfg.seed)
    if cfg.fixture == "jordan":
        return MatrixOperator(np.array([[1.0, 1.0], [0.0, 1.0]]))
    if cfg.fixture == "random":
        return random_coercive(cfg.n, rng)
    if cfg.fixture == "random-sa":
        return random_coercive(cfg.n, rng, self_adjoint=True)
    return advection_diffusion_builder(max(cfg.n, 3), cfg.sign, cfg.bc_left, cfg.bc_right)


# ---------------------------------------------------------------------------
# subcommands


def cmd_forward(cfg: RunConfig) -> int:
    rng = np.random.default_rng(cfg.seed)
    if cfg.u0 is None:
        basis = _basis(cfg)
        u0, f = random_smooth_data(basis, _grid(cfg), rng)
        if cfg.f is not None:
            f = read_source(cfg.f, basis)
    else:
        u0 = read_coeffs(cfg.u0)
        basis = u0.basis
        f = read_source(cfg.f, basis) if cfg.f is not None else SourceTerm.zero(basis, _grid(cfg))
    traj = solve_forward(u0, f)
    write_trajectory(_out(cfg, "trajectory.csv"), traj)
    write_trajectory(_out(cfg, "source.csv"), f)
    write_coeffs(_out(cfg, "u0.csv"), u0)
    write_coeffs(_out(cfg, "u_T.csv"), traj.final())
    write_json(_out(cfg, "norms.json"), _header(cfg, basis) | {
        "grid": {"T": f.grid.T, "steps": f.grid.M},
        "norms": {
            "X0": norm_X0(traj, f),
            "X1": norm_X1(traj, f),
            "X_full": norm_X_full(traj, f),
            "X_equivalent": norm_X_equivalent(traj, f),
        },
        "u0": {
            "H1": sobolev_norm(u0, 1),
            "interpolation_half": interpolation_half_norm(u0),
            "lions_magenes": lions_magenes_norm(u0, cfg.theta),
        },
        "u_T": {"L2": sobolev_norm(traj.final(), 0), "H1": sobolev_norm(traj.final(), 1)},
    })
    return EXIT_OK


def _compat_tables(cfg: RunConfig, report) -> None:
    d = report.to_dict()
    write_table(_out(cfg, "per_mode.csv"), ["mode", "lambda", "margin"],
                [(r["mode"], r["lambda"], r["margin"]) for r in d["per_mode"]])
    write_table(_out(cfg, "partial_norms.csv"), ["N", "value", "log_value"],
                [(r["N"], r["value"], r["log_value"]) for r in d["partial_norms"]])


def cmd_backward(cfg: RunConfig) -> int:
    def generate():
        # homogeneous fixture: u_T = exp(-TA) u0 for a seeded smooth u0
        basis = _basis(cfg)
        u0, _ = random_smooth_data(basis, _grid(cfg), np.random.default_rng(cfg.seed))
        f = SourceTerm.zero(basis, _grid(cfg))
        return FinalData(solve_forward(u0, f).final(), f)

    data = _load_final_data(cfg, generate)
    report = check_compatibility(data, cfg.target, _thresholds(cfg))
    header = _header(cfg, data.basis)
    write_json(_out(cfg, "compat.json"), header | {"report": report.to_dict()})
    policy = OverflowPolicy(cfg.policy)
    if report.verdict is Verdict.INCOMPATIBLE and policy is OverflowPolicy.FAIL:
        raise Failure("final data judged INCOMPATIBLE; rerun with --policy zero|saturate to force a solve")
    try:
        traj = solve_backward(data, policy)
    except SemigroupOverflowError as exc:
        raise Failure(str(exc)) from None
    write_trajectory(_out(cfg, "trajectory.csv"), traj)
    write_coeffs(_out(cfg, "u0.csv"), traj.initial())
    ynorms = {}
    for name, fn in (("Y0", norm_Y0), ("Y1", norm_Y1)):
        try:
            ynorms[name] = fn(data, report)
        except DivergentNormError as exc:
            ynorms[name] = None
            ynorms[f"{name}_error"] = str(exc)
    write_json(_out(cfg, "ynorms.json"), header | {
        "norms": ynorms,
        "verdict": report.verdict.value,
        "overflow_modes": [] if traj.overflow is None else [int(k) for k in np.flatnonzero(traj.overflow.any(axis=1))],
    })
    return EXIT_OK


def cmd_compat(cfg: RunConfig) -> int:
    def generate():
        basis = _basis(cfg)
        rho = 2.0 * cfg.T if cfg.decay is None else cfg.decay
        u_T = SpectralCoeffs(basis, np.exp(-rho * basis.eigenvalues))
        return FinalData.homogeneous(u_T, _grid(cfg))

    if cfg.uT is not None and cfg.decay is not None:
        raise ConfigError("give either --uT or --decay, not both")
    data = _load_final_data(cfg, generate)
    report = check_compatibility(data, cfg.target, _thresholds(cfg))
    write_json(_out(cfg, "compat.json"), _header(cfg, data.basis) | {"report": report.to_dict()})
    _compat_tables(cfg, report)
    if report.verdict is Verdict.INCOMPATIBLE and cfg.policy == "fail":
        raise Failure("final data judged INCOMPATIBLE")
    return EXIT_OK


def cmd_instability(cfg: RunConfig) -> int:
    basis = _basis(cfg)
    rows = instability_table(basis, cfg.T, cfg.J, cfg.steps)
    write_table(_out(cfg, "instability.csv"),
                ["j", "lambda", "amplification", "log_amplification", "solved_norm", "relative_error"],
                [(r.j, r.lam, r.amplification, r.log_amplification, r.solved_norm, r.relative_error) for r in rows])
    write_json(_out(cfg, "report.json"), _header(cfg, basis) | {"rows": [r.to_dict() for r in rows]})
    return EXIT_OK


def _weyl_basis(cfg: RunConfig, lam_max: float, explicit_N: bool) -> SpectralBasis:
    if explicit_N:
        return _basis(cfg)
    if cfg.basis == "interval":
        N = int(math.ceil(cfg.L * math.sqrt(lam_max) / math.pi)) + 2
        return interval_basis(IntervalDomain(cfg.L), N)
    Nx = int(math.ceil(cfg.Lx * math.sqrt(lam_max) / math.pi)) + 2
    Ny = int(math.ceil(cfg.Ly * math.sqrt(lam_max) / math.pi)) + 2
    return rectangle_basis(RectangleDomain(cfg.Lx, cfg.Ly), Nx, Ny)


def cmd_weyl(cfg: RunConfig, explicit_N: bool = False) -> int:
    lams = cfg.lam_values()
    basis = _weyl_basis(cfg, max(lams), explicit_N)
    counts = [weyl_count(basis, lam) for lam in lams]
    write_table(_out(cfg, "weyl.csv"), ["lambda", "count", "leading_term", "difference", "truncation_limited"],
                [(c.lam, c.count, c.leading_term, c.difference, c.truncation_limited) for c in counts])
    write_json(_out(cfg, "report.json"), _header(cfg, basis) | {"counts": [c.to_dict() for c in counts]})
    return EXIT_OK


def cmd_logconv(cfg: RunConfig) -> int:
    op = _operator(cfg)
    rng = np.random.default_rng(cfg.seed)
    grid = _grid(cfg)
    crit = logconvexity_criterion_min(op, count=cfg.samples, seed=cfg.seed)
    search = find_logconvexity_violation(op, grid, count=max(16, cfg.samples // 8), seed=cfg.seed)
    u0 = rng.standard_normal(op.n) + 1j * rng.standard_normal(op.n)
    try:
        curve = height_curve(op, u0, grid)
    except OverflowBudgetError as exc:
        raise Failure(str(exc)) from None
    check = logconvexity_check(curve)
    vals = logconvexity_values(curve)
    write_matrix(_out(cfg, "matrix.csv"), op.A)
    write_table(_out(cfg, "height.csv"), ["t", "h", "dh", "d2h", "logconv", "fd_error_1", "fd_error_2"],
                zip(curve.t, curve.h, curve.dh, curve.d2h, vals, curve.fd_error_1, curve.fd_error_2))
    gap = hyponormality_gap(op)
    write_json(_out(cfg, "report.json"), _header(cfg) | {
        "n": op.n,
        "criterion": crit.to_dict(),
        "violation_search": search.to_dict(),
        "signs_agree": (not crit.holds) == search.found,
        "hyponormality_gap": gap.gap,
        "normal": gap.normal,
        "height_curve": {"min_logconv": check.minimum, "scale": check.scale, "log_convex": check.log_convex},
    })
    return EXIT_OK


def cmd_roundtrip(cfg: RunConfig) -> int:
    basis = _basis(cfg)
    grid = _grid(cfg)
    rng = np.random.default_rng(cfg.seed)
    rows, ok = [], True
    for case in range(cfg.cases):
        u0, f = random_smooth_data(basis, grid, rng)
        try:
            rep = roundtrip(u0, f, policy=cfg.policy)
        except SemigroupOverflowError as exc:
            raise Failure(f"case {case}: {exc}") from None
        node_bound = rep.amplification * 1e-12 * rep.scale
        uT_norm = float(np.linalg.norm(solve_forward(u0, f).final().values))
        term_bound = 1e-13 * uT_norm
        passed = rep.max_node_residual <= node_bound and rep.terminal_residual <= term_bound
        ok &= passed
        rows.append((case, rep.max_node_residual, node_bound, rep.terminal_residual, term_bound, passed))
    write_table(_out(cfg, "cases.csv"),
                ["case", "max_node_residual", "node_bound", "terminal_residual", "terminal_bound", "passed"], rows)
    write_json(_out(cfg, "report.json"), _header(cfg, basis) | {
        "lambda_max_T": float(basis.eigenvalues[-1]) * cfg.T,
        "max_node_residual": max(r[1] for r in rows),
        "max_terminal_residual": max(r[3] for r in rows),
        "passed": ok,
    })
    if not ok:
        raise Failure("round trip residual above its bound")
    return EXIT_OK


def cmd_matrix(cfg: RunConfig) -> int:
    op = _operator(cfg)
    rng = np.random.default_rng(cfg.seed)
    prof = coercivity_profile(op)
    vertex = prof.sector_vertex
    sector = sector_check(op, vertex, prof.theta)
    lam = vertex + 1.0
    gap = lam - float(np.max(np.linalg.eigvals(-op.A).real))
    horizon = max(40.0, 31.0 / gap)
    # Simpson needs h ||A|| = O(1) to resolve the fastest modes; capped for large stiff operators
    quarters = min(50_000, max(1000, math.ceil(horizon * float(np.linalg.norm(op.A, 2)))))
    laplace = laplace_identity_check(op, lam, horizon=horizon, steps=4 * quarters + 1)
    grid = _grid(cfg)
    v = rng.standard_normal(op.n) + 1j * rng.standard_normal(op.n)
    w = rng.standard_normal(op.n) + 1j * rng.standard_normal(op.n)
    u_T = rng.standard_normal(op.n) + 1j * rng.standard_normal(op.n)
    F = rng.standard_normal((op.n, grid.nodes.size))
    try:
        probe = injectivity_probe(op, v, w, grid)
        fvp = matrix_fvp_solve(op, u_T, F, grid)
    except OverflowBudgetError as exc:
        raise Failure(str(exc)) from None
    write_matrix(_out(cfg, "matrix.csv"), op.A)
    write_table(_out(cfg, "fvp_u0.csv"), ["index", "re", "im"],
                [(i, z.real, z.imag) for i, z in enumerate(fvp.u0)])
    write_json(_out(cfg, "report.json"), _header(cfg) | {
        "n": op.n,
        "profile": prof.to_dict() | {"sector_vertex": vertex},
        "hyponormality_gap": hyponormality_gap(op).gap,
        "sector": sector.to_dict(),
        "laplace": laplace.to_dict() | {"lambda": lam},
        "translation_defect": translation_check(op, 1.0 + 0.5j, cfg.T),
        "injectivity": {"minimum": probe.minimum, "bound_holds": probe.bound_holds},
        "fvp": fvp.to_dict(),
    })
    return EXIT_OK


_DISPATCH = {
    "forward": cmd_forward,
    "backward": cmd_backward,
    "compat": cmd_compat,
    "instability": cmd_instability,
    "weyl": cmd_weyl,
    "logconv": cmd_logconv,
    "roundtrip": cmd_roundtrip,
    "matrix": cmd_matrix,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = resolve_config(argv)
        if cfg.command == "weyl":
            return cmd_weyl(cfg, explicit_N="--N" in argv or "N" in _config_keys(cfg))
        return _DISPATCH[cfg.command](cfg)
    except InputError as exc:
        print(f"fvheat: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Failure as exc:
        print(f"fvheat: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ConfigError, ValueError) as exc:
        print(f"fvheat: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def _config_keys(cfg: RunConfig) -> set:
    return set(_read_config_file(cfg.config)) if cfg.config else set()


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
