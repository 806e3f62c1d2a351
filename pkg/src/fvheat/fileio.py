"""CSV and JSON readers/writers (UTF-8, LF, shortest round-trip float text)."""

from __future__ import annotations

import csv
import io
import json
import math
from enum import Enum
from pathlib import Path

import numpy as np

from .evolution import SourceTerm, TimeGrid, Trajectory
from .model_domains import basis_for
from .spectral_core import SpectralBasis, SpectralCoeffs

__all__ = [
    "InputError",
    "fmt",
    "parse_tag",
    "write_coeffs",
    "read_coeffs",
    "write_trajectory",
    "read_source",
    "write_table",
    "write_json",
    "jsonable",
    "read_matrix",
    "write_matrix",
    "write_grid_samples",
]


class InputError(ValueError):
    """Malformed or unreadable input file."""


def fmt(x: float) -> str:
    """``repr`` of a Python float: shortest text that round-trips exactly."""
    return repr(float(x))


def parse_tag(line: str) -> dict:
    """``# domain=interval L=3.14 N=8`` -> dict with numeric values converted."""
    out = {}
    for part in line.lstrip("#").split():
        if "=" not in part:
            continue
        key, val = part.split("=", 1)
        for cast in (int, float):
            try:
                out[key] = cast(val)
                break
            except ValueError:
                continue
        else:
            out[key] = val
    return out


def _open_text(path, mode="r"):
    return open(path, mode, encoding="utf-8", newline="")


def _write_lines(path, header_comments, header, rows):
    buf = io.StringIO(newline="")
    for c in header_comments:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with _open_text(path, "w") as fh:
        fh.write(buf.getvalue())


def _read_rows(path):
    """(comment dicts, header, rows) of a CSV with ``#`` comment lines."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise InputError(f"input file not found: {path}") from None
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    comments, body = [], []
    for line in text.splitlines():
        if line.startswith("#"):
            comments.append(parse_tag(line))
        elif line.strip():
            body.append(line)
    rows = list(csv.reader(body))
    if not rows:
        raise InputError(f"{path}: no header row")
    return comments, [h.strip() for h in rows[0]], rows[1:]


def _meta(comments) -> dict:
    meta = {}
    for c in comments:
        meta.update(c)
    return meta


def _basis_from(meta: dict, lam: np.ndarray, path) -> SpectralBasis:
    kind = meta.get("domain", "custom")
    if kind in ("interval", "rectangle"):
        try:
            basis = basis_for(meta)
        except (KeyError, ValueError) as exc:
            raise InputError(f"{path}: bad basis metadata ({exc})") from None
        if basis.truncation != lam.size or not np.allclose(basis.eigenvalues, lam, rtol=1e-12, atol=1e-12):
            raise InputError(f"{path}: eigenvalue column does not match {basis.domain_tag}")
        return basis
    try:
        return SpectralBasis(lam)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def write_coeffs(path, v: SpectralCoeffs) -> None:
    rows = [
        (str(k), fmt(lam), fmt(c.real), fmt(c.imag))
        for k, (lam, c) in enumerate(zip(v.basis.eigenvalues, v.values))
    ]
    _write_lines(path, [v.basis.domain_tag], ["mode", "lambda", "re", "im"], rows)


def read_coeffs(path, basis: SpectralBasis | None = None) -> SpectralCoeffs:
    comments, header, rows = _read_rows(path)
    if header != ["mode", "lambda", "re", "im"]:
        raise InputError(f"{path}: expected header mode,lambda,re,im, got {','.join(header)}")
    try:
        data = np.array([[float(x) for x in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None
    if data.ndim != 2 or data.shape[1] != 4 or data.shape[0] == 0:
        raise InputError(f"{path}: expected 4 columns and at least one row")
    if not np.array_equal(data[:, 0], np.arange(data.shape[0])):
        raise InputError(f"{path}: modes must be 0, 1, 2, ... in ascending order")
    if not np.all(np.isfinite(data)):
        raise InputError(f"{path}: non-finite entries")
    found = _basis_from(_meta(comments), data[:, 1], path)
    if basis is not None:
        if not basis.compatible(found):
            raise InputError(f"{path}: basis {found.domain_tag} differs from {basis.domain_tag}")
        found = basis
    return SpectralCoeffs(found, data[:, 2] + 1j * data[:, 3])


def write_trajectory(path, traj: Trajectory | SourceTerm) -> None:
    block = traj.states if isinstance(traj, Trajectory) else traj.samples
    rows = []
    for m, t in enumerate(traj.grid.nodes):
        for k in range(block.shape[0]):
            c = block[k, m]
            rows.append((fmt(t), str(k), fmt(c.real), fmt(c.imag)))
    _write_lines(path, [traj.basis.domain_tag], ["time", "mode", "re", "im"], rows)


def read_source(path, basis: SpectralBasis) -> SourceTerm:
    """Source samples in the trajectory schema, on the basis given."""
    comments, header, rows = _read_rows(path)
    if header != ["time", "mode", "re", "im"]:
        raise InputError(f"{path}: expected header time,mode,re,im")
    try:
        data = np.array([[float(x) for x in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None
    n = basis.truncation
    if data.ndim != 2 or data.shape[1] != 4 or data.shape[0] % n:
        raise InputError(f"{path}: row count is not a multiple of {n} modes")
    nodes = data[::n, 0]
    M1 = nodes.size
    if not np.array_equal(data[:, 1], np.tile(np.arange(n), M1)):
        raise InputError(f"{path}: rows must be time-major with modes 0..{n - 1}")
    if not np.array_equal(data[:, 0], np.repeat(nodes, n)):
        raise InputError(f"{path}: time column inconsistent within a block")
    try:
        grid = TimeGrid(nodes)
        return SourceTerm(basis, grid, (data[:, 2] + 1j * data[:, 3]).reshape(M1, n).T)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def write_table(path, header, rows) -> None:
    """Generic CSV table; floats rendered with :func:`fmt`."""

    def cell(x):
        if isinstance(x, (bool, np.bool_)):
            return "true" if x else "false"
        if isinstance(x, (float, np.floating)):
            return fmt(x)
        if x is None:
            return ""
        return str(x)

    _write_lines(path, [], list(header), [[cell(x) for x in r] for r in rows])


def jsonable(obj):
    """Plain JSON types; non-finite floats become strings ``"inf"``, ``"-inf"``, ``"nan"``."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else ("nan" if math.isnan(x) else ("inf" if x > 0 else "-inf"))
    if isinstance(obj, (complex, np.complexfloating)):
        return [jsonable(obj.real), jsonable(obj.imag)]
    if obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(path, obj) -> None:
    text = json.dumps(jsonable(obj), indent=2, sort_keys=True, allow_nan=False, ensure_ascii=False)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with _open_text(path, "w") as fh:
        fh.write(text + "\n")


def read_matrix(path) -> np.ndarray:
    """Sparse ``row,col,re,im`` triplets (size from ``# n=...`` or max index) or dense rows.

    Dense cells accept anything ``complex()`` parses, e.g. ``1``, ``-2.5``, ``1+2j``.
    """
    comments, header, rows = _read_rows(path)
    meta = _meta(comments)
    try:
        if header == ["row", "col", "re", "im"]:
            trip = [(int(r[0]), int(r[1]), float(r[2]), float(r[3])) for r in rows]
            n = int(meta.get("n", 1 + max([max(i, j) for i, j, _, _ in trip], default=-1)))
            if n < 1:
                raise InputError(f"{path}: empty matrix")
            A = np.zeros((n, n), dtype=complex)
            for i, j, re, im in trip:
                if not (0 <= i < n and 0 <= j < n):
                    raise InputError(f"{path}: index ({i},{j}) outside {n}x{n}")
                A[i, j] += re + 1j * im
        else:
            dense = [header] + rows
            A = np.array([[complex(c.strip().replace(" ", "")) for c in r] for r in dense])
    except (ValueError, IndexError) as exc:
        raise InputError(f"{path}: {exc}") from None
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"{path}: matrix is not square")
    if not np.all(np.isfinite(A)):
        raise InputError(f"{path}: non-finite entries")
    return A


def write_matrix(path, A: np.ndarray) -> None:
    """Sparse triplet form, row-major, nonzeros only, with an ``n=`` header comment."""
    A = np.asarray(A, dtype=complex)
    rows = [
        (str(i), str(j), fmt(A[i, j].real), fmt(A[i, j].imag))
        for i in range(A.shape[0])
        for j in range(A.shape[1])
        if A[i, j] != 0
    ]
    _write_lines(path, [f"n={A.shape[0]}"], ["row", "col", "re", "im"], rows)


def write_grid_samples(path, points: np.ndarray, values: np.ndarray) -> None:
    pts = np.atleast_2d(np.asarray(points, dtype=float).T).T
    if pts.ndim == 1 or pts.shape[1] == 1:
        header = ["x", "value_re", "value_im"]
        pts = pts.reshape(-1, 1)
    else:
        header = ["x", "y", "value_re", "value_im"]
    rows = [[fmt(c) for c in p] + [fmt(v.real), fmt(v.imag)] for p, v in zip(pts, np.asarray(values, dtype=complex))]
    _write_lines(path, [], header, rows)
