"""Finite truncations of the gamma operator family and basic matrix plumbing.

All index arguments of the Python API are 0-based: ``column(T, 0)`` is the
first column. Mathematical labels in reports (``d_10`` and so on) are 1-based.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from mindiag.errors import FormatError, ParameterError, ZeroPivotError

VARIANTS = ("T", "T1", "D_seq", "Tr", "TrPlusD", "Q", "R", "C_a")

SYMMETRY_ATOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


class SymMatrix:
    """Dense real symmetric matrix, immutable after construction.

    Input that is symmetric up to ``SYMMETRY_ATOL`` (relative to the largest
    entry) is symmetrized exactly; anything further off is rejected.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries):
        a = np.asarray(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise ParameterError(f"expected a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ParameterError("matrix entries must be finite")
        scale = max(1.0, float(np.max(np.abs(a))))
        asym = float(np.max(np.abs(a - a.T)))
        if asym > SYMMETRY_ATOL * scale:
            raise ParameterError(f"matrix is not symmetric (max |a_ij - a_ji| = {asym:.3g})")
        if asym > 0.0:
            a = 0.5 * (a + a.T)
        self._entries = _frozen(a)

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    @property
    def n(self) -> int:
        return self._entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._entries
        return self._entries.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, SymMatrix):
            return NotImplemented
        return np.array_equal(self._entries, other._entries)

    __hash__ = None

    def __repr__(self):
        return f"SymMatrix(n={self.n})"


class DiagVector:
    """Real vector holding the diagonal of a diagonal operator."""

    __slots__ = ("_d",)

    def __init__(self, d):
        d = np.asarray(d, dtype=float)
        if d.ndim != 1 or d.size == 0:
            raise ParameterError(f"expected a non-empty vector, got shape {d.shape}")
        if not np.all(np.isfinite(d)):
            raise ParameterError("diagonal entries must be finite")
        self._d = _frozen(d)

    @property
    def d(self) -> np.ndarray:
        return self._d

    @property
    def n(self) -> int:
        return self._d.size

    def as_matrix(self) -> np.ndarray:
        return np.diag(self._d)

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._d
        return self._d.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, DiagVector):
            return NotImplemented
        return np.array_equal(self._d, other._d)

    __hash__ = None

    def __repr__(self):
        return f"DiagVector(n={self.n})"


def as_array(T) -> np.ndarray:
    """Plain float array view of a SymMatrix, DiagVector or array-like."""
    if isinstance(T, SymMatrix):
        return T.entries
    if isinstance(T, DiagVector):
        return T.d
    return np.asarray(T, dtype=float)


def as_sym(T) -> SymMatrix:
    return T if isinstance(T, SymMatrix) else SymMatrix(T)


@dataclass(frozen=True)
class GammaFamilySpec:
    gamma: float
    n: int
    variant: str = "T"

    def __post_init__(self):
        g = self.gamma
        if not isinstance(g, (int, float)) or not math.isfinite(g):
            raise ParameterError(f"gamma must be a finite real, got {g!r}")
        if g == 0 or abs(g) >= 1:
            raise ParameterError(f"gamma must satisfy 0 < |gamma| < 1, got {g}")
        if int(self.n) != self.n or self.n < 1:
            raise ParameterError(f"n must be a positive integer, got {self.n}")
        if self.variant not in VARIANTS:
            raise ParameterError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")

    def with_(self, **changes) -> "GammaFamilySpec":
        return GammaFamilySpec(**{**self.__dict__, **changes})


@dataclass
class MatrixFile:
    n: int
    entries: np.ndarray
    metadata: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_matrix(cls, T, **metadata) -> "MatrixFile":
        a = as_array(T)
        return cls(n=a.shape[0], entries=np.array(a, dtype=float), metadata=dict(metadata))

    def to_sym(self) -> SymMatrix:
        return SymMatrix(self.entries)


# -- tail bounds -------------------------------------------------------------


def tail_bound(gamma: float, n: int) -> float:
    """Analytic remainder sum_{k>n} gamma^(2k) of the neglected tail."""
    g2 = gamma * gamma
    return g2 ** (n + 1) / (1.0 - g2)


def buffer_size(gamma: float, eps: float = 1e-14) -> int:
    """Extra rows needed so that gamma^(2*buffer) drops below ``eps``."""
    return int(math.ceil(math.log(eps) / (2.0 * math.log(abs(gamma))))) + 2


# -- gamma family ------------------------------------------------------------


def _gamma_T_array(gamma: float, n: int) -> np.ndarray:
    idx = np.arange(1, n + 1)
    i, j = np.meshgrid(idx, idx, indexing="ij")
    border = (i == 1) | (j == 1)
    expo = np.where(border, np.abs(i - j), np.maximum(i, j) - 2)
    a = np.power(float(gamma), expo.astype(float))
    a[i == j] = 0.0
    return a


def build_gamma_T(spec: GammaFamilySpec) -> SymMatrix:
    """Principal n x n corner of the gamma operator T (zero diagonal)."""
    return SymMatrix(_gamma_T_array(spec.gamma, spec.n))


def build_T1(spec: GammaFamilySpec) -> SymMatrix:
    """T with its first row and column set to zero."""
    return zero_row_col(build_gamma_T(spec), 0)


def _d_closed_form(gamma: float, k: np.ndarray) -> np.ndarray:
    g = gamma
    gk = np.power(g, k.astype(float))
    return -(g * g - gk) / ((1.0 - g) * g * g) + gk / (g * g - 1.0)


def build_d_sequence(spec: GammaFamilySpec) -> DiagVector:
    """Diagonal making every column of T + D orthogonal to the first column.

    Entries with 1-based index k > 3 use the closed form; d_2 and d_3 are
    obtained by solving the orthogonality equation on a buffered truncation.
    """
    g = spec.gamma
    n = spec.n
    d = np.zeros(n)
    if n >= 4:
        d[3:] = _d_closed_form(g, np.arange(4, n + 1))
    small = [k for k in (2, 3) if k <= n]
    if small:
        big = GammaFamilySpec(g, 3 + buffer_size(g), "T")
        sol = solve_orthogonality(_gamma_T_array(g, big.n), 0)
        for k in small:
            d[k - 1] = sol[k - 1]
    return DiagVector(d)


def solve_orthogonality(t_off: np.ndarray, i0: int) -> np.ndarray:
    """d with d[i0] = 0 and <c_i0(T), c_k(T + Diag d)> = 0 for every k != i0.

    ``t_off`` is read with its diagonal ignored. Shared by the family builder
    and the construction module.
    """
    a = np.array(t_off, dtype=float, copy=True)
    np.fill_diagonal(a, 0.0)
    n = a.shape[0]
    row = a[i0]
    d = np.zeros(n)
    # <c_i0, c_k> over rows other than i0 and k; diagonal already zeroed
    cross = row @ a
    for k in range(n):
        if k == i0:
            continue
        pivot = row[k]
        if pivot == 0.0:
            raise ZeroPivotError(f"T[{i0}][{k}] is zero; orthogonality equation for index {k} has no solution", k)
        d[k] = -cross[k] / pivot
    return d


def column_norm_sq(gamma: float, n: int) -> float:
    """||c_1(T)||^2 on an n-truncation: sum_{k=1}^{n-1} gamma^(2k)."""
    g2 = gamma * gamma
    return g2 * (1.0 - g2 ** (n - 1)) / (1.0 - g2)


def compute_r(spec: GammaFamilySpec) -> float:
    """Ratio ||T^[1] + D|| / ||c_1(T)|| on the n-truncation."""
    from mindiag.spectral import op_norm

    if spec.n < 2:
        raise ParameterError("r is undefined for n < 2 (no off-diagonal entries)")
    t1 = _gamma_T_array(spec.gamma, spec.n)
    t1[0, :] = 0.0
    t1[:, 0] = 0.0
    t1 += np.diag(build_d_sequence(spec).d)
    t1[0, 0] = 0.0
    return op_norm(t1) / math.sqrt(column_norm_sq(spec.gamma, spec.n))


def build_Tr(spec: GammaFamilySpec, r: float | None = None) -> SymMatrix:
    """T with first row and column scaled by r (r from ``compute_r`` by default)."""
    if r is None:
        r = compute_r(spec)
    a = _gamma_T_array(spec.gamma, spec.n)
    a[0, :] *= r
    a[:, 0] *= r
    return SymMatrix(a)


def build_TrPlusD(spec: GammaFamilySpec, r: float | None = None) -> SymMatrix:
    a = np.array(build_Tr(spec, r).entries)
    a += np.diag(build_d_sequence(spec).d)
    return SymMatrix(a)


def build_Q(spec: GammaFamilySpec) -> SymMatrix:
    """Q_ij = gamma^max(i, j) (1-based)."""
    idx = np.arange(1, spec.n + 1)
    return SymMatrix(np.power(float(spec.gamma), np.maximum.outer(idx, idx).astype(float)))


def build_R(spec: GammaFamilySpec, r: float | None = None) -> SymMatrix:
    """Rank-2 border: r*gamma^(k-1) on the first row/column, zero elsewhere."""
    if r is None:
        r = compute_r(spec)
    a = np.zeros((spec.n, spec.n))
    k = np.arange(2, spec.n + 1)
    a[0, 1:] = r * np.power(float(spec.gamma), (k - 1).astype(float))
    a[1:, 0] = a[0, 1:]
    return SymMatrix(a)


def build_C_a(spec: GammaFamilySpec, a: float | None = None) -> np.ndarray:
    """Lower-triangular (C_a)_ij = a^i for i >= j, with a = sqrt(gamma) by default."""
    if a is None:
        if spec.gamma <= 0:
            raise ParameterError("C_a with a = sqrt(gamma) needs gamma > 0")
        a = math.sqrt(spec.gamma)
    idx = np.arange(1, spec.n + 1, dtype=float)
    c = np.tril(np.repeat(np.power(a, idx)[:, None], spec.n, axis=1))
    c.setflags(write=False)
    return c


def build(spec: GammaFamilySpec):
    """Dispatch on ``spec.variant``; returns SymMatrix, DiagVector or array."""
    builders = {
        "T": build_gamma_T,
        "T1": build_T1,
        "D_seq": build_d_sequence,
        "Tr": build_Tr,
        "TrPlusD": build_TrPlusD,
        "Q": build_Q,
        "R": build_R,
        "C_a": build_C_a,
    }
    return builders[spec.variant](spec)


# -- elementary operations ----------------------------------------------------


def _check_index(n: int, j: int) -> None:
    if not 0 <= j < n:
        raise IndexError(f"index {j} out of range for size {n}")


def column(T, j: int) -> np.ndarray:
    a = as_array(T)
    _check_index(a.shape[1], j)
    return a[:, j].copy()


def zero_row_col(T, i0: int) -> SymMatrix:
    a = np.array(as_array(T), copy=True)
    _check_index(a.shape[0], i0)
    a[i0, :] = 0.0
    a[:, i0] = 0.0
    return SymMatrix(a)


def diag_map(T) -> DiagVector:
    return DiagVector(np.diag(as_array(T)))


def hadamard(v, w) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if v.shape != w.shape:
        raise ParameterError(f"shape mismatch {v.shape} vs {w.shape}")
    return v * w


def with_diag(C, d) -> np.ndarray:
    """C + Diag(d) as a plain array."""
    a = np.array(as_array(C), dtype=float, copy=True)
    a[np.diag_indices_from(a)] += as_array(d)
    return a


def block_compose(A, B) -> SymMatrix:
    a, b = as_array(A), as_array(B)
    n, m = a.shape[0], b.shape[0]
    out = np.zeros((n + m, n + m))
    out[:n, :n] = a
    out[n:, n:] = b
    return SymMatrix(out)


# -- files ------------------------------------------------------------------


def save_matrix(path, mf: MatrixFile) -> None:
    a = np.asarray(mf.entries, dtype=float)
    payload = {
        "n": int(mf.n),
        "entries": [[float(x) for x in row] for row in a],
        "metadata": mf.metadata,
    }
    Path(path).write_text(json.dumps(payload, indent=1) + "\n")


def load_matrix(path, require_symmetric: bool = True) -> MatrixFile:
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise FormatError(f"cannot read matrix file {path}: {exc}") from exc
    if not isinstance(payload, dict) or "entries" not in payload:
        raise FormatError(f"{path}: missing 'entries'")
    try:
        a = np.array(payload["entries"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{path}: entries are not a numeric rectangular array") from exc
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise FormatError(f"{path}: entries must be a non-empty square array, got shape {a.shape}")
    n = payload.get("n", a.shape[0])
    if n != a.shape[0]:
        raise FormatError(f"{path}: n = {n} disagrees with entries of size {a.shape[0]}")
    if not np.all(np.isfinite(a)):
        raise FormatError(f"{path}: non-finite entries")
    if require_symmetric:
        asym = float(np.max(np.abs(a - a.T)))
        if asym > SYMMETRY_ATOL:
            raise FormatError(f"{path}: matrix is not symmetric (max |a_ij - a_ji| = {asym:.3g})")
    metadata = payload.get("metadata") or {}
    if not isinstance(metadata, dict):
        raise FormatError(f"{path}: metadata must be an object")
    return MatrixFile(n=int(n), entries=a, metadata=metadata)


def load_diag(path) -> DiagVector:
    """Read a diagonal from ``{"d": [...]}`` or from the diagonal of a matrix file."""
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise FormatError(f"cannot read diagonal file {path}: {exc}") from exc
    if isinstance(payload, dict) and "d" in payload:
        try:
            return DiagVector(np.array(payload["d"], dtype=float))
        except (TypeError, ValueError) as exc:
            raise FormatError(f"{path}: bad diagonal: {exc}") from exc
    return diag_map(load_matrix(path, require_symmetric=False).entries)


def save_diag(path, d, **metadata) -> None:
    d = as_array(d)
    payload = {"n": int(d.size), "d": [float(x) for x in d], "metadata": metadata}
    Path(path).write_text(json.dumps(payload, indent=1) + "\n")
