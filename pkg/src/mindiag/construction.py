"""Minimal operators built from a column orthogonal to all others.

A real symmetric T with a zero diagonal entry at i0, a nowhere-vanishing
i0-th row, ``||c_i0(T)|| >= ||T^[i0]||`` and every other column orthogonal to
``c_i0(T)`` has ``||T|| = ||c_i0(T)||`` and its diagonal is the unique minimal
one. This module checks those hypotheses with numerical margins and builds
the orthogonalizing diagonal.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from mindiag.errors import ParameterError, ZeroPivotError
from mindiag.operators import DiagVector, as_array, solve_orthogonality
from mindiag.spectral import op_norm

# structural-zero threshold, relative to max |T_ij|
ZERO_REL = 1e-13
# tolerated shortfall in the dominance inequality, relative to ||c_i0||
DOMINANCE_REL = 1e-12
# tolerated column inner products, relative to ||c_i0||^2
ORTHO_REL = 1e-10


@dataclass(frozen=True)
class Caso3Report:
    i0: int
    hyp1_real: bool
    hyp2_nonzero_row: bool
    hyp3_dominance: bool
    dominance_margin: float
    hyp4_orthogonality: bool
    orthogonality_residual: float
    minimal_diag: DiagVector
    column_norm: float
    op_norm: float
    norm_identity_residual: float

    @property
    def all_hold(self) -> bool:
        return self.hyp1_real and self.hyp2_nonzero_row and self.hyp3_dominance and self.hyp4_orthogonality

    def to_dict(self) -> dict:
        out = asdict(self)
        out["minimal_diag"] = [float(x) for x in self.minimal_diag.d]
        out["all_hold"] = self.all_hold
        return out


def _nonzero_row(a: np.ndarray, i0: int) -> bool:
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    thresh = ZERO_REL * scale
    row = np.delete(a[i0], i0)
    return bool(abs(a[i0, i0]) <= thresh and np.all(np.abs(row) > thresh))


def solve_orthogonal_diagonal(T_off, i0: int) -> DiagVector:
    """Diagonal d (d[i0] = 0) making every column of T_off + Diag(d) orthogonal to column i0."""
    a = np.asarray(as_array(T_off), dtype=float)
    n = a.shape[0]
    if not 0 <= i0 < n:
        raise IndexError(f"index {i0} out of range for size {n}")
    if np.any(np.diag(a) != 0.0):
        raise ParameterError("T_off must have a zero diagonal")
    for k in range(n):
        if k != i0 and a[i0, k] == 0.0:
            raise ZeroPivotError(f"T_off[{i0}][{k}] is zero; cannot solve for d[{k}]", k)
    return DiagVector(solve_orthogonality(a, i0))


def verify_caso3(T, i0: int) -> Caso3Report:
    a = np.asarray(as_array(T), dtype=float)
    n = a.shape[0]
    if not 0 <= i0 < n:
        raise IndexError(f"index {i0} out of range for size {n}")
    hyp1 = bool(np.all(np.isfinite(a)) and np.isrealobj(a))
    hyp2 = _nonzero_row(a, i0)

    c = a[:, i0]
    cn = float(np.linalg.norm(c))
    reduced = a.copy()
    reduced[i0, :] = 0.0
    reduced[:, i0] = 0.0
    margin = cn - op_norm(reduced)
    hyp3 = bool(margin >= -DOMINANCE_REL * max(cn, 1e-300))

    inner = c @ a
    inner[i0] = 0.0
    ortho = float(np.max(np.abs(inner))) if n > 1 else 0.0
    hyp4 = bool(ortho <= ORTHO_REL * max(cn * cn, 1e-300))

    if hyp2:
        off = a.copy()
        np.fill_diagonal(off, 0.0)
        minimal = DiagVector(solve_orthogonality(off, i0))
    else:
        minimal = DiagVector(np.diag(a))

    tn = op_norm(a)
    return Caso3Report(
        i0=i0,
        hyp1_real=hyp1,
        hyp2_nonzero_row=hyp2,
        hyp3_dominance=hyp3,
        dominance_margin=float(margin),
        hyp4_orthogonality=hyp4,
        orthogonality_residual=ortho,
        minimal_diag=minimal,
        column_norm=cn,
        op_norm=float(tn),
        norm_identity_residual=float(abs(tn - cn)),
    )
