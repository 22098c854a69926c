"""Symmetric eigendecomposition, operator norms and extreme spectral projections."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mindiag import kernels
from mindiag.errors import DegenerateSpectrumError, NumericalError, ParameterError
from mindiag.operators import as_array

JACOBI_TOL = 1e-14
MAX_SWEEPS = 100
CLUSTER_TOL = 1e-8


@dataclass(frozen=True)
class EigenSystem:
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # columns, orthonormal
    residual: float
    sweeps: int = 0

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    @property
    def norm(self) -> float:
        return float(max(abs(self.eigenvalues[0]), abs(self.eigenvalues[-1])))

    @property
    def lam_max(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def lam_min(self) -> float:
        return float(self.eigenvalues[0])


@dataclass(frozen=True)
class SpectralProjections:
    plus_basis: np.ndarray
    minus_basis: np.ndarray
    cluster_tol: float
    lam_max: float
    lam_min: float
    norm: float

    @property
    def r(self) -> int:
        return self.plus_basis.shape[1]

    @property
    def s(self) -> int:
        return self.minus_basis.shape[1]

    def projector_plus(self) -> np.ndarray:
        return self.plus_basis @ self.plus_basis.T

    def projector_minus(self) -> np.ndarray:
        return self.minus_basis @ self.minus_basis.T


def _fix_signs(v: np.ndarray) -> np.ndarray:
    # largest-magnitude component of each eigenvector made positive
    idx = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[idx, np.arange(v.shape[1])])
    signs[signs == 0] = 1.0
    return v * signs


def eig_sym(T, warm_start: np.ndarray | None = None) -> EigenSystem:
    """Full eigendecomposition by cyclic Jacobi rotations.

    ``warm_start`` is an orthogonal matrix close to the eigenbasis (for
    instance the basis of a nearby matrix); rotations then start from
    ``V0^T T V0`` and usually need only a couple of sweeps.
    """
    a = np.asarray(as_array(T), dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ParameterError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if warm_start is None:
        v0 = np.eye(n)
        a0 = a
    else:
        v0 = np.asarray(warm_start, dtype=float)
        a0 = v0.T @ a @ v0
        a0 = 0.5 * (a0 + a0.T)
    w, v, sweeps, off = kernels.jacobi(a0, v0, JACOBI_TOL, MAX_SWEEPS)
    fro = np.linalg.norm(a0)
    if off > JACOBI_TOL * fro and off > 0.0:
        raise NumericalError(
            f"Jacobi iteration did not converge in {MAX_SWEEPS} sweeps",
            off_diagonal=float(off),
            frobenius=float(fro),
            sweeps=int(sweeps),
        )
    order = np.argsort(w, kind="stable")
    w = w[order]
    v = _fix_signs(v[:, order])
    residual = float(np.max(np.linalg.norm(a @ v - v * w, axis=0))) if n else 0.0
    return EigenSystem(eigenvalues=w, eigenvectors=v, residual=residual, sweeps=int(sweeps))


def op_norm(T) -> float:
    """Operator norm max |lambda| of a symmetric matrix."""
    return eig_sym(T).norm


def _orthonormal(cols: np.ndarray) -> np.ndarray:
    if cols.shape[1] == 0:
        return cols
    q, r = np.linalg.qr(cols)
    return q * np.sign(np.where(np.diag(r) == 0, 1.0, np.diag(r)))


def spectral_projections(es: EigenSystem, cluster_tol: float = CLUSTER_TOL) -> SpectralProjections:
    """Orthonormal bases of the lambda_max and lambda_min eigenspaces.

    Eigenvalues within ``cluster_tol * ||T||`` of an extreme are grouped with
    it. Raises DegenerateSpectrumError when the two clusters overlap.
    """
    lam = es.eigenvalues
    norm = es.norm
    width = cluster_tol * norm
    plus = lam >= lam[-1] - width
    minus = lam <= lam[0] + width
    if norm == 0.0 or np.any(plus & minus):
        raise DegenerateSpectrumError(
            f"lambda_max = {lam[-1]:.6g} and lambda_min = {lam[0]:.6g} are not separated at cluster_tol = {cluster_tol:g}"
        )
    vecs = es.eigenvectors
    return SpectralProjections(
        plus_basis=_orthonormal(vecs[:, plus]),
        minus_basis=_orthonormal(vecs[:, minus]),
        cluster_tol=cluster_tol,
        lam_max=float(lam[-1]),
        lam_min=float(lam[0]),
        norm=norm,
    )


def balanced_spectrum_check(T, tol: float = CLUSTER_TOL) -> tuple[bool, float]:
    """Whether lambda_max + lambda_min vanishes relative to ||T||; also returns the residual."""
    es = T if isinstance(T, EigenSystem) else eig_sym(T)
    resid = abs(es.lam_max + es.lam_min)
    return bool(resid <= tol * es.norm), float(resid)


def verify_vpm(T, i0: int) -> tuple[float, float]:
    """Residuals ||T v_pm -+ ||c_i0|| v_pm|| of the explicit eigenvector pair.

    v_pm = (||c|| e_i0 +- c) / (sqrt(2) ||c||) with c the i0-th column.
    """
    a = as_array(T)
    n = a.shape[0]
    if not 0 <= i0 < n:
        raise IndexError(f"index {i0} out of range for size {n}")
    if a[i0, i0] != 0.0:
        raise ParameterError(f"T[{i0}][{i0}] must be zero, got {a[i0, i0]}")
    c = a[:, i0]
    cn = float(np.linalg.norm(c))
    if cn == 0.0:
        raise DegenerateSpectrumError(f"column {i0} is zero")
    e = np.zeros(n)
    e[i0] = cn
    vp = (e + c) / (np.sqrt(2.0) * cn)
    vm = (e - c) / (np.sqrt(2.0) * cn)
    rp = float(np.linalg.norm(a @ vp - cn * vp))
    rm = float(np.linalg.norm(a @ vm + cn * vm))
    return rp, rm
