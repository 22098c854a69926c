"""Dual certificates of minimality.

C + Diag(d1) is minimal exactly when some zero-diagonal, trace-norm-one
symmetric X attains ``tr(X (C + Diag d1)) = ||C + Diag d1||``. Such an X lives
on the extreme eigenspaces E+ and E-, and its existence is equivalent to the
diagonals of trace-one positive operators on E+ and on E- having a common
point. ``hull_intersection`` searches for that common point, and
``build_certificate`` turns it into X.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mindiag.errors import CertificateUnavailableError, DegenerateSpectrumError, ParameterError
from mindiag.operators import as_array, with_diag
from mindiag.spectral import CLUSTER_TOL, EigenSystem, SpectralProjections, eig_sym, spectral_projections

HULL_TOL = 1e-8
HULL_MAX_ITERS = 10_000


@dataclass(frozen=True)
class HullWitness:
    """Matching convex combinations of squared eigenvector coordinates.

    ``alpha`` weights the orthonormal vectors ``plus_vectors`` (columns, in
    E+) and ``beta`` the columns of ``minus_vectors`` (in E-). ``S`` and
    ``T`` are the same weights written as trace-one PSD matrices in the
    coordinates of the projection bases.
    """

    alpha: np.ndarray
    beta: np.ndarray
    plus_vectors: np.ndarray
    minus_vectors: np.ndarray
    S: np.ndarray
    T: np.ndarray
    residual: float
    tol: float
    iterations: int

    @property
    def feasible(self) -> bool:
        return self.residual <= self.tol

    def plus_point(self) -> np.ndarray:
        return (self.plus_vectors**2) @ self.alpha

    def minus_point(self) -> np.ndarray:
        return (self.minus_vectors**2) @ self.beta

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "residual": self.residual,
            "tol": self.tol,
            "iterations": self.iterations,
            "alpha": self.alpha.tolist(),
            "beta": self.beta.tolist(),
            "plus_vectors": self.plus_vectors.T.tolist(),
            "minus_vectors": self.minus_vectors.T.tolist(),
        }


@dataclass(frozen=True)
class CertificateX:
    X: np.ndarray
    trace_norm: float
    value: float
    diag_residual: float

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def to_dict(self) -> dict:
        return {
            "trace_norm": self.trace_norm,
            "value": self.value,
            "diag_residual": self.diag_residual,
            "X": self.X.tolist(),
        }


@dataclass(frozen=True)
class CertificateVerdict:
    ok: bool
    diag_residual: float
    norm_residual: float
    plus_support_residual: float
    minus_support_residual: float
    value: float
    sign: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


# -- basic spectral pieces ----------------------------------------------------


def trace_norm(X) -> float:
    return float(np.sum(np.abs(eig_sym(X).eigenvalues)))


def positive_negative_parts(L) -> tuple[np.ndarray, np.ndarray]:
    """L+ = (|L| + L)/2 and L- = (|L| - L)/2 from the eigendecomposition."""
    es = eig_sym(L)
    lam, v = es.eigenvalues, es.eigenvectors
    plus = (v * np.maximum(lam, 0.0)) @ v.T
    minus = (v * np.maximum(-lam, 0.0)) @ v.T
    return 0.5 * (plus + plus.T), 0.5 * (minus + minus.T)


def compute_mM(D, proj: SpectralProjections) -> tuple[float, float]:
    """Smallest Rayleigh quotient of Diag(D) on E+ and largest on E-."""
    d = as_array(D)
    if proj.r == 0 or proj.s == 0:
        raise DegenerateSpectrumError("empty spectral projection basis")
    bp, bm = proj.plus_basis, proj.minus_basis
    m = eig_sym((bp * d[:, None]).T @ bp).lam_min
    M = eig_sym((bm * d[:, None]).T @ bm).lam_max
    return m, M


def condition3_check(C, D1, D_probe, cluster_tol: float = CLUSTER_TOL, tol: float = 1e-8) -> bool:
    """Balanced spectrum plus ``m(D_probe) <= M(D_probe)`` for a single probe."""
    A = with_diag(C, D1)
    es = eig_sym(A)
    proj = spectral_projections(es, cluster_tol)
    if abs(es.lam_max + es.lam_min) > tol * es.norm:
        return False
    m, M = compute_mM(D_probe, proj)
    scale = max(1.0, float(np.max(np.abs(as_array(D_probe)))))
    return bool(m <= M + tol * scale)


# -- hull intersection ----------------------------------------------------------


def _project_simplex(x: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum x = 1}."""
    u = np.sort(x)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, x.size + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    return np.maximum(x - css[rho] / (rho + 1.0), 0.0)


def _project_spectraplex(S: np.ndarray) -> np.ndarray:
    if S.shape[0] == 1:
        return np.ones((1, 1))
    lam, U = np.linalg.eigh(0.5 * (S + S.T))
    lam = _project_simplex(lam)
    return (U * lam) @ U.T


def _diag_map(B: np.ndarray, S: np.ndarray) -> np.ndarray:
    return np.einsum("ij,jk,ik->i", B, S, B)


def _weights(B: np.ndarray, S: np.ndarray):
    if S.shape[0] == 1:
        return np.ones(1), B.copy()
    lam, U = np.linalg.eigh(0.5 * (S + S.T))
    order = np.argsort(lam)[::-1]
    lam = np.clip(lam[order], 0.0, None)
    lam = lam / lam.sum()
    return lam, B @ U[:, order]


def hull_intersection(proj: SpectralProjections, tol: float | None = None, max_iters: int = HULL_MAX_ITERS) -> HullWitness:
    """Closest pair between the diagonal images of the trace-one states on E+ and E-.

    Minimizes ``||diag(B+ S B+^T) - diag(B- T B-^T)||`` over trace-one PSD
    ``S``, ``T`` by accelerated projected gradient with adaptive restart. With
    one-dimensional eigenspaces this reduces to comparing ``v+ o v+`` with
    ``v- o v-``. The returned witness is feasible iff the residual is at most
    ``tol`` (default ``1e-8 * (1 + max ||v o v||)``).
    """
    bp, bm = proj.plus_basis, proj.minus_basis
    r, s = bp.shape[1], bm.shape[1]
    if r == 0 or s == 0:
        raise DegenerateSpectrumError("hull intersection needs non-empty E+ and E-")
    if tol is None:
        scale = max(np.max(np.linalg.norm(bp**2, axis=0)), np.max(np.linalg.norm(bm**2, axis=0)))
        tol = HULL_TOL * (1.0 + scale)

    S = np.eye(r) / r
    T = np.eye(s) / s

    def resid(S, T):
        return _diag_map(bp, S) - _diag_map(bm, T)

    rho = resid(S, T)
    best = (float(np.linalg.norm(rho)), S, T)
    it = 0
    if r > 1 or s > 1:
        step = 0.5  # 1/L, the stacked diagonal map has norm <= sqrt(2)
        yS, yT = S, T
        t = 1.0
        obj = 0.5 * float(rho @ rho)
        target = 1e-3 * tol
        for it in range(1, max_iters + 1):
            ry = resid(yS, yT)
            gS = (bp * ry[:, None]).T @ bp
            gT = -(bm * ry[:, None]).T @ bm
            S_new = _project_spectraplex(yS - step * gS)
            T_new = _project_spectraplex(yT - step * gT)
            rho = resid(S_new, T_new)
            obj_new = 0.5 * float(rho @ rho)
            nrm = float(np.sqrt(2.0 * obj_new))
            if nrm < best[0]:
                best = (nrm, S_new, T_new)
            if nrm <= target:
                break
            if obj_new > obj:
                # restart momentum
                t = 1.0
                yS, yT = S, T
                continue
            t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            beta = (t - 1.0) / t_new
            yS = S_new + beta * (S_new - S)
            yT = T_new + beta * (T_new - T)
            S, T, t, obj = S_new, T_new, t_new, obj_new

    residual, S, T = best
    alpha, pv = _weights(bp, S)
    beta_w, mv = _weights(bm, T)
    return HullWitness(
        alpha=alpha,
        beta=beta_w,
        plus_vectors=pv,
        minus_vectors=mv,
        S=S,
        T=T,
        residual=float(residual),
        tol=float(tol),
        iterations=it,
    )


# -- certificates ---------------------------------------------------------------


def _assemble(proj: SpectralProjections, witness: HullWitness) -> np.ndarray:
    bp, bm = proj.plus_basis, proj.minus_basis
    X = 0.5 * (bp @ witness.S @ bp.T - bm @ witness.T @ bm.T)
    return 0.5 * (X + X.T)


def build_certificate(proj: SpectralProjections, witness: HullWitness, C=None, D1=None) -> CertificateX:
    """X = (sum alpha_i v_i v_i^T - sum beta_j w_j w_j^T) / 2, trace-norm normalized.

    ``value`` is ``tr(X (C + Diag D1))`` when C is supplied, otherwise NaN.
    """
    if not witness.feasible:
        raise CertificateUnavailableError(
            f"hull witness is infeasible (residual {witness.residual:.3g} > tol {witness.tol:.3g})"
        )
    X = _assemble(proj, witness)
    tn = trace_norm(X)
    if tn == 0.0:
        raise CertificateUnavailableError("assembled certificate vanishes")
    X = X / tn
    value = float("nan")
    if C is not None:
        A = with_diag(C, D1) if D1 is not None else as_array(C)
        value = float(np.sum(X * A))
    return CertificateX(X=X, trace_norm=trace_norm(X), value=value, diag_residual=float(np.max(np.abs(np.diag(X)))))


def verify_certificate(C, D1, X, tol: float = 1e-6, cluster_tol: float = CLUSTER_TOL) -> CertificateVerdict:
    """Check the three certificate conditions for the pair (C, D1).

    Residuals are relative: diagonal entries and support defects against
    ``||X||_1``, the attained value against ``||C + D1|| ||X||_1``. A negative
    pairing is handled by flipping the sign of X.
    """
    Xa = np.asarray(X.X if isinstance(X, CertificateX) else as_array(X), dtype=float)
    A = with_diag(C, D1) if D1 is not None else np.asarray(as_array(C), dtype=float)
    if Xa.shape != A.shape:
        raise ParameterError(f"shape mismatch: X {Xa.shape} vs C {A.shape}")
    es = eig_sym(A)
    proj = spectral_projections(es, cluster_tol)
    x1 = trace_norm(Xa)
    if x1 == 0.0:
        return CertificateVerdict(False, np.inf, np.inf, np.inf, np.inf, 0.0, 1)
    value = float(np.sum(Xa * A))
    sign = 1 if value >= 0 else -1
    Xs = sign * Xa
    diag_res = float(np.max(np.abs(np.diag(Xs)))) / x1
    norm_res = abs(abs(value) - es.norm * x1) / max(es.norm * x1, 1e-300)
    Xp, Xm = positive_negative_parts(Xs)
    Ep, Em = proj.projector_plus(), proj.projector_minus()
    plus_res = float(np.linalg.norm(Ep @ Xp - Xp)) / x1
    minus_res = float(np.linalg.norm(Em @ Xm - Xm)) / x1
    ok = max(diag_res, norm_res, plus_res, minus_res) <= tol
    return CertificateVerdict(
        ok=bool(ok),
        diag_residual=diag_res,
        norm_residual=float(norm_res),
        plus_support_residual=plus_res,
        minus_support_residual=minus_res,
        value=value,
        sign=sign,
    )


def duality_gap(C, result, X: CertificateX, validity_tol: float = 1e-8) -> float:
    """upper - |tr(X C)| for a solver result and a valid certificate."""
    Xa = X.X if isinstance(X, CertificateX) else np.asarray(X, dtype=float)
    tn = trace_norm(Xa)
    diag = float(np.max(np.abs(np.diag(Xa))))
    if abs(tn - 1.0) > validity_tol or diag > validity_tol:
        raise CertificateUnavailableError(
            f"certificate rejected: trace norm {tn:.6g}, max |diag| {diag:.3g}"
        )
    return float(result.upper - abs(np.sum(Xa * as_array(C))))


def certified_lower_bound(C, d, es: EigenSystem | None = None, cluster_tols=(CLUSTER_TOL, 1e-6, 1e-4, 1e-3)):
    """Rigorous lower bound on min_D ||C + D|| built from the spectrum of C + Diag(d).

    For each cluster tolerance a hull witness is computed (feasible or not),
    assembled into X, and its diagonal removed exactly. Any zero-diagonal X~
    gives ``|tr(X~ C)| / ||X~||_1 <= dist(C, diagonals)``. Returns the best
    bound, the certificate behind it (or None) and the witness.
    """
    C = np.asarray(as_array(C), dtype=float)
    A = with_diag(C, d)
    if es is None:
        es = eig_sym(A)
    best = (-np.inf, None, None)
    for ct in cluster_tols:
        try:
            proj = spectral_projections(es, ct)
        except DegenerateSpectrumError:
            break
        w = hull_intersection(proj)
        X = _assemble(proj, w)
        X = X - np.diag(np.diag(X))
        tn = trace_norm(X)
        if tn == 0.0:
            continue
        X /= tn
        value = abs(float(np.sum(X * C)))
        if value > best[0]:
            sign = 1.0 if np.sum(X * C) >= 0 else -1.0
            cert = CertificateX(X=sign * X, trace_norm=trace_norm(X), value=float(np.sum(sign * X * A)), diag_residual=0.0)
            best = (value, cert, w)
        if w.feasible:
            break
    return best
