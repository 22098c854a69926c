"""End-to-end reports used by the command line front end.

``certify`` evaluates the three equivalent descriptions of a minimal pair
``(C, D1)`` separately:

1. ``||C + D1||`` equals the quotient norm (checked against the solver's
   rigorous lower bound),
2. a zero-diagonal trace-class certificate X attains the norm and is
   supported on the extreme eigenspaces,
3. the spectrum is balanced and the hulls of squared eigenvector
   coordinates of E+ and E- intersect.

The verdict comes from (2) and (3), which are checked directly; (1) is a
cross-check.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from mindiag.certificates import (
    CertificateVerdict,
    CertificateX,
    HullWitness,
    build_certificate,
    duality_gap,
    hull_intersection,
    verify_certificate,
)
from mindiag.construction import verify_caso3
from mindiag.errors import CertificateUnavailableError, ParameterError
from mindiag.operators import as_array, with_diag
from mindiag.solver import ApproxResult, SolverOptions, min_diag_norm
from mindiag.spectral import CLUSTER_TOL, balanced_spectrum_check, eig_sym, spectral_projections


def jsonable(obj: Any) -> Any:
    """Recursively convert numpy values to plain Python; non-finite floats become None."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dumps(report: dict) -> str:
    return json.dumps(jsonable(report), sort_keys=True, indent=2) + "\n"


# -- approx ---------------------------------------------------------------------


def approx_report(C, opts: SolverOptions | None = None) -> tuple[ApproxResult, dict]:
    opts = opts or SolverOptions()
    res = min_diag_norm(C, opts)
    report = res.to_dict()
    cert = None
    if res.certificate is not None:
        cert = res.certificate.to_dict()
        cert["duality_gap"] = duality_gap(C, res, res.certificate)
    report["certificate"] = cert
    report["n"] = int(np.asarray(as_array(C)).shape[0])
    return res, report


# -- certify --------------------------------------------------------------------


@dataclass
class CertifyReport:
    n: int
    norm: float
    lam_max: float
    lam_min: float
    balanced: bool
    balance_residual: float
    cluster_tol: float
    plus_dim: int
    minus_dim: int
    hull: HullWitness
    certificate: CertificateX | None
    certificate_check: CertificateVerdict | None
    quotient_lower: float
    quotient_upper: float
    statement1: bool
    caso3: dict | None
    tol: float
    notes: list[str] = field(default_factory=list)

    @property
    def statement2(self) -> bool:
        return self.certificate_check is not None and self.certificate_check.ok

    @property
    def statement3(self) -> bool:
        return self.balanced and self.hull.feasible

    @property
    def minimal(self) -> bool:
        return self.statement2 and self.statement3

    @property
    def verdict(self) -> str:
        return "minimal" if self.minimal else "not_minimal"

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "n": self.n,
            "tol": self.tol,
            "spectrum": {
                "norm": self.norm,
                "lambda_max": self.lam_max,
                "lambda_min": self.lam_min,
                "cluster_tol": self.cluster_tol,
                "plus_dim": self.plus_dim,
                "minus_dim": self.minus_dim,
            },
            "statements": {
                "norm_attains_quotient": {
                    "holds": self.statement1,
                    "norm": self.norm,
                    "quotient_lower": self.quotient_lower,
                    "quotient_upper": self.quotient_upper,
                    "excess": self.norm - self.quotient_lower,
                },
                "certificate": {
                    "holds": self.statement2,
                    "check": self.certificate_check.to_dict() if self.certificate_check else None,
                    "X": self.certificate.to_dict() if self.certificate else None,
                },
                "balanced_and_hull": {
                    "holds": self.statement3,
                    "balanced": self.balanced,
                    "balance_residual": self.balance_residual,
                    "hull": self.hull.to_dict(),
                },
            },
            "statements_agree": self.statement1 == self.statement2 == self.statement3,
            "column_construction": self.caso3,
            "notes": list(self.notes),
        }


def _caso3_summary(A: np.ndarray) -> dict | None:
    """First zero-diagonal index where the orthogonal-column construction applies."""
    n = A.shape[0]
    if n < 2:
        return None
    scale = float(np.max(np.abs(A)))
    first = None
    for i0 in range(n):
        if abs(A[i0, i0]) > 1e-13 * scale:
            continue
        rep = verify_caso3(A, i0)
        if rep.all_hold:
            return rep.to_dict()
        if first is None:
            first = rep
        if n > 12:
            break
    return first.to_dict() if first is not None else None


def certify(
    C,
    D1=None,
    tol: float = 1e-6,
    cluster_tol: float = CLUSTER_TOL,
    hull_tol: float | None = None,
    solver_opts: SolverOptions | None = None,
) -> CertifyReport:
    """Decide whether ``C + Diag(D1)`` is minimal in its class modulo diagonals.

    Raises DegenerateSpectrumError when the extreme eigenvalue clusters
    cannot be separated (for instance when C + D1 is a multiple of the
    identity or zero).
    """
    C = np.asarray(as_array(C), dtype=float)
    n = C.shape[0]
    d1 = np.zeros(n) if D1 is None else np.asarray(as_array(D1), dtype=float)
    if d1.shape != (n,):
        raise ParameterError(f"diagonal has length {d1.size}, matrix has size {n}")
    A = with_diag(C, d1)
    es = eig_sym(A)
    proj = spectral_projections(es, cluster_tol)
    balanced, resid = balanced_spectrum_check(es, cluster_tol)
    witness = hull_intersection(proj, tol=hull_tol)
    notes = []

    cert = check = None
    if witness.feasible:
        try:
            cert = build_certificate(proj, witness, C=C, D1=d1)
            check = verify_certificate(C, d1, cert, tol=tol, cluster_tol=cluster_tol)
        except CertificateUnavailableError as exc:
            notes.append(str(exc))
    else:
        notes.append(f"hull residual {witness.residual:.3g} exceeds tol {witness.tol:.3g}; no certificate")
    if not balanced:
        notes.append(f"|lambda_max + lambda_min| = {resid:.3g} is not small relative to ||C + D1||")

    opts = solver_opts or SolverOptions()
    res = min_diag_norm(A, opts)
    statement1 = bool(es.norm - res.lower <= tol * max(es.norm, 1e-300))

    return CertifyReport(
        n=n,
        norm=es.norm,
        lam_max=es.lam_max,
        lam_min=es.lam_min,
        balanced=balanced,
        balance_residual=resid,
        cluster_tol=cluster_tol,
        plus_dim=proj.r,
        minus_dim=proj.s,
        hull=witness,
        certificate=cert,
        certificate_check=check,
        quotient_lower=res.lower,
        quotient_upper=res.upper,
        statement1=statement1,
        caso3=_caso3_summary(A),
        tol=tol,
        notes=notes,
    )
