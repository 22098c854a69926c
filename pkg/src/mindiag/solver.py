"""Best diagonal approximation in the operator norm.

``min_diag_norm`` computes ``dist(C, diagonals) = min_d ||C + Diag(d)||`` for a
real symmetric C, i.e. the quotient norm of the class of C modulo diagonal
matrices. The objective ``f(d) = max(lambda_max, -lambda_min)`` is convex
and nonsmooth; it is replaced by

    g_mu(d) = mu * log sum_k 2 cosh(lambda_k(C + Diag d) / mu),

with ``f <= g_mu <= f + mu log(2n)``, and minimized for a decreasing sequence
of ``mu``. A subgradient polish with Polyak steps follows, and the result is
bracketed from below by a zero-diagonal dual certificate.

``oracle_grid`` is an independent brute-force check for n <= 4.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from mindiag.certificates import CertificateX, certified_lower_bound
from mindiag.errors import ParameterError, SizeError
from mindiag.operators import DiagVector, GammaFamilySpec, as_array, build, build_Tr, compute_r, with_diag
from mindiag.spectral import CLUSTER_TOL, eig_sym

NEWTON_MAX_N = 160


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-6
    max_iters: int = 2000
    multistart: int = 1
    mu_start: float = 1e-1
    mu_end: float = 1e-12
    mu_factor: float = 10.0
    polish_iters: int = 200
    seed: int = 0
    cluster_tol: float = CLUSTER_TOL
    method: str = "auto"  # "newton", "gradient" or "auto"

    def __post_init__(self):
        if not self.tol > 0:
            raise ParameterError(f"tol must be positive, got {self.tol}")
        if self.max_iters < 1:
            raise ParameterError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.multistart < 1:
            raise ParameterError("multistart must be >= 1")
        if not (0 < self.mu_end <= self.mu_start) or self.mu_factor <= 1:
            raise ParameterError("smoothing schedule needs 0 < mu_end <= mu_start and mu_factor > 1")
        if self.method not in ("auto", "newton", "gradient"):
            raise ParameterError(f"unknown method {self.method!r}")


@dataclass
class ApproxResult:
    d_star: DiagVector
    upper: float
    lower: float
    gap: float
    iterations: int
    status: str  # converged | iter_cap | degenerate
    lambda_sum_residual: float = 0.0
    certificate: CertificateX | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "upper": self.upper,
            "lower": self.lower if math.isfinite(self.lower) else None,
            "gap": self.gap if math.isfinite(self.gap) else None,
            "status": self.status,
            "iterations": self.iterations,
            "lambda_sum_residual": self.lambda_sum_residual,
            "d_star": [float(x) for x in self.d_star.d],
        }


def objective(C, d) -> float:
    """f(d) = ||C + Diag(d)||."""
    return eig_sym(with_diag(C, d)).norm


def subgradient(C, d) -> np.ndarray:
    """A subgradient of f at d: v+ o v+ if lambda_max is the active extreme, else -(v- o v-)."""
    es = eig_sym(with_diag(C, d))
    if es.lam_max >= -es.lam_min:
        return es.eigenvectors[:, -1] ** 2
    return -(es.eigenvectors[:, 0] ** 2)


# -- smoothed objective --------------------------------------------------------


class _Smoothed:
    """Evaluates g_mu, its gradient and Hessian for one matrix C_off."""

    def __init__(self, c_off: np.ndarray):
        self.c = c_off
        self.n = c_off.shape[0]
        self.V = None

    def eig(self, u):
        a = self.c.copy()
        a[np.diag_indices(self.n)] += u
        es = eig_sym(a, warm_start=self.V)
        self.V = es.eigenvectors
        return es

    @staticmethod
    def _weights(lam, mu):
        s = float(np.max(np.abs(lam)))
        ep = np.exp((lam - s) / mu)
        em = np.exp((-lam - s) / mu)
        Z = float(np.sum(ep + em))
        return s, ep, em, Z

    def value(self, u, mu):
        es = self.eig(u)
        s, ep, em, Z = self._weights(es.eigenvalues, mu)
        return s + mu * math.log(Z), es

    def value_grad(self, u, mu):
        es = self.eig(u)
        lam, V = es.eigenvalues, es.eigenvectors
        s, ep, em, Z = self._weights(lam, mu)
        w = (ep - em) / Z
        grad = (V * V) @ w
        return s + mu * math.log(Z), grad, es, (s, ep, em, Z)

    @staticmethod
    def _divdiff_exp(x, s, mu):
        # divided differences of t -> exp((t - s)/mu) on the grid x
        e = np.exp((x - s) / mu)
        dx = x[:, None] - x[None, :]
        h = dx / (2.0 * mu)
        mid = 0.5 * (x[:, None] + x[None, :])
        small = np.abs(h) <= 1.0
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            far = (e[:, None] - e[None, :]) / np.where(small, 1.0, dx)
            hs = np.where(small, h, 1.0)
            near = np.exp((mid - s) / mu) * np.where(hs == 0.0, 1.0, np.sinh(hs) / hs) / mu
        return np.where(small, near, far)

    def hessian(self, es, mu, aux, grad):
        lam, V = es.eigenvalues, es.eigenvectors
        s, _, _, Z = aux
        gamma = (self._divdiff_exp(lam, s, mu) + self._divdiff_exp(-lam, s, mu)) / Z
        n = self.n
        P = (V[:, None, :] * V[None, :, :]).reshape(n * n, n)
        H = np.sum((P @ gamma) * P, axis=1).reshape(n, n)
        H -= np.outer(grad, grad) / mu
        return 0.5 * (H + H.T)


def _newton_stage(sm: _Smoothed, u, mu, budget, final):
    iters = 0
    g, grad, es, aux = sm.value_grad(u, mu)
    while iters < budget:
        H = sm.hessian(es, mu, aux, grad)
        reg = 1e-14 * max(float(np.trace(H)), 1e-300) + 1e-300
        try:
            p = -np.linalg.solve(H + reg * np.eye(sm.n), grad)
        except np.linalg.LinAlgError:
            p = -grad
        dec = -float(grad @ p)
        if not np.isfinite(dec) or dec <= 0:
            p = -grad
            dec = float(grad @ grad)
        iters += 1
        if dec <= (1e-14 * max(g, 1e-300) if final else 1e-3 * mu):
            break
        step = 1.0
        accepted = False
        while step > 1e-12:
            g_new, es_new = sm.value(u + step * p, mu)
            if g_new <= g - 1e-4 * step * dec:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        u = u + step * p
        g, grad, es, aux = sm.value_grad(u, mu)
    return u, iters


def _gradient_stage(sm: _Smoothed, u, mu, budget, final):
    iters = 0
    g, grad, _, _ = sm.value_grad(u, mu)
    step = mu
    prev_u = prev_grad = None
    while iters < budget:
        gn2 = float(grad @ grad)
        if gn2 <= (1e-24 if final else 1e-6 * mu * mu):
            break
        if prev_u is not None:
            du, dg = u - prev_u, grad - prev_grad
            denom = float(du @ dg)
            if denom > 0:
                step = float(du @ du) / denom
        iters += 1
        while True:
            g_new, _ = sm.value(u - step * grad, mu)
            if g_new <= g - 1e-4 * step * gn2 or step < 1e-16:
                break
            step *= 0.5
        prev_u, prev_grad = u, grad
        u = u - step * grad
        g, grad, _, _ = sm.value_grad(u, mu)
    return u, iters


def _polish(c_off, u, lower, iters):
    """Polyak subgradient steps toward the certified lower bound; keeps the best iterate."""
    best_u = u
    best_f = objective(c_off, u)
    used = 0
    if not np.isfinite(lower):
        return best_u, best_f, used
    for _ in range(iters):
        es = eig_sym(with_diag(c_off, u))
        f = es.norm
        if f < best_f:
            best_u, best_f = u, f
        if f - lower <= 1e-15 * max(f, 1.0):
            break
        if es.lam_max >= -es.lam_min:
            sg = es.eigenvectors[:, -1] ** 2
        else:
            sg = -(es.eigenvectors[:, 0] ** 2)
        u = u - (f - lower) / float(sg @ sg) * sg
        used += 1
    f = objective(c_off, u)
    if f < best_f:
        best_u, best_f = u, f
    return best_u, best_f, used


def _rank_one_part(lam, V, sign):
    vals = sign * lam
    order = np.argsort(vals)[::-1]
    top = vals[order[0]]
    if top <= 0 or (vals.size > 1 and vals[order[1]] > 1e-6 * top):
        return None
    return V[:, order[0]]


def _slackness_recover(c_off, u, upper, cert):
    """Re-derive the minimizer from a rank-one certificate.

    If X = (x+ x+^T - x- x-^T)/2 with x- = Sigma x+ for a sign matrix Sigma,
    every optimal A = C + Diag(d) obeys A x+ = rho x+ and A x- = -rho x-, which
    makes x+ an eigenvector of C - Sigma C Sigma for 2 rho and gives
    d_k = rho - (C x+)_k / x+_k. Unlike the objective value, these equations
    keep relative accuracy in tiny (graded) coordinates, where f is too flat
    to pin the minimizer down in floating point. Returns None when the
    certificate does not have this shape.
    """
    es = eig_sym(cert.X)
    xp = _rank_one_part(es.eigenvalues, es.eigenvectors, 1.0)
    xm = _rank_one_part(es.eigenvalues, es.eigenvectors, -1.0)
    if xp is None or xm is None:
        return None
    sigma = np.where(xp * xm < 0, -1.0, 1.0)
    M = c_off - sigma[:, None] * c_off * sigma[None, :]
    esM = eig_sym(M)
    k = int(np.argmin(np.abs(esM.eigenvalues - 2.0 * upper)))
    lam = float(esM.eigenvalues[k])
    if abs(lam - 2.0 * upper) > 1e-6 * upper:
        return None
    x = esM.eigenvectors[:, k]
    if x @ xp < 0:
        x = -x
    for _ in range(3):
        x = M @ x / lam
    rho = 0.5 * lam
    cx = c_off @ x
    ax = np.abs(x)
    for tau in (0.0, 1e-12, 1e-8):
        mask = ax > tau * ax.max()
        d = u.copy()
        d[mask] = rho - cx[mask] / x[mask]
        if np.all(np.isfinite(d)):
            f = objective(c_off, d)
            if f <= upper * (1.0 + 1e-12):
                return d
    return None


def _solve_from(c_off, u0, opts: SolverOptions, scale, budget):
    sm = _Smoothed(c_off)
    n = c_off.shape[0]
    method = opts.method
    if method == "auto":
        method = "newton" if n <= NEWTON_MAX_N else "gradient"
    stage = _newton_stage if method == "newton" else _gradient_stage
    mus = []
    mu = opts.mu_start
    while mu > opts.mu_end * (1 + 1e-9):
        mus.append(mu)
        mu /= opts.mu_factor
    mus.append(opts.mu_end)
    u = u0.copy()
    used = 0
    for k, mu in enumerate(mus):
        left = budget - used
        if left <= 0:
            break
        final = k == len(mus) - 1
        per_stage = left if final else max(1, left // (len(mus) - k))
        u, it = stage(sm, u, mu * scale, per_stage, final)
        used += it
    return u, used


def min_diag_norm(C, opts: SolverOptions | None = None) -> ApproxResult:
    """Minimize ||C + Diag(d)|| over real d; returns bracket [lower, upper] and d_star."""
    opts = opts or SolverOptions()
    C = np.asarray(as_array(C), dtype=float)
    n = C.shape[0]
    base = np.diag(C).copy()
    c_off = C.copy()
    np.fill_diagonal(c_off, 0.0)
    scale = float(np.max(np.abs(c_off))) if n > 1 else 0.0
    if scale == 0.0:
        return ApproxResult(
            d_star=DiagVector(-base), upper=0.0, lower=0.0, gap=0.0, iterations=0, status="converged"
        )
    scale = eig_sym(c_off).norm

    rng = np.random.default_rng(opts.seed)
    starts = [np.zeros(n)]
    for _ in range(opts.multistart - 1):
        starts.append(0.1 * scale * rng.standard_normal(n))

    best = None
    total = 0
    budget = opts.max_iters
    for u0 in starts:
        u, used = _solve_from(c_off, u0, opts, scale, budget)
        total += used
        upper = objective(c_off, u)
        if best is None or upper < best[1]:
            best = (u, upper)
    u, upper = best

    lower, cert, _ = certified_lower_bound(c_off, u, cluster_tols=(opts.cluster_tol, 1e-6, 1e-4, 1e-3))
    if upper - lower > opts.tol * upper and opts.polish_iters > 0:
        u2, f2, used = _polish(c_off, u, lower, opts.polish_iters)
        total += used
        if f2 < upper:
            u, upper = u2, f2
            lower2, cert2, _ = certified_lower_bound(c_off, u, cluster_tols=(opts.cluster_tol, 1e-6, 1e-4, 1e-3))
            if lower2 > lower:
                lower, cert = lower2, cert2

    if cert is not None:
        u2 = _slackness_recover(c_off, u, upper, cert)
        if u2 is not None:
            u, upper = u2, objective(c_off, u2)

    es = eig_sym(with_diag(c_off, u))
    gap = upper - lower
    if not np.isfinite(lower):
        status = "degenerate"
    elif gap <= opts.tol * upper:
        status = "converged"
    else:
        status = "iter_cap"
    if cert is not None:
        # value reported against C + Diag(d_star); diag(X) = 0 so it equals tr(XC)
        cert = CertificateX(X=cert.X, trace_norm=cert.trace_norm, value=float(np.sum(cert.X * with_diag(C, u - base))), diag_residual=cert.diag_residual)
    return ApproxResult(
        d_star=DiagVector(u - base),
        upper=float(upper),
        lower=float(lower),
        gap=float(gap),
        iterations=int(total),
        status=status,
        lambda_sum_residual=float(abs(es.lam_max + es.lam_min)),
        certificate=cert,
    )


# -- brute-force oracle ----------------------------------------------------------

ORACLE_MAX_N = 4
_ORACLE_CHUNK = 1 << 16


def _batched_norm(C: np.ndarray, D: np.ndarray) -> np.ndarray:
    out = np.empty(D.shape[0])
    n = C.shape[0]
    idx = np.arange(n)
    for lo in range(0, D.shape[0], _ORACLE_CHUNK):
        block = D[lo : lo + _ORACLE_CHUNK]
        mats = np.broadcast_to(C, (block.shape[0], n, n)).copy()
        mats[:, idx, idx] += block
        lam = np.linalg.eigvalsh(mats)
        out[lo : lo + block.shape[0]] = np.maximum(lam[:, -1], -lam[:, 0])
    return out


def _oracle_value_subgrad(C: np.ndarray, d: np.ndarray) -> tuple[float, np.ndarray]:
    w, V = np.linalg.eigh(C + np.diag(d))
    if w[-1] >= -w[0]:
        return float(w[-1]), V[:, -1] ** 2
    return float(-w[0]), -(V[:, 0] ** 2)


def _cutting_plane(C: np.ndarray, d0: np.ndarray, tol: float, max_cuts: int) -> float:
    """Trust-region Kelley refinement of a starting point.

    Any minimizer satisfies ``|C_ii + d_i| <= ||C||``, so the model is
    built on that box; the trust region keeps the LP steps local.
    """
    from scipy.optimize import linprog

    n = C.shape[0]
    nrm = float(np.max(np.abs(np.linalg.eigvalsh(C))))
    lo = -np.diag(C) - nrm
    hi = -np.diag(C) + nrm
    xc = np.clip(d0, lo, hi)
    fc, g = _oracle_value_subgrad(C, xc)
    rows = [np.r_[g, -1.0]]
    rhs = [g @ xc - fc]
    cost = np.r_[np.zeros(n), 1.0]
    delta = nrm
    for _ in range(max_cuts):
        l = np.maximum(lo, xc - delta)
        h = np.minimum(hi, xc + delta)
        res = linprog(
            cost,
            A_ub=np.array(rows),
            b_ub=np.array(rhs),
            bounds=[*zip(l, h), (None, None)],
            method="highs",
        )
        if res.status != 0:
            break
        d, model = res.x[:n], float(res.fun)
        predicted = fc - model
        if predicted <= tol * (1.0 + fc):
            if np.array_equal(l, lo) and np.array_equal(h, hi):
                break
            delta *= 4.0
            continue
        f, g = _oracle_value_subgrad(C, d)
        rows.append(np.r_[g, -1.0])
        rhs.append(g @ d - f)
        if fc - f >= 0.1 * predicted:
            xc, fc = d, f
            delta *= 2.0
        else:
            delta *= 0.5
    return fc


def oracle_grid(
    C,
    radius: float | None = None,
    levels: int = 4,
    points: int = 21,
    shrink: float = 5.0,
    refine: bool = True,
    refine_tol: float = 1e-7,
    max_cuts: int = 500,
) -> float:
    """Brute-force min_d ||C + Diag(d)|| for n <= 4.

    A nested grid covers ``[-radius, radius]^n`` (default radius 2||C||);
    each of the ``levels`` rounds re-centres on the incumbent and shrinks
    the box by ``shrink``. The grid alone can stall in narrow valleys of
    the objective, so by default the incumbent is then refined with a
    cutting-plane method. Everything uses LAPACK eigenvalues and an LP
    solver, never the solver's own code path.
    """
    C = np.asarray(as_array(C), dtype=float)
    n = C.shape[0]
    if n > ORACLE_MAX_N:
        raise SizeError(f"oracle_grid supports n <= {ORACLE_MAX_N}, got {n}")
    if radius is None:
        radius = 2.0 * float(np.max(np.abs(np.linalg.eigvalsh(C))))
    if radius == 0.0:
        return 0.0
    axis = np.linspace(-1.0, 1.0, points)
    offsets = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
    center = np.zeros(n)
    best = float(np.max(np.abs(np.linalg.eigvalsh(C))))
    r = radius
    for _ in range(levels + 1):
        cand = center + r * offsets
        vals = _batched_norm(C, cand)
        k = int(np.argmin(vals))
        if vals[k] <= best:
            best = float(vals[k])
            center = cand[k]
        r /= shrink
    if refine:
        best = min(best, _cutting_plane(C, center, refine_tol, max_cuts))
    return best + 0.0


# -- sweeps ---------------------------------------------------------------------


def _sweep_row(C, n, opts, track):
    res = min_diag_norm(C, opts)
    row = {
        "n": n,
        "upper": res.upper,
        "lower": res.lower,
        "gap": res.gap,
        "lambda_sum_residual": res.lambda_sum_residual,
        "status": res.status,
    }
    for k in track:
        row[f"d_{k}"] = float(res.d_star.d[k - 1]) if k <= n else float("nan")
    return row


def _sweep_task(args):
    spec, r, n, opts, track = args
    s = spec.with_(n=n)
    C = build_Tr(s, r) if spec.variant == "Tr" else build(s)
    return _sweep_row(np.asarray(C), n, opts, track)


def sweep_quotient_norm(
    family: GammaFamilySpec,
    n_list,
    opts: SolverOptions | None = None,
    track=(),
    jobs: int = 1,
    r: float | None = None,
) -> list[dict]:
    """Quotient-norm table over truncation sizes.

    For the ``Tr`` variant one value of r (computed at the largest n unless
    given) is shared by every row, so each matrix is a principal corner of
    the same operator and ``upper`` is nondecreasing in n.
    """
    opts = opts or SolverOptions()
    n_list = sorted(int(n) for n in n_list)
    if not n_list or n_list[0] < 1:
        raise ParameterError("n_list must contain positive sizes")
    if family.variant == "Tr" and r is None:
        r = compute_r(family.with_(n=max(n_list[-1], 2)))
    tasks = [(family, r, n, opts, tuple(track)) for n in n_list]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=min(jobs, os.cpu_count() or 1)) as pool:
            rows = list(pool.map(_sweep_task, tasks))
    else:
        rows = [_sweep_task(t) for t in tasks]
    return rows
