"""Jacobi eigenvalue kernels.

Two implementations of the same contract are kept side by side:

* ``jacobi_cyclic`` -- classical row-cyclic Jacobi written as scalar loops,
  compiled with numba.
* ``jacobi_parallel_numpy`` -- round-robin (tournament) ordering, where each
  round applies ``n // 2`` disjoint rotations at once with vectorized numpy.

Both take a symmetric matrix ``a`` and an accumulated rotation ``v`` (usually
the identity, or a previous eigenbasis for a warm start) and return
``(w, v, sweeps, off)`` with ``w`` the unsorted diagonal after convergence and
``off`` the final off-diagonal Frobenius mass.
"""

import numpy as np

from mindiag._accel import USE_NUMBA, maybe_njit


def _jacobi_cyclic_py(a, v, tol, max_sweeps):
    a = a.copy()
    v = v.copy()
    n = a.shape[0]
    fro = 0.0
    for i in range(n):
        for j in range(n):
            fro += a[i, j] * a[i, j]
    fro = np.sqrt(fro)
    target = tol * fro
    off = 0.0
    sweeps = 0
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += 2.0 * a[p, q] * a[p, q]
        off = np.sqrt(off)
        sweeps = sweep
        if off <= target or sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                g = 100.0 * abs(apq)
                # roundoff-level entry: drop it instead of rotating
                if sweep > 3 and abs(app) + g == abs(app) and abs(aqq) + g == abs(aqq):
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    continue
                theta = (aqq - app) / (2.0 * apq)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    w = np.empty(n)
    for i in range(n):
        w[i] = a[i, i]
    return w, v, sweeps, off


_jacobi_cyclic_nb = maybe_njit(_jacobi_cyclic_py)


def _round_robin(n):
    """Pairings for one sweep: ``m - 1`` rounds of disjoint (p, q) pairs."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for k in range(m // 2):
            p, q = players[k], players[m - 1 - k]
            if p < n and q < n:
                ps.append(min(p, q))
                qs.append(max(p, q))
        rounds.append((np.array(ps, dtype=np.intp), np.array(qs, dtype=np.intp)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def jacobi_parallel_numpy(a, v, tol, max_sweeps):
    a = np.array(a, dtype=float, copy=True)
    v = np.array(v, dtype=float, copy=True)
    n = a.shape[0]
    fro = np.linalg.norm(a)
    target = tol * fro
    rounds = _round_robin(n) if n > 1 else []
    iu = np.triu_indices(n, 1)
    sweeps = 0
    off = 0.0
    for sweep in range(max_sweeps + 1):
        off = np.sqrt(2.0 * np.sum(a[iu] ** 2))
        sweeps = sweep
        if off <= target or sweep == max_sweeps:
            break
        for p, q in rounds:
            apq = a[p, q]
            app = a[p, p]
            aqq = a[q, q]
            g = 100.0 * np.abs(apq)
            negligible = (apq == 0.0) | (
                (sweep > 3) & (np.abs(app) + g == np.abs(app)) & (np.abs(aqq) + g == np.abs(aqq))
            )
            safe = np.where(negligible, 1.0, apq)
            theta = (aqq - app) / (2.0 * safe)
            t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            t = np.where(theta == 0.0, 1.0, t)
            t = np.where(negligible, 0.0, t)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            ap = a[:, p]
            aq = a[:, q]
            a[:, p] = ap * c - aq * s
            a[:, q] = ap * s + aq * c
            ap = a[p, :]
            aq = a[q, :]
            a[p, :] = c[:, None] * ap - s[:, None] * aq
            a[q, :] = s[:, None] * ap + c[:, None] * aq
            a[p, q] = 0.0
            a[q, p] = 0.0
            a[p, p] = app - t * apq
            a[q, q] = aqq + t * apq
            vp = v[:, p]
            vq = v[:, q]
            v[:, p] = vp * c - vq * s
            v[:, q] = vp * s + vq * c
    return np.diag(a).copy(), v, sweeps, off


def jacobi_cyclic_numba(a, v, tol, max_sweeps):
    if _jacobi_cyclic_nb is None:
        raise RuntimeError("numba is not available")
    return _jacobi_cyclic_nb(
        np.ascontiguousarray(a, dtype=np.float64),
        np.ascontiguousarray(v, dtype=np.float64),
        float(tol),
        int(max_sweeps),
    )


def jacobi(a, v, tol, max_sweeps):
    """Dispatch to the active backend."""
    if USE_NUMBA:
        return jacobi_cyclic_numba(a, v, tol, max_sweeps)
    return jacobi_parallel_numpy(a, v, tol, max_sweeps)

