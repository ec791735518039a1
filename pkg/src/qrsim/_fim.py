"""Numba kernels for the anisotropic fast-iterative Eikonal sweep.

The sweep is Jacobi-style: every candidate node recomputes its arrival
time from a snapshot of the previous sweep, so the fixed point and every
intermediate state are independent of node ordering.  Times only ever
decrease; convergence is reached when no node improves by more than the
tolerance.
"""

import numpy as np
from numba import njit

INF = 1.0e30


@njit(cache=True, inline="always")
def _mdot(m, u, v):
    return (u[0] * (m[0, 0] * v[0] + m[0, 1] * v[1] + m[0, 2] * v[2])
            + u[1] * (m[1, 0] * v[0] + m[1, 1] * v[1] + m[1, 2] * v[2])
            + u[2] * (m[2, 0] * v[0] + m[2, 1] * v[1] + m[2, 2] * v[2]))


@njit(cache=True, inline="always")
def _edge_candidate(m, w, e, ta, delta, best):
    """Min arrival via a source moving on segment a + lam * e, lam in (0, 1)."""
    a_ = _mdot(m, e, e)
    b_ = _mdot(m, e, w)
    c_ = _mdot(m, w, w)
    # stationarity of ta + lam*delta + sqrt(c - 2b lam + a lam^2), squared
    qa = a_ * (a_ - delta * delta)
    qb = -2.0 * b_ * (a_ - delta * delta)
    qc = b_ * b_ - delta * delta * c_
    if abs(qa) > 1e-300:
        disc = qb * qb - 4.0 * qa * qc
        if disc >= 0.0:
            sq = np.sqrt(disc)
            for sign in (-1.0, 1.0):
                lam = (-qb + sign * sq) / (2.0 * qa)
                if 0.0 < lam < 1.0:
                    q = c_ - 2.0 * b_ * lam + a_ * lam * lam
                    if q > 0.0:
                        val = ta + lam * delta + np.sqrt(q)
                        if val < best:
                            best = val
    return best


@njit(cache=True)
def _local_update(pts, tets, metric, tt, target, times):
    """Arrival estimate at `target` through one tet from its other vertices."""
    m = metric[tt]
    xd = pts[target]
    idx = np.empty(3, np.int64)
    k = 0
    for c in range(4):
        v = tets[tt, c]
        if v != target:
            idx[k] = v
            k += 1
    best = INF

    # vertex candidates (edge-aligned arrivals)
    for k in range(3):
        tv = times[idx[k]]
        if tv < INF * 0.5:
            d0 = xd[0] - pts[idx[k], 0]
            d1 = xd[1] - pts[idx[k], 1]
            d2 = xd[2] - pts[idx[k], 2]
            dd = (d0 * (m[0, 0] * d0 + m[0, 1] * d1 + m[0, 2] * d2)
                  + d1 * (m[1, 0] * d0 + m[1, 1] * d1 + m[1, 2] * d2)
                  + d2 * (m[2, 0] * d0 + m[2, 1] * d1 + m[2, 2] * d2))
            val = tv + np.sqrt(dd)
            if val < best:
                best = val

    # edge candidates
    w = np.empty(3)
    e = np.empty(3)
    for ka in range(3):
        for kb in range(ka + 1, 3):
            ta = times[idx[ka]]
            tb = times[idx[kb]]
            if ta >= INF * 0.5 or tb >= INF * 0.5:
                continue
            for c in range(3):
                w[c] = xd[c] - pts[idx[ka], c]
                e[c] = pts[idx[kb], c] - pts[idx[ka], c]
            best = _edge_candidate(m, w, e, ta, tb - ta, best)

    # face-interior candidate
    ta = times[idx[0]]
    tb = times[idx[1]]
    tc = times[idx[2]]
    if ta < INF * 0.5 and tb < INF * 0.5 and tc < INF * 0.5:
        e1 = np.empty(3)
        e2 = np.empty(3)
        for c in range(3):
            w[c] = xd[c] - pts[idx[0], c]
            e1[c] = pts[idx[1], c] - pts[idx[0], c]
            e2[c] = pts[idx[2], c] - pts[idx[0], c]
        d1 = tb - ta
        d2 = tc - ta
        a11 = _mdot(m, e1, e1)
        a12 = _mdot(m, e1, e2)
        a22 = _mdot(m, e2, e2)
        g1 = _mdot(m, e1, w)
        g2 = _mdot(m, e2, w)
        det = a11 * a22 - a12 * a12
        if abs(det) > 1e-300:
            l01 = (a22 * g1 - a12 * g2) / det
            l02 = (a11 * g2 - a12 * g1) / det
            mu1 = (a22 * d1 - a12 * d2) / det
            mu2 = (a11 * d2 - a12 * d1) / det
            u0 = np.empty(3)
            v0 = np.empty(3)
            for c in range(3):
                u0[c] = w[c] - l01 * e1[c] - l02 * e2[c]
                v0[c] = mu1 * e1[c] + mu2 * e2[c]
            alpha = 1.0 - _mdot(m, v0, v0)
            beta = -2.0 * _mdot(m, u0, v0)
            gamma = -_mdot(m, u0, u0)
            s_candidates = np.full(2, -1.0)
            if abs(alpha) > 1e-300:
                disc = beta * beta - 4.0 * alpha * gamma
                if disc >= 0.0:
                    sq = np.sqrt(disc)
                    s_candidates[0] = (-beta - sq) / (2.0 * alpha)
                    s_candidates[1] = (-beta + sq) / (2.0 * alpha)
            elif abs(beta) > 1e-300:
                s_candidates[0] = -gamma / beta
            for ks in range(2):
                s = s_candidates[ks]
                if s <= 0.0:
                    continue
                l1 = l01 - s * mu1
                l2 = l02 - s * mu2
                if l1 >= -1e-12 and l2 >= -1e-12 and l1 + l2 <= 1.0 + 1e-12:
                    q0 = xd[0] - (pts[idx[0], 0] + l1 * e1[0] + l2 * e2[0])
                    q1 = xd[1] - (pts[idx[0], 1] + l1 * e1[1] + l2 * e2[1])
                    q2 = xd[2] - (pts[idx[0], 2] + l1 * e1[2] + l2 * e2[2])
                    dd = (q0 * (m[0, 0] * q0 + m[0, 1] * q1 + m[0, 2] * q2)
                          + q1 * (m[1, 0] * q0 + m[1, 1] * q1 + m[1, 2] * q2)
                          + q2 * (m[2, 0] * q0 + m[2, 1] * q1 + m[2, 2] * q2))
                    val = ta + l1 * d1 + l2 * d2 + np.sqrt(dd)
                    if val < best:
                        best = val
    return best


@njit(cache=True, nogil=True)
def solve_kernel(pts, tets, metric, inc_ptr, inc_tet,
                 endo_ptr, endo_nbr, endo_time,
                 init_idx, init_val, tol, max_sweeps):
    """Jacobi label-correcting sweeps.

    Every candidate value within a sweep is computed from the previous
    sweep's snapshot, so intermediate states and the fixed point are
    independent of node numbering.  Each front-adjacent tet is visited
    once per sweep and pushes updates to its four vertices.
    """
    nn = pts.shape[0]
    nt = tets.shape[0]
    times = np.full(nn, INF)
    front = np.empty(nn, np.int64)
    in_front = np.zeros(nn, np.bool_)
    n_front = 0
    for k in range(len(init_idx)):
        i = init_idx[k]
        if init_val[k] < times[i]:
            times[i] = init_val[k]
        if not in_front[i]:
            in_front[i] = True
            front[n_front] = i
            n_front += 1

    tet_stamp = np.full(nt, -1, np.int64)
    tet_list = np.empty(nt, np.int64)
    touched = np.empty(nn, np.int64)
    is_touched = np.zeros(nn, np.bool_)
    snapshot = np.empty(nn)

    for sweep in range(max_sweeps):
        if n_front == 0:
            break
        n_tets = 0
        for fk in range(n_front):
            i = front[fk]
            for p in range(inc_ptr[i], inc_ptr[i + 1]):
                tt = inc_tet[p]
                if tet_stamp[tt] != sweep:
                    tet_stamp[tt] = sweep
                    tet_list[n_tets] = tt
                    n_tets += 1
        snapshot[:] = times
        n_touched = 0

        for tk in range(n_tets):
            tt = tet_list[tk]
            lo = INF
            for c in range(4):
                tv = snapshot[tets[tt, c]]
                if tv < lo:
                    lo = tv
            if lo >= INF * 0.5:
                continue
            for c in range(4):
                target = tets[tt, c]
                if lo >= times[target]:      # no source lies below the current value
                    continue
                val = _local_update(pts, tets, metric, tt, target, snapshot)
                if val < times[target]:
                    times[target] = val
                    if not is_touched[target]:
                        is_touched[target] = True
                        touched[n_touched] = target
                        n_touched += 1

        for fk in range(n_front):
            i = front[fk]
            ti = snapshot[i]
            if ti >= INF * 0.5:
                continue
            for p in range(endo_ptr[i], endo_ptr[i + 1]):
                j = endo_nbr[p]
                val = ti + endo_time[p]
                if val < times[j]:
                    times[j] = val
                    if not is_touched[j]:
                        is_touched[j] = True
                        touched[n_touched] = j
                        n_touched += 1

        for fk in range(n_front):
            in_front[front[fk]] = False
        n_front = 0
        for k in range(n_touched):
            i = touched[k]
            is_touched[i] = False
            if times[i] < snapshot[i] - tol:
                in_front[i] = True
                front[n_front] = i
                n_front += 1
    return times
