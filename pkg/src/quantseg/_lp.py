"""Exact vertex simplex for weighted asymmetric L1 fits.

Solves

    min_beta  sum_i  wpos[i] * max(r_i, 0) + wneg[i] * max(-r_i, 0),
    r = y - Z @ beta,

which is the LP

    min  wpos' u+ + wneg' u-   s.t.  Z beta + u+ - u- = y,  u+, u- >= 0.

A basic solution is identified by ``q`` rows ``h`` with ``Z[h]`` nonsingular
(those rows are interpolated, the split variables of every other row are
basic on the side of its residual sign). Edges of the polytope correspond to
releasing one interpolated row in either direction; the step length along an
edge is found by an exact piecewise-linear line search, which may pass
several vertices in one pivot (Barrodale & Roberts). The penalty
``c_j |beta_j|`` enters as a pseudo-row ``e_j`` with ``y = 0`` and weights
``(c_j, c_j)``, which is the same LP as splitting ``beta_j`` into two
nonnegative parts with cost ``c_j``.

Status codes: 0 optimal, 1 iteration limit, 2 unbounded, 3 singular basis.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

OPTIMAL = 0
ITERATION_LIMIT = 1
UNBOUNDED = 2
SINGULAR = 3

STATUS_NAMES = {OPTIMAL: "optimal", ITERATION_LIMIT: "iteration_limit",
                UNBOUNDED: "unbounded", SINGULAR: "singular"}


@njit(cache=True)
def _basis_inverse(Z, h, out):
    """Gauss-Jordan inverse of ``Z[h]`` into ``out``; False if numerically singular."""
    q = h.shape[0]
    A = np.empty((q, q))
    scale = 0.0
    for a in range(q):
        for c in range(q):
            A[a, c] = Z[h[a], c]
            out[a, c] = 1.0 if a == c else 0.0
            scale = max(scale, abs(A[a, c]))
    if scale == 0.0:
        return False
    for c in range(q):
        piv = c
        best = abs(A[c, c])
        for a in range(c + 1, q):
            if abs(A[a, c]) > best:
                best = abs(A[a, c])
                piv = a
        if best <= 1e-12 * scale:
            return False
        if piv != c:
            for e in range(q):
                tmp = A[c, e]
                A[c, e] = A[piv, e]
                A[piv, e] = tmp
                tmp = out[c, e]
                out[c, e] = out[piv, e]
                out[piv, e] = tmp
        inv_p = 1.0 / A[c, c]
        for e in range(q):
            A[c, e] *= inv_p
            out[c, e] *= inv_p
        for a in range(q):
            if a != c:
                f = A[a, c]
                if f != 0.0:
                    for e in range(q):
                        A[a, e] -= f * A[c, e]
                        out[a, e] -= f * out[c, e]
    return True


@njit(cache=True)
def solve_l1(Z, y, wpos, wneg, h0, max_iter):
    """Minimize the weighted asymmetric L1 loss starting at basis ``h0``.

    Returns ``(beta, h, status, iterations)``.
    """
    m, q = Z.shape
    h = h0.copy()
    in_h = np.zeros(m, dtype=np.bool_)
    for a in range(q):
        in_h[h[a]] = True
    side = np.ones(m, dtype=np.int8)
    beta = np.zeros(q)
    r = np.empty(m)
    a_dir = np.empty(m)
    g = np.empty(q)
    bt = np.empty(m)
    bi = np.empty(m, dtype=np.int64)
    Binv = np.empty((q, q))
    znorm = np.empty(m)
    for i in range(m):
        zn = 0.0
        for c in range(q):
            zn = max(zn, abs(Z[i, c]))
        znorm[i] = zn
    status = ITERATION_LIMIT
    degenerate_run = 0
    first = True
    it = 0
    while it < max_iter:
        if not _basis_inverse(Z, h, Binv):
            status = SINGULAR
            break
        for a in range(q):
            acc = 0.0
            for c in range(q):
                acc += Binv[a, c] * y[h[c]]
            beta[a] = acc
        for i in range(m):
            if in_h[i]:
                r[i] = 0.0
                continue
            acc = y[i]
            for c in range(q):
                acc -= Z[i, c] * beta[c]
            r[i] = acc
            if first:
                side[i] = 1 if acc >= 0.0 else -1
            elif acc > 0.0 and side[i] < 0 and acc > 1e-12 * (1.0 + abs(y[i])):
                side[i] = 1
            elif acc < 0.0 and side[i] > 0 and -acc > 1e-12 * (1.0 + abs(y[i])):
                side[i] = -1
        first = False

        # reduced costs of the 2q edges leaving the current vertex
        for c in range(q):
            g[c] = 0.0
        for i in range(m):
            if in_h[i]:
                continue
            psi = wpos[i] if side[i] > 0 else -wneg[i]
            if psi != 0.0:
                for c in range(q):
                    g[c] += psi * Z[i, c]
        bland = degenerate_run > 3 * m
        best_k = -1
        best_s = 0
        best_slope = 0.0
        best_row = m + 1
        for k in range(q):
            v = 0.0
            for c in range(q):
                v += Binv[c, k] * g[c]
            row = h[k]
            tol = 1e-10 * (1.0 + abs(v) + wpos[row] + wneg[row])
            for s in (1, -1):
                slope = (wneg[row] - v) if s == 1 else (wpos[row] + v)
                if slope < -tol:
                    if bland:
                        if row < best_row:
                            best_row = row
                            best_k = k
                            best_s = s
                            best_slope = slope
                    elif slope < best_slope:
                        best_k = k
                        best_s = s
                        best_slope = slope
        if best_k < 0:
            status = OPTIMAL
            break

        # exact line search along d = s * Binv[:, k]
        nb = 0
        dnorm = 0.0
        for c in range(q):
            dnorm = max(dnorm, abs(Binv[c, best_k]))
        for i in range(m):
            if in_h[i]:
                continue
            acc = 0.0
            for c in range(q):
                acc += Z[i, c] * Binv[c, best_k]
            ai = -best_s * acc
            a_dir[i] = ai
            if abs(ai) <= 1e-11 * (1.0 + znorm[i] * dnorm):
                continue
            if side[i] > 0 and ai < 0.0:
                t = r[i] / (-ai)
            elif side[i] < 0 and ai > 0.0:
                t = -r[i] / ai
            else:
                continue
            bt[nb] = max(t, 0.0)
            bi[nb] = i
            nb += 1
        # walk breakpoints in increasing (t, row) order, extracting minima lazily
        slope = best_slope
        enter = -1
        t_star = 0.0
        done = 0
        while done < nb:
            sel = done
            for o in range(done + 1, nb):
                if bt[o] < bt[sel] or (bt[o] == bt[sel] and bi[o] < bi[sel]):
                    sel = o
            if sel != done:
                tmp_t = bt[done]
                bt[done] = bt[sel]
                bt[sel] = tmp_t
                tmp_i = bi[done]
                bi[done] = bi[sel]
                bi[sel] = tmp_i
            i = bi[done]
            slope += (wpos[i] + wneg[i]) * abs(a_dir[i])
            if slope >= 0.0:
                enter = i
                t_star = bt[done]
                break
            side[i] = -side[i]
            done += 1
        if enter < 0:
            status = UNBOUNDED
            break
        if t_star <= 1e-13:
            degenerate_run += 1
        else:
            degenerate_run = 0
        leave = h[best_k]
        in_h[leave] = False
        side[leave] = -1 if best_s == 1 else 1
        in_h[enter] = True
        h[best_k] = enter
        it += 1
    return beta, h, status, it


@njit(cache=True)
def _objective(y, X, tau, b, phi, costs):
    total = 0.0
    n, p = X.shape
    for i in range(n):
        r = y[i] - b
        for j in range(p):
            r -= X[i, j] * phi[j]
        total += tau * r if r > 0.0 else (tau - 1.0) * r
    for j in range(p):
        total += costs[j] * abs(phi[j])
    return total


@njit(cache=True)
def penalized_qr(y, X, tau, costs, intercept, h_start, max_iter):
    """Penalized quantile regression via :func:`solve_l1`.

    Rows ``0..p-1`` of the working matrix are the penalty pseudo-rows, rows
    ``p..p+n-1`` the observations. ``h_start`` may be empty for a cold start.
    Returns ``(b, phi, objective, h, status, iterations)``.
    """
    n, p = X.shape
    off = 1 if intercept else 0
    q = p + off
    m = n + p
    Z = np.zeros((m, q))
    yy = np.zeros(m)
    wp = np.empty(m)
    wn = np.empty(m)
    for j in range(p):
        Z[j, off + j] = 1.0
        wp[j] = costs[j]
        wn[j] = costs[j]
    for i in range(n):
        if intercept:
            Z[p + i, 0] = 1.0
        for j in range(p):
            Z[p + i, off + j] = X[i, j]
        yy[p + i] = y[i]
        wp[p + i] = tau
        wn[p + i] = 1.0 - tau
    if h_start.shape[0] == q:
        h0 = h_start.copy()
    else:
        h0 = np.empty(q, dtype=np.int64)
        for j in range(p):
            h0[j] = j
        if intercept:
            order = np.argsort(y)
            pos = min(int(math.floor(tau * n)), n - 1)
            h0[p] = p + order[pos]
    beta, h, status, it = solve_l1(Z, yy, wp, wn, h0, max_iter)
    if status == SINGULAR and h_start.shape[0] == q:
        beta, h, status, it = penalized_qr_cold(y, X, tau, costs, intercept, max_iter, Z, yy, wp, wn)
    b = beta[0] if intercept else 0.0
    phi = beta[off:].copy()
    for a in range(q):
        if h[a] < p:
            phi[h[a]] = 0.0
    obj = _objective(y, X, tau, b, phi, costs)
    return b, phi, obj, h, status, it


@njit(cache=True)
def penalized_qr_cold(y, X, tau, costs, intercept, max_iter, Z, yy, wp, wn):
    n, p = X.shape
    q = Z.shape[1]
    h0 = np.empty(q, dtype=np.int64)
    for j in range(p):
        h0[j] = j
    if intercept:
        order = np.argsort(y)
        h0[p] = p + order[min(int(math.floor(tau * n)), n - 1)]
    return solve_l1(Z, yy, wp, wn, h0, max_iter)


EMPTY_BASIS = np.empty(0, dtype=np.int64)


@njit(cache=True)
def iteration_cap(n, p):
    return 50 * (n + p)
