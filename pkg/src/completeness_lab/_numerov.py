"""Jitted fixed-step propagation kernels for the radial equation.

All kernels propagate u'' = (W(r) - k2) u on the uniform grid r_j = j h with
the three-point fourth-order (Numerov) recurrence

    (1 - T_{j+1}) u_{j+1} = (2 + 10 T_j) u_j - (1 - T_{j-1}) u_{j-1},
    T_j = h^2 (W_j - k2) / 12.

The caller supplies a precomputed "head" segment (series start near the
origin) covering j = 0 .. j_start+1; W[0] is never consulted.
"""

import numpy as np
from numba import njit

_BIG = 1e250
_SMALL = 1e-250
_LOG_BIG = 250.0 * np.log(10.0)


@njit(cache=True)
def propagate_many(W, h, k2, head, j_start, eval_idx, fvals, stride):
    """Vectorized-over-momenta propagation with on-the-fly reductions.

    Parameters
    ----------
    W : (n+1,) effective potential (centrifugal included) on the grid
    k2 : (nk,) energies
    head : (nk, j_start+2) series values for j = 0 .. j_start+1
    eval_idx : sorted int64 indices at which u is recorded
    fvals : (n+1,) or (0,) weight samples; if present the Simpson projection
        integral of f u is accumulated per momentum
    stride : record u at every stride-th grid point (0 = no storage)

    Returns
    -------
    u_eval (nk, ne), uR (nk,), nodes (nk,), norm (nk,), proj (nk,), u_store
    """
    n = W.shape[0] - 1
    nk = k2.shape[0]
    ne = eval_idx.shape[0]
    u_eval = np.zeros((nk, ne))
    uR = np.zeros(nk)
    nodes = np.zeros(nk, dtype=np.int64)
    norm = np.zeros(nk)
    proj = np.zeros(nk)
    has_f = fvals.shape[0] == n + 1
    if stride > 0:
        ns = n // stride + 1
    else:
        ns = 0
    u_store = np.zeros((nk, ns))
    third = h / 3.0
    c = h * h / 12.0
    for q in range(nk):
        e = k2[q]
        # head segment reductions
        p = 0
        nod = 0
        sgn = 0.0
        acc_n = 0.0
        acc_p = 0.0
        um = 0.0
        uc = 0.0
        for j in range(j_start + 2):
            uj = head[q, j]
            if j == 0:
                wgt = 1.0
            elif j % 2 == 1:
                wgt = 4.0
            else:
                wgt = 2.0
            acc_n += wgt * uj * uj
            if has_f:
                acc_p += wgt * fvals[j] * uj
            while p < ne and eval_idx[p] == j:
                u_eval[q, p] = uj
                p += 1
            if stride > 0 and j % stride == 0:
                u_store[q, j // stride] = uj
            if uj != 0.0:
                s = 1.0 if uj > 0.0 else -1.0
                if sgn != 0.0 and s != sgn and j < n:
                    nod += 1
                sgn = s
            um = uc
            uc = uj
        tm = c * (W[j_start] - e)
        tc = c * (W[j_start + 1] - e)
        for j in range(j_start + 2, n + 1):
            tp = c * (W[j] - e)
            up = ((2.0 + 10.0 * tc) * uc - (1.0 - tm) * um) / (1.0 - tp)
            um = uc
            uc = up
            tm = tc
            tc = tp
            if j == n:
                wgt = 1.0
            elif j % 2 == 1:
                wgt = 4.0
            else:
                wgt = 2.0
            acc_n += wgt * uc * uc
            if has_f:
                acc_p += wgt * fvals[j] * uc
            while p < ne and eval_idx[p] == j:
                u_eval[q, p] = uc
                p += 1
            if stride > 0 and j % stride == 0:
                u_store[q, j // stride] = uc
            if uc != 0.0:
                s = 1.0 if uc > 0.0 else -1.0
                if sgn != 0.0 and s != sgn and j < n:
                    nod += 1
                sgn = s
        uR[q] = uc
        nodes[q] = nod
        norm[q] = acc_n * third
        proj[q] = acc_p * third
    return u_eval, uR, nodes, norm, proj, u_store


@njit(cache=True)
def propagate_scan(W, h, k2, head, j_start):
    """u(R) and node count per momentum; no storage (cheap scan passes)."""
    n = W.shape[0] - 1
    nk = k2.shape[0]
    uR = np.zeros(nk)
    nodes = np.zeros(nk, dtype=np.int64)
    c = h * h / 12.0
    for q in range(nk):
        e = k2[q]
        nod = 0
        sgn = 0.0
        um = head[q, j_start]
        uc = head[q, j_start + 1]
        if um > 0.0:
            sgn = 1.0
        elif um < 0.0:
            sgn = -1.0
        if uc != 0.0:
            s = 1.0 if uc > 0.0 else -1.0
            if sgn != 0.0 and s != sgn:
                nod += 1
            sgn = s
        tm = c * (W[j_start] - e)
        tc = c * (W[j_start + 1] - e)
        for j in range(j_start + 2, n + 1):
            tp = c * (W[j] - e)
            up = ((2.0 + 10.0 * tc) * uc - (1.0 - tm) * um) / (1.0 - tp)
            um = uc
            uc = up
            tm = tc
            tc = tp
            if uc != 0.0:
                s = 1.0 if uc > 0.0 else -1.0
                if sgn != 0.0 and s != sgn and j < n:
                    nod += 1
                sgn = s
            # rescale guard (bound-state scans grow exponentially)
            au = abs(uc)
            if au > _BIG:
                uc *= _SMALL
                um *= _SMALL
        uR[q] = uc
        nodes[q] = nod
    return uR, nodes


@njit(cache=True)
def propagate_outward_log(W, h, k2, head, j_start):
    """Scalar outward pass storing u and a cumulative log-scale.

    True solution is u[j] * exp(clog[j]). Used for bound states, where the
    regular solution grows exponentially through the forbidden region.
    """
    n = W.shape[0] - 1
    u = np.zeros(n + 1)
    clog = np.zeros(n + 1)
    nodes = 0
    sgn = 0.0
    for j in range(j_start + 2):
        u[j] = head[j]
        if u[j] != 0.0:
            s = 1.0 if u[j] > 0.0 else -1.0
            if sgn != 0.0 and s != sgn and j < n:
                nodes += 1
            sgn = s
    c = h * h / 12.0
    um = u[j_start]
    uc = u[j_start + 1]
    cl = 0.0
    tm = c * (W[j_start] - k2)
    tc = c * (W[j_start + 1] - k2)
    for j in range(j_start + 2, n + 1):
        tp = c * (W[j] - k2)
        up = ((2.0 + 10.0 * tc) * uc - (1.0 - tm) * um) / (1.0 - tp)
        um = uc
        uc = up
        tm = tc
        tc = tp
        if abs(uc) > _BIG:
            uc *= _SMALL
            um *= _SMALL
            cl += _LOG_BIG
        u[j] = uc
        clog[j] = cl
        if uc != 0.0:
            s = 1.0 if uc > 0.0 else -1.0
            if sgn != 0.0 and s != sgn and j < n:
                nodes += 1
            sgn = s
    return u, clog, nodes


@njit(cache=True)
def propagate_inward_log(W, h, k2, j_stop):
    """Scalar inward pass from u(R) = 0 down to j_stop, log-scaled.

    Starts with u[n] = 0, u[n-1] = 1 (arbitrary scale fixed later by gluing).
    """
    n = W.shape[0] - 1
    u = np.zeros(n + 1)
    clog = np.zeros(n + 1)
    c = h * h / 12.0
    u[n] = 0.0
    u[n - 1] = 1.0
    um = u[n]
    uc = u[n - 1]
    cl = 0.0
    tm = c * (W[n] - k2)
    tc = c * (W[n - 1] - k2)
    for j in range(n - 2, j_stop - 1, -1):
        tp = c * (W[j] - k2)
        up = ((2.0 + 10.0 * tc) * uc - (1.0 - tm) * um) / (1.0 - tp)
        um = uc
        uc = up
        tm = tc
        tc = tp
        if abs(uc) > _BIG:
            uc *= _SMALL
            um *= _SMALL
            cl += _LOG_BIG
        u[j] = uc
        clog[j] = cl
    return u, clog
