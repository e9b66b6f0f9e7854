"""Hot inner loops: simplex pivoting and battery stepping.

The simplex kernels come in two flavours with identical semantics: explicit
loops compiled by numba, and vectorized numpy used when numba is disabled
(see ``_accel``). Pivot choices are made by the same rules in both, so the
two paths return the same basis on the same input.
"""
import numpy as np

from ._accel import USE_NUMBA, maybe_njit

OPTIMAL = 0
INFEASIBLE = 1
UNBOUNDED = 2
ITERATION_LIMIT = 3


@maybe_njit
def _pivot_loop(tab, d, r, j):
    m, n = tab.shape
    inv = 1.0 / tab[r, j]
    for k in range(n):
        tab[r, k] *= inv
    tab[r, j] = 1.0
    for i in range(m):
        if i == r:
            continue
        f = tab[i, j]
        if f != 0.0:
            for k in range(n):
                tab[i, k] -= f * tab[r, k]
            tab[i, j] = 0.0
    f = d[j]
    if f != 0.0:
        for k in range(n):
            d[k] -= f * tab[r, k]
        d[j] = 0.0


def _pivot_vec(tab, d, r, j):
    row = tab[r, :] / tab[r, j]
    row[j] = 1.0
    col = tab[:, j].copy()
    col[r] = 0.0
    nz = np.nonzero(col)[0]
    if nz.size:
        tab[nz, :] -= np.outer(col[nz], row)
        tab[nz, j] = 0.0
    tab[r, :] = row
    d -= d[j] * row
    d[j] = 0.0


@maybe_njit
def _iterate_loop(tab, xb, basis, is_basic, at_upper, upper, d, allowed,
                  bland_only, tol, max_iter, degenerate_switch):
    m, n = tab.shape
    use_bland = bland_only
    degenerate_run = 0
    it = 0
    while it < max_iter:
        j = -1
        best = 0.0
        for k in range(n):
            if not allowed[k] or is_basic[k]:
                continue
            dk = d[k]
            if at_upper[k]:
                if dk <= tol:
                    continue
            elif dk >= -tol:
                continue
            if use_bland:
                j = k
                break
            if abs(dk) > best:
                best = abs(dk)
                j = k
        if j < 0:
            return OPTIMAL, it
        delta = -1.0 if at_upper[j] else 1.0

        theta = upper[j]
        r = -1
        for i in range(m):
            g = delta * tab[i, j]
            if g > tol:
                t = max(xb[i], 0.0) / g
            elif g < -tol and upper[basis[i]] < np.inf:
                t = max(upper[basis[i]] - xb[i], 0.0) / (-g)
            else:
                continue
            if t < theta or (r >= 0 and t == theta and basis[i] < basis[r]):
                theta = t
                r = i
        if theta == np.inf:
            return UNBOUNDED, it

        if theta <= tol:
            degenerate_run += 1
            if degenerate_run >= degenerate_switch:
                use_bland = True
        else:
            degenerate_run = 0

        if theta != 0.0:
            for i in range(m):
                xb[i] -= theta * delta * tab[i, j]
        if r < 0:
            # bound flip: entering variable crosses to its other bound
            at_upper[j] = not at_upper[j]
        else:
            enter_val = (upper[j] if at_upper[j] else 0.0) + delta * theta
            leave = basis[r]
            at_upper[leave] = delta * tab[r, j] < 0.0
            is_basic[leave] = False
            _pivot_loop(tab, d, r, j)
            xb[r] = enter_val
            basis[r] = j
            is_basic[j] = True
            at_upper[j] = False
        it += 1
    return ITERATION_LIMIT, it


def _iterate_vec(tab, xb, basis, is_basic, at_upper, upper, d, allowed,
                 bland_only, tol, max_iter, degenerate_switch):
    m, n = tab.shape
    use_bland = bland_only
    degenerate_run = 0
    it = 0
    while it < max_iter:
        improving = allowed & ~is_basic & np.where(at_upper, d > tol, d < -tol)
        cand = np.flatnonzero(improving)
        if cand.size == 0:
            return OPTIMAL, it
        j = cand[0] if use_bland else cand[np.argmax(np.abs(d[cand]))]
        delta = -1.0 if at_upper[j] else 1.0
        g = delta * tab[:, j]

        ub_b = upper[basis]
        ratios = np.full(m, np.inf)
        dec = g > tol
        inc = (g < -tol) & np.isfinite(ub_b)
        ratios[dec] = np.maximum(xb[dec], 0.0) / g[dec]
        ratios[inc] = np.maximum(ub_b[inc] - xb[inc], 0.0) / (-g[inc])

        theta = upper[j]
        r = -1
        if m:
            rmin = ratios.min()
            if rmin < theta:
                ties = np.flatnonzero(ratios == rmin)
                r = ties[np.argmin(basis[ties])]
                theta = rmin
        if theta == np.inf:
            return UNBOUNDED, it

        if theta <= tol:
            degenerate_run += 1
            if degenerate_run >= degenerate_switch:
                use_bland = True
        else:
            degenerate_run = 0

        if theta != 0.0:
            xb -= theta * g
        if r < 0:
            at_upper[j] = not at_upper[j]
        else:
            enter_val = (upper[j] if at_upper[j] else 0.0) + delta * theta
            leave = basis[r]
            at_upper[leave] = g[r] < 0.0
            is_basic[leave] = False
            _pivot_vec(tab, d, r, j)
            xb[r] = enter_val
            basis[r] = j
            is_basic[j] = True
            at_upper[j] = False
        it += 1
    return ITERATION_LIMIT, it


@maybe_njit
def _crash_loop(tab, xb, basis, is_basic, upper, n_struct, n_scan, tol):
    """Pivot structural columns into rows whose slack starts negative.

    Only the first ``n_scan`` rows (the inequality rows) are crashed or
    checked. A column qualifies for row ``i`` if it is nonbasic, unbounded
    above, has a negative entry in row ``i`` and entering it at the value
    that zeroes the slack keeps every currently feasible row feasible.
    Returns the number of crash pivots made.
    """
    m, n = tab.shape
    dummy = np.zeros(n)
    count = 0
    for i in range(n_scan):
        if xb[i] >= -tol:
            continue
        for j in range(n_struct):
            if is_basic[j] or upper[j] < np.inf:
                continue
            a = tab[i, j]
            if a >= -tol:
                continue
            theta = xb[i] / a
            ok = True
            for k in range(n_scan):
                if k == i:
                    continue
                akj = tab[k, j]
                if akj != 0.0 and xb[k] >= -tol and xb[k] - akj * theta < -tol:
                    ok = False
                    break
            if not ok:
                continue
            for k in range(m):
                if k != i:
                    xb[k] -= tab[k, j] * theta
            leave = basis[i]
            is_basic[leave] = False
            _pivot_loop(tab, dummy, i, j)
            xb[i] = theta
            basis[i] = j
            is_basic[j] = True
            count += 1
            break
    return count


def _crash_vec(tab, xb, basis, is_basic, upper, n_struct, n_scan, tol):
    m, n = tab.shape
    dummy = np.zeros(n)
    count = 0
    for i in range(n_scan):
        if xb[i] >= -tol:
            continue
        cols = np.flatnonzero((~is_basic[:n_struct]) & ~np.isfinite(upper[:n_struct])
                              & (tab[i, :n_struct] < -tol))
        for j in cols:
            theta = xb[i] / tab[i, j]
            col = tab[:, j]
            after = xb - col * theta
            bad = (col != 0.0) & (xb >= -tol) & (after < -tol)
            bad[i] = False
            bad[n_scan:] = False
            if bad.any():
                continue
            after[i] = theta
            xb[:] = after
            is_basic[basis[i]] = False
            _pivot_vec(tab, dummy, i, j)
            basis[i] = j
            is_basic[j] = True
            count += 1
            break
    return count


if USE_NUMBA:
    simplex_iterate = _iterate_loop
    crash_basis = _crash_loop
else:
    simplex_iterate = _iterate_vec
    crash_basis = _crash_vec


@maybe_njit
def battery_steps(requested, soc0, soc_min, soc_max, p_max, eta_c, eta_d):
    """Execute per-hour battery energy requests with clipping.

    ``requested`` is ``(B, L)``; positive values charge (grid side), negative
    values discharge. Returns executed actions ``(B, L)``, SOC trajectories
    ``(B, L + 1)`` and the number of clipped steps per building.
    """
    n_b, n_t = requested.shape
    executed = np.zeros((n_b, n_t))
    soc = np.zeros((n_b, n_t + 1))
    clips = np.zeros(n_b, dtype=np.int64)
    for b in range(n_b):
        s = soc0[b]
        soc[b, 0] = s
        for t in range(n_t):
            x = requested[b, t]
            lo = max(-p_max[b], (soc_min[b] - s) * eta_d[b])
            hi = min(p_max[b], (soc_max[b] - s) / eta_c[b])
            lo = min(lo, 0.0)
            hi = max(hi, 0.0)
            if x > hi:
                if x - hi > 1e-9:
                    clips[b] += 1
                x = hi
            elif x < lo:
                if lo - x > 1e-9:
                    clips[b] += 1
                x = lo
            if x >= 0.0:
                s = s + eta_c[b] * x
            else:
                s = s + x / eta_d[b]
            s = min(max(s, soc_min[b]), soc_max[b])
            executed[b, t] = x
            soc[b, t + 1] = s
    return executed, soc, clips
