"""JIT-compiled inner loops for the two forward models.

Both kernels carry the primal value together with ``q`` tangent columns and
propagate exact per-operation derivatives (forward mode); ``q = 0`` gives the
plain evaluation with an identical value path, so attaching tangents never
changes the primal floating-point result.

Kept free of package imports so numba sees only numpy code.
"""
from __future__ import annotations

import numpy as np
from numba import njit

_PI = np.pi


@njit(cache=True)
def squeeze_heights(pv, pt, dt, n_steps, out_v, out_t):
    """Forward-Euler integration of the film height.

    pv : (6,) parameter values [F, V, R0, eta, gamma, alpha]
    pt : (6, q) parameter tangents (q may be 0)
    out_v : (n_steps+1,) height at every grid point, filled in place
    out_t : (n_steps+1, q) height tangents, filled in place

    Returns 0 on success, else the index of the step at which the height
    became non-positive or non-finite.
    """
    q = pt.shape[1]
    F = pv[0]; V = pv[1]; R0 = pv[2]; eta = pv[3]; gam = pv[4]; alp = pv[5]

    h = V / (_PI * R0 * R0)
    ht = np.empty(q)
    for j in range(q):
        ht[j] = pt[1, j] / (_PI * R0 * R0) - 2.0 * V * pt[2, j] / (_PI * R0 * R0 * R0)

    out_v[0] = h
    for j in range(q):
        out_t[0, j] = ht[j]

    c = 8.0 / 3.0
    a1 = -_PI / (4.0 * eta * V * V)   # t1 = a1 * F * H^5
    a2 = _PI / (eta * V)              # t2 = a2 * alpha * gamma * H^3
    for n in range(1, n_steps + 1):
        h2 = h * h
        h3 = h2 * h
        h4 = h2 * h2
        h5 = h4 * h
        t1 = a1 * F * h5
        t2 = a2 * alp * gam * h3
        f = c * (t1 + t2)
        for j in range(q):
            dF = pt[0, j]; dV = pt[1, j]; deta = pt[3, j]
            dgam = pt[4, j]; dalp = pt[5, j]
            dt1 = a1 * (dF * h5 + 5.0 * F * h4 * ht[j]) - t1 * (deta / eta + 2.0 * dV / V)
            dt2 = (a2 * (dalp * gam * h3 + alp * dgam * h3 + 3.0 * alp * gam * h2 * ht[j])
                   - t2 * (deta / eta + dV / V))
            ht[j] = ht[j] + dt * c * (dt1 + dt2)
        h = h + dt * f
        if not (h > 0.0 and np.isfinite(h)):
            return n
        out_v[n] = h
        for j in range(q):
            out_t[n, j] = ht[j]
    return 0


@njit(cache=True)
def thermal_profiles(pv, pt, n_el, radius, length, dt, n_steps, amb_t, amb_T,
                     out_v, out_t):
    """Backward-Euler finite-element solve of the rod temperature field.

    pv : (7,) parameter values [k, rho, cp, h_source, h_side, h_inf, T_source]
    pt : (7, q) parameter tangents (q may be 0)
    amb_t, amb_T : ambient temperature series (piecewise-linear in time)
    out_v : (n_steps+1, n_el+1) nodal temperatures, filled in place
    out_t : (n_steps+1, n_el+1, q) nodal tangents, filled in place

    The system matrix is constant in time, so its Thomas factorization is
    formed once (in dual arithmetic) and reused every step.  Returns 0 on
    success, else the step index at which the solution lost finiteness.
    """
    q = pt.shape[1]
    n = n_el + 1
    h = length / n_el
    kk = pv[0]; rho = pv[1]; cp = pv[2]
    hsrc = pv[3]; hside = pv[4]; hinf = pv[5]; tsrc = pv[6]

    mcoef = rho * cp / dt             # mass scaling of the time derivative
    side = 2.0 * hside / radius       # lateral exchange coefficient
    dmc = np.empty(q)
    dsd = np.empty(q)
    for j in range(q):
        dmc[j] = (pt[1, j] * cp + rho * pt[2, j]) / dt
        dsd[j] = 2.0 * pt[4, j] / radius

    # unit ("material-free") mass matrix: diagonal and constant off-diagonal
    mb_d = np.zeros(n)
    for e in range(n_el):
        mb_d[e] += 2.0 * h / 6.0
        mb_d[e + 1] += 2.0 * h / 6.0
    mb_o = h / 6.0
    kd = 1.0 / h                      # stiffness entries scale with 1/h

    # tridiagonal G = (mcoef + side) * Mbar + k * K + boundary rank-one terms
    dg_v = np.empty(n); dg_t = np.zeros((n, q))
    off_v = np.empty(n - 1); off_t = np.zeros((n - 1, q))
    for i in range(n):
        dg_v[i] = (mcoef + side) * mb_d[i]
        for j in range(q):
            dg_t[i, j] = (dmc[j] + dsd[j]) * mb_d[i]
    for i in range(n - 1):
        off_v[i] = (mcoef + side) * mb_o - kk * kd
        for j in range(q):
            off_t[i, j] = (dmc[j] + dsd[j]) * mb_o - pt[0, j] * kd
    for e in range(n_el):
        dg_v[e] += kk * kd
        dg_v[e + 1] += kk * kd
        for j in range(q):
            dg_t[e, j] += pt[0, j] * kd
            dg_t[e + 1, j] += pt[0, j] * kd
    dg_v[0] += hsrc
    dg_v[n - 1] += hinf
    for j in range(q):
        dg_t[0, j] += pt[3, j]
        dg_t[n - 1, j] += pt[5, j]

    # Thomas factorization of G, dual arithmetic, done once
    den_v = np.empty(n); den_t = np.empty((n, q))
    cf_v = np.empty(n - 1); cf_t = np.empty((n - 1, q))
    den_v[0] = dg_v[0]
    for j in range(q):
        den_t[0, j] = dg_t[0, j]
    cf_v[0] = off_v[0] / den_v[0]
    for j in range(q):
        cf_t[0, j] = (off_t[0, j] - cf_v[0] * den_t[0, j]) / den_v[0]
    for i in range(1, n):
        den_v[i] = dg_v[i] - off_v[i - 1] * cf_v[i - 1]
        for j in range(q):
            den_t[i, j] = (dg_t[i, j] - off_t[i - 1, j] * cf_v[i - 1]
                           - off_v[i - 1] * cf_t[i - 1, j])
        if i < n - 1:
            cf_v[i] = off_v[i] / den_v[i]
            for j in range(q):
                cf_t[i, j] = (off_t[i, j] - cf_v[i] * den_t[i, j]) / den_v[i]

    # load vector pieces: b = side*Tinf*mvec + hsrc*tsrc*e_0 + hinf*Tinf*e_N
    mvec = np.zeros(n)
    for e in range(n_el):
        mvec[e] += 0.5 * h
        mvec[e + 1] += 0.5 * h

    tinf0 = np.interp(0.0, amb_t, amb_T)
    T_v = np.full(n, tinf0)
    T_t = np.zeros((n, q))
    for i in range(n):
        out_v[0, i] = T_v[i]
        for j in range(q):
            out_t[0, i, j] = 0.0

    mtv = np.empty(n)
    rhs_v = np.empty(n); rhs_t = np.empty((n, q))
    sol_v = np.empty(n); sol_t = np.empty((n, q))
    for m in range(1, n_steps + 1):
        tinf = np.interp(m * dt, amb_t, amb_T)
        for i in range(n):
            acc = mb_d[i] * T_v[i]
            if i > 0:
                acc += mb_o * T_v[i - 1]
            if i < n - 1:
                acc += mb_o * T_v[i + 1]
            mtv[i] = acc
            rhs_v[i] = side * tinf * mvec[i] + mcoef * acc
        rhs_v[0] += hsrc * tsrc
        rhs_v[n - 1] += hinf * tinf
        for j in range(q):
            for i in range(n):
                mtt = mb_d[i] * T_t[i, j]
                if i > 0:
                    mtt += mb_o * T_t[i - 1, j]
                if i < n - 1:
                    mtt += mb_o * T_t[i + 1, j]
                rhs_t[i, j] = dsd[j] * tinf * mvec[i] + dmc[j] * mtv[i] + mcoef * mtt
            rhs_t[0, j] += pt[3, j] * tsrc + hsrc * pt[6, j]
            rhs_t[n - 1, j] += pt[5, j] * tinf

        # forward sweep
        sol_v[0] = rhs_v[0] / den_v[0]
        for j in range(q):
            sol_t[0, j] = (rhs_t[0, j] - sol_v[0] * den_t[0, j]) / den_v[0]
        for i in range(1, n):
            num_v = rhs_v[i] - off_v[i - 1] * sol_v[i - 1]
            sol_v[i] = num_v / den_v[i]
            for j in range(q):
                num_t = (rhs_t[i, j] - off_t[i - 1, j] * sol_v[i - 1]
                         - off_v[i - 1] * sol_t[i - 1, j])
                sol_t[i, j] = (num_t - sol_v[i] * den_t[i, j]) / den_v[i]

        # back substitution
        T_v[n - 1] = sol_v[n - 1]
        for j in range(q):
            T_t[n - 1, j] = sol_t[n - 1, j]
        for i in range(n - 2, -1, -1):
            T_v[i] = sol_v[i] - cf_v[i] * T_v[i + 1]
            for j in range(q):
                T_t[i, j] = sol_t[i, j] - cf_t[i, j] * T_v[i + 1] - cf_v[i] * T_t[i + 1, j]

        ok = True
        for i in range(n):
            if not np.isfinite(T_v[i]):
                ok = False
        if not ok:
            return m
        for i in range(n):
            out_v[m, i] = T_v[i]
            for j in range(q):
                out_t[m, i, j] = T_t[i, j]
    return 0
