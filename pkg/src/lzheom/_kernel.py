"""Compiled RK4 loop over the hierarchy of 2x2 ADOs.

``y`` has shape ``(M + 1, 2, 2)``: the extra trailing block is kept at zero
and is what the neighbour tables point at for missing/truncated indices.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _deriv(y, out, hx, hy, hz, V, gamma, nnu, n1, n2, up, down):
    M = y.shape[0] - 1
    H00 = hz + 0j
    H11 = -hz + 0j
    H01 = hx - 1j * hy
    H10 = hx + 1j * hy
    v00, v01, v10, v11 = V[0, 0], V[0, 1], V[1, 0], V[1, 1]
    cd1 = 1j * gamma
    cd2 = -1j * gamma
    for i in range(M):
        r00, r01, r10, r11 = y[i, 0, 0], y[i, 0, 1], y[i, 1, 0], y[i, 1, 1]
        a = up[i, 0]
        b = up[i, 1]
        s00 = y[a, 0, 0] + y[b, 0, 0]
        s01 = y[a, 0, 1] + y[b, 0, 1]
        s10 = y[a, 1, 0] + y[b, 1, 0]
        s11 = y[a, 1, 1] + y[b, 1, 1]
        d = down[i, 0]
        p00, p01, p10, p11 = y[d, 0, 0], y[d, 0, 1], y[d, 1, 0], y[d, 1, 1]
        d = down[i, 1]
        q00, q01, q10, q11 = y[d, 0, 0], y[d, 0, 1], y[d, 1, 0], y[d, 1, 1]
        g = -nnu[i]
        c1 = cd1 * n1[i]
        c2 = cd2 * n2[i]

        # [H, r] and [V, s] in closed form for 2x2 matrices
        dh = H00 - H11
        h00 = H01 * r10 - r01 * H10
        h01 = dh * r01 + H01 * (r11 - r00)
        h10 = -dh * r10 + H10 * (r00 - r11)
        h11 = -h00
        dv = v00 - v11
        u00 = v01 * s10 - s01 * v10
        u01 = dv * s01 + v01 * (s11 - s00)
        u10 = -dv * s10 + v10 * (s00 - s11)
        u11 = -u00
        # p V  and  V q
        pv00 = p00 * v00 + p01 * v10
        pv01 = p00 * v01 + p01 * v11
        pv10 = p10 * v00 + p11 * v10
        pv11 = p10 * v01 + p11 * v11
        vq00 = v00 * q00 + v01 * q10
        vq01 = v00 * q01 + v01 * q11
        vq10 = v10 * q00 + v11 * q10
        vq11 = v10 * q01 + v11 * q11

        out[i, 0, 0] = g * r00 - 1j * (h00 + u00) + c1 * pv00 + c2 * vq00
        out[i, 0, 1] = g * r01 - 1j * (h01 + u01) + c1 * pv01 + c2 * vq01
        out[i, 1, 0] = g * r10 - 1j * (h10 + u10) + c1 * pv10 + c2 * vq10
        out[i, 1, 1] = g * r11 - 1j * (h11 + u11) + c1 * pv11 + c2 * vq11


@njit(cache=True)
def _all_finite(y):
    M = y.shape[0]
    for i in range(M):
        for p in range(2):
            for q in range(2):
                v = y[i, p, q]
                if not (np.isfinite(v.real) and np.isfinite(v.imag)):
                    return False
    return True


@njit(cache=True)
def rk4_hierarchy(y, hx, hy, hz, dt, n_steps, sample_every,
                  V, gamma, nnu, n1, n2, up, down, samples, bound):
    """Advance ``y`` in place; ``hx/hy/hz`` are sampled on the half-step grid
    (length ``2 n_steps + 1``). ``samples[k]`` receives the physical block at
    step 0, every ``sample_every`` steps and the final step.

    Returns the number of samples written, or ``-(k + 1)`` if at sample ``k``
    any ADO is non-finite or a physical-block entry exceeds ``bound``.
    """
    k1 = np.zeros_like(y)
    k2 = np.zeros_like(y)
    k3 = np.zeros_like(y)
    k4 = np.zeros_like(y)
    tmp = np.zeros_like(y)
    M = y.shape[0] - 1
    half = 0.5 * dt
    sixth = dt / 6.0
    samples[0] = y[0]
    k = 1
    for step in range(n_steps):
        j = 2 * step
        _deriv(y, k1, hx[j], hy[j], hz[j], V, gamma, nnu, n1, n2, up, down)
        for i in range(M):
            for p in range(2):
                for q in range(2):
                    tmp[i, p, q] = y[i, p, q] + half * k1[i, p, q]
        _deriv(tmp, k2, hx[j + 1], hy[j + 1], hz[j + 1], V, gamma, nnu, n1, n2, up, down)
        for i in range(M):
            for p in range(2):
                for q in range(2):
                    tmp[i, p, q] = y[i, p, q] + half * k2[i, p, q]
        _deriv(tmp, k3, hx[j + 1], hy[j + 1], hz[j + 1], V, gamma, nnu, n1, n2, up, down)
        for i in range(M):
            for p in range(2):
                for q in range(2):
                    tmp[i, p, q] = y[i, p, q] + dt * k3[i, p, q]
        _deriv(tmp, k4, hx[j + 2], hy[j + 2], hz[j + 2], V, gamma, nnu, n1, n2, up, down)
        for i in range(M):
            for p in range(2):
                for q in range(2):
                    y[i, p, q] += sixth * (k1[i, p, q] + 2.0 * (k2[i, p, q] + k3[i, p, q])
                                           + k4[i, p, q])
        done = step + 1
        if done % sample_every == 0 or done == n_steps:
            if not _all_finite(y) or np.max(np.abs(y[0])) > bound:
                return -(k + 1)
            samples[k] = y[0]
            k += 1
    return k
