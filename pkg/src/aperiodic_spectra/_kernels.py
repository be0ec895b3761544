"""Compiled inner loops (numba)."""

import math

import numba
import numpy as np
from numba import njit, prange

# try OpenMP before TBB: an outdated TBB only produces a warning at first launch
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

TINY_PIVOT = 1e-300


@njit(cache=True, parallel=True)
def sturm_counts(diag, energies):
    """Eigenvalues strictly below each energy of the Jacobi matrix with the given
    diagonal and unit off-diagonals (negative pivots of the LDL^T factorization)."""
    n = diag.shape[0]
    out = np.zeros(energies.shape[0], dtype=np.int64)
    for k in prange(energies.shape[0]):
        E = energies[k]
        count = 0
        q = 1.0
        for i in range(n):
            if i == 0:
                q = diag[0] - E
            else:
                q = diag[i] - E - 1.0 / q
            if q == 0.0:
                q = TINY_PIVOT
            if q < 0.0:
                count += 1
        out[k] = count
    return out


@njit(cache=True, parallel=True)
def period_traces(diag, energies):
    """Trace of the one-period transfer matrix and its energy derivative.

    Returns ``(trace, dtrace, log_scale)``: the true values are the returned ones
    times ``exp(log_scale)``.
    """
    m = energies.shape[0]
    tr = np.empty(m)
    dtr = np.empty(m)
    logs = np.empty(m)
    for k in prange(m):
        E = energies[k]
        a, b, c, d = 1.0, 0.0, 0.0, 1.0
        da, db, dc, dd = 0.0, 0.0, 0.0, 0.0
        acc = 0.0
        for i in range(diag.shape[0]):
            t = E - diag[i]
            # T = [[t, -1], [1, 0]], dT/dE = [[1, 0], [0, 0]]
            na = t * a - c
            nb = t * b - d
            nda = a + t * da - dc
            ndb = b + t * db - dd
            c, d = a, b
            dc, dd = da, db
            a, b, da, db = na, nb, nda, ndb
            s = max(abs(a), abs(b), abs(c), abs(d))
            if s > 1e100:
                a /= s
                b /= s
                c /= s
                d /= s
                da /= s
                db /= s
                dc /= s
                dd /= s
                acc += math.log(s)
        tr[k] = a + d
        dtr[k] = da + dd
        logs[k] = acc
    return tr, dtr, logs


@njit(cache=True)
def transfer_qr(shifts):
    """Accumulate the product of ``[[s_n, -1], [1, 0]]`` as ``Q @ R``.

    ``R = [[sg1 e^A, off e^A], [0, sg2 e^B]]``; returns (Q, A, B, sg1, sg2, off).
    """
    q00, q01, q10, q11 = 1.0, 0.0, 0.0, 1.0
    A = 0.0
    B = 0.0
    sg1 = 1.0
    sg2 = 1.0
    off = 0.0
    for i in range(shifts.shape[0]):
        s = shifts[i]
        # M = T @ Q
        m00 = s * q00 - q10
        m01 = s * q01 - q11
        m10 = q00
        m11 = q01
        # Givens QR of M
        r = math.hypot(m00, m10)
        cs = m00 / r
        sn = m10 / r
        r11 = r
        r12 = cs * m01 + sn * m11
        r22 = -sn * m01 + cs * m11
        q00, q01, q10, q11 = cs, -sn, sn, cs
        # R_new = [[r11, r12], [0, r22]] @ R_old
        off = (off + (r12 / r11) * sg2 * math.exp(B - A)) * (1.0 if r11 > 0 else -1.0)
        sg1 *= 1.0 if r11 > 0 else -1.0
        sg2 *= 1.0 if r22 > 0 else -1.0
        A += math.log(abs(r11))
        B += math.log(abs(r22))
    return np.array([[q00, q01], [q10, q11]]), A, B, sg1, sg2, off


@njit(cache=True, inline="always")
def _potential(x, amps, wavenumbers, phases):
    v = 0.0
    for j in range(amps.shape[0]):
        v += amps[j] * math.cos(wavenumbers[j] * x + phases[j])
    return v


@njit(cache=True, parallel=True)
def prufer_phase(amps, wavenumbers, phases, energies, length, step):
    """Integrate theta' = cos^2 theta + (E - V(x)) sin^2 theta from 0 to ``length``
    with classical RK4, theta(0) = 0. Returns theta(length) per energy."""
    nsteps = int(math.ceil(length / step))
    h = length / nsteps
    out = np.empty(energies.shape[0])
    for k in prange(energies.shape[0]):
        E = energies[k]
        th = 0.0
        for i in range(nsteps):
            x = i * h
            v0 = _potential(x, amps, wavenumbers, phases)
            vh = _potential(x + 0.5 * h, amps, wavenumbers, phases)
            v1 = _potential(x + h, amps, wavenumbers, phases)
            s = math.sin(th)
            c = math.cos(th)
            k1 = c * c + (E - v0) * s * s
            t2 = th + 0.5 * h * k1
            s = math.sin(t2)
            c = math.cos(t2)
            k2 = c * c + (E - vh) * s * s
            t3 = th + 0.5 * h * k2
            s = math.sin(t3)
            c = math.cos(t3)
            k3 = c * c + (E - vh) * s * s
            t4 = th + h * k3
            s = math.sin(t4)
            c = math.cos(t4)
            k4 = c * c + (E - v1) * s * s
            th += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        out[k] = th
    return out


@njit(cache=True, parallel=True)
def monodromy_traces(amps, wavenumbers, phases, energies, period, nsteps):
    """Trace of the monodromy matrix of -psi'' + V psi = E psi over one period (RK4)."""
    h = period / nsteps
    out = np.empty(energies.shape[0])
    for k in prange(energies.shape[0]):
        E = energies[k]
        tr = 0.0
        for col in range(2):
            y = 1.0 if col == 0 else 0.0
            yp = 0.0 if col == 0 else 1.0
            for i in range(nsteps):
                x = i * h
                v0 = _potential(x, amps, wavenumbers, phases) - E
                vh = _potential(x + 0.5 * h, amps, wavenumbers, phases) - E
                v1 = _potential(x + h, amps, wavenumbers, phases) - E
                k1y, k1p = yp, v0 * y
                k2y, k2p = yp + 0.5 * h * k1p, vh * (y + 0.5 * h * k1y)
                k3y, k3p = yp + 0.5 * h * k2p, vh * (y + 0.5 * h * k2y)
                k4y, k4p = yp + h * k3p, v1 * (y + h * k3y)
                y += h * (k1y + 2 * k2y + 2 * k3y + k4y) / 6.0
                yp += h * (k1p + 2 * k2p + 2 * k3p + k4p) / 6.0
            tr += y if col == 0 else yp
        out[k] = tr
    return out
