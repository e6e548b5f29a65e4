# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled trajectory stepping kernel.

Same contract as ``python_kernel.run_trajectory``: piecewise-constant
midpoint-sampled Hamiltonian, pre-sampled jump boundaries, per-step
propagation by cached unitaries (noise-free periodic runs) or an 8th-order
Taylor exponential applied directly to the state vector.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sqrt

from .python_kernel import build_period_cache

KERNEL_NAME = "cython"

cnp.import_array()

DEF DMAX = 6
DEF TAYLOR_ORDER = 6


cdef inline void _matvec(const double complex* m, const double complex* v,
                         double complex* out, int d) noexcept nogil:
    cdef int i, j
    cdef double complex acc
    for i in range(d):
        acc = 0
        for j in range(d):
            acc = acc + m[i * d + j] * v[j]
        out[i] = acc


cdef inline void _expa_apply(const double complex* a, double complex* psi,
                             int d, int repeats) noexcept nogil:
    """psi <- exp(repeats * a) psi by repeated Taylor application.

    The caller guarantees ||a|| is small (repeats splits an over-large step).
    """
    cdef double complex term[DMAX]
    cdef double complex nxt[DMAX]
    cdef double complex acc[DMAX]
    cdef int i, k, r
    for r in range(repeats):
        for i in range(d):
            term[i] = psi[i]
            acc[i] = psi[i]
        for k in range(1, TAYLOR_ORDER + 1):
            _matvec(a, term, nxt, d)
            for i in range(d):
                term[i] = nxt[i] / k
                acc[i] = acc[i] + term[i]
        for i in range(d):
            psi[i] = acc[i]


cdef inline void _normalize(double complex* psi, int d) noexcept nogil:
    cdef double n = 0
    cdef int i
    for i in range(d):
        n += psi[i].real * psi[i].real + psi[i].imag * psi[i].imag
    n = sqrt(n)
    if n > 0:
        for i in range(d):
            psi[i] = psi[i] / n


cdef inline (int, int) _jump(double complex* psi, int levels,
                             double u_source, double u_target) noexcept nogil:
    cdef double p[DMAX]
    cdef double total = 0
    cdef int alpha, n, source, target, idx
    for alpha in range(levels):
        p[alpha] = 0
        for n in range(2):
            p[alpha] += (psi[alpha * 2 + n].real * psi[alpha * 2 + n].real
                         + psi[alpha * 2 + n].imag * psi[alpha * 2 + n].imag)
        total += p[alpha]
    cdef double pick = u_source * total
    cdef double cum = 0
    source = levels - 1
    for alpha in range(levels):
        cum += p[alpha]
        if pick < cum:
            source = alpha
            break
    idx = <int>(u_target * (levels - 1))
    if idx > levels - 2:
        idx = levels - 2
    target = idx if idx < source else idx + 1
    cdef double norm = sqrt(p[source])
    cdef double complex block[2]
    for n in range(2):
        block[n] = psi[source * 2 + n] / norm if norm > 0 else 0
    for alpha in range(levels):
        for n in range(2):
            psi[alpha * 2 + n] = 0
    for n in range(2):
        psi[target * 2 + n] = block[n]
    return source, target


def run_trajectory(psi0, double dt, long long n_steps, h_static, mod_op,
                   double mod_amp, double mod_freq, noise_static, noise_mod,
                   noise_values, long long noise_stride, jump_steps,
                   jump_uniforms, int levels, sample_steps):
    """Evolve one trajectory; see ``python_kernel.run_trajectory``."""
    cdef int d = len(psi0)
    if d > DMAX:
        raise ValueError(f"kernel supports dimensions up to {DMAX}, got {d}")

    cdef double complex[::1] psi = np.array(psi0, dtype=np.complex128)
    scale = -1j * dt
    cdef double complex[:, ::1] a_static = np.ascontiguousarray(scale * np.asarray(h_static))
    cdef double complex[:, ::1] a_mod = np.ascontiguousarray(scale * np.asarray(mod_op))
    cdef double complex[:, :, ::1] a_nstat = np.ascontiguousarray(scale * np.asarray(noise_static))
    cdef double complex[:, :, ::1] a_nmod = np.ascontiguousarray(scale * np.asarray(noise_mod))
    cdef double[:, ::1] xs = np.ascontiguousarray(noise_values, dtype=np.float64)
    cdef long long[::1] jsteps = np.ascontiguousarray(jump_steps, dtype=np.int64)
    cdef double[:, ::1] junif = np.ascontiguousarray(
        np.asarray(jump_uniforms, dtype=np.float64).reshape(-1, 2))
    cdef long long[::1] ssteps = np.ascontiguousarray(sample_steps, dtype=np.int64)

    cdef int n_channels = a_nstat.shape[0]
    cdef long long n_noise = xs.shape[1] if n_channels else 0
    cdef Py_ssize_t n_samples = ssteps.shape[0]
    cdef Py_ssize_t n_jumps = jsteps.shape[0]

    states_arr = np.empty((n_samples, d), dtype=np.complex128)
    sources_arr = np.full(n_jumps, -1, dtype=np.int64)
    targets_arr = np.full(n_jumps, -1, dtype=np.int64)
    cdef double complex[:, ::1] states = states_arr
    cdef long long[::1] sources = sources_arr
    cdef long long[::1] targets = targets_arr

    cdef double complex[:, :, ::1] cache = None
    cdef long long n_cache = 0
    if n_channels == 0:
        cache_obj = build_period_cache(
            np.asarray(h_static), np.asarray(mod_op), mod_amp, mod_freq, dt)
        if cache_obj is not None:
            cache = np.ascontiguousarray(cache_obj)
            n_cache = cache.shape[0]

    # carrier lookup table when the modulation period is an integer number
    # of steps (midpoint-sampled cosine repeats exactly)
    cdef double[::1] carrier_tab = None
    cdef long long n_tab = 0
    if n_cache == 0 and mod_freq != 0.0:
        period = 2.0 * np.pi / mod_freq
        n_p = int(round(period / dt))
        if 0 < n_p <= 1_000_000 and abs(n_p * dt - period) < 1e-9 * period:
            steps_arr = np.arange(n_p)
            carrier_tab = np.cos(mod_freq * (steps_arr + 0.5) * dt)
            n_tab = n_p

    # split over-large steps so the fixed-order Taylor propagator stays
    # accurate: bound ||A|| by the worst case over the noise excursions
    cdef int repeats = 1
    if n_cache == 0:
        bound = np.linalg.norm(np.asarray(a_static), 2) + abs(mod_amp) * np.linalg.norm(
            np.asarray(a_mod), 2)
        for ch_ in range(n_channels):
            xmax = float(np.max(np.abs(np.asarray(xs)[ch_]))) if n_noise else 0.0
            bound += xmax * (np.linalg.norm(np.asarray(a_nstat)[ch_], 2)
                             + np.linalg.norm(np.asarray(a_nmod)[ch_], 2))
        while bound / repeats > 0.2:
            repeats *= 2
    cdef double inv_repeats = 1.0 / repeats

    cdef double complex p_blk[DMAX * DMAX]
    cdef double complex q_blk[DMAX * DMAX]
    cdef double complex a[DMAX * DMAX]
    cdef double complex tmp[DMAX]
    cdef double carrier, x
    cdef long long k, kn, kn_cur = -1
    cdef Py_ssize_t si = 0, ji = 0
    cdef int i, j, ch, src, tgt

    with nogil:
        if n_cache == 0:
            for i in range(d):
                for j in range(d):
                    p_blk[i * d + j] = a_static[i, j]
                    q_blk[i * d + j] = mod_amp * a_mod[i, j]
        for k in range(n_steps + 1):
            while si < n_samples and ssteps[si] == k:
                for i in range(d):
                    tmp[i] = psi[i]
                _normalize(tmp, d)
                for i in range(d):
                    states[si, i] = tmp[i]
                si += 1
            while ji < n_jumps and jsteps[ji] == k:
                src, tgt = _jump(&psi[0], levels, junif[ji, 0], junif[ji, 1])
                sources[ji] = src
                targets[ji] = tgt
                ji += 1
            if k == n_steps:
                break
            if n_cache > 0:
                _matvec(&cache[k % n_cache, 0, 0], &psi[0], tmp, d)
                for i in range(d):
                    psi[i] = tmp[i]
            else:
                if n_channels > 0:
                    kn = k // noise_stride
                    if kn > n_noise - 1:
                        kn = n_noise - 1
                    if kn != kn_cur:
                        kn_cur = kn
                        for i in range(d):
                            for j in range(d):
                                p_blk[i * d + j] = a_static[i, j]
                                q_blk[i * d + j] = mod_amp * a_mod[i, j]
                        for ch in range(n_channels):
                            x = xs[ch, kn]
                            for i in range(d):
                                for j in range(d):
                                    p_blk[i * d + j] = p_blk[i * d + j] + x * a_nstat[ch, i, j]
                                    q_blk[i * d + j] = q_blk[i * d + j] + x * a_nmod[ch, i, j]
                if mod_freq != 0.0:
                    carrier = carrier_tab[k % n_tab] if n_tab > 0 else cos(
                        mod_freq * (k + 0.5) * dt)
                else:
                    carrier = 1.0
                for i in range(d * d):
                    a[i] = (p_blk[i] + carrier * q_blk[i]) * inv_repeats
                _expa_apply(a, &psi[0], d, repeats)
                if k % 1000 == 999:
                    _normalize(&psi[0], d)

    return states_arr, sources_arr, targets_arr
