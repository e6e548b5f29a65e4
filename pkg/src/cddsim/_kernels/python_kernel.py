"""Pure-numpy trajectory stepping kernel (reference implementation).

Evolves one stochastic trajectory of the joint electron-nucleus state under
H(t) = h_static + mod_amp*cos(mod_freq*t)*mod_op
     + sum_c x_c(t) * (noise_static[c] + cos(mod_freq*t)*noise_mod[c]),
with pre-sampled jump boundaries. The compiled kernel in ``_cykernel``
implements the same contract; this module is the import fallback and the
baseline for the kernel benchmark.
"""

import numpy as np

KERNEL_NAME = "python"

# Maximum steps cacheable as one drive period of propagators.
_MAX_CACHE = 1_000_000


def exact_propagator(h, dt):
    """Unitary exp(-i h dt) via eigendecomposition (cache construction only)."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * dt)) @ v.conj().T


def build_period_cache(h_static, mod_op, mod_amp, mod_freq, dt):
    """Per-step propagators over one drive period, or None if not applicable.

    Only valid for noise-free runs: a static Hamiltonian caches a single
    propagator; a cosine-modulated one caches one propagator per step of the
    (integer-step) modulation period, reused cyclically.
    """
    if mod_amp == 0.0:
        return exact_propagator(h_static, dt)[None, :, :]
    if mod_freq == 0.0:
        return exact_propagator(h_static + mod_amp * mod_op, dt)[None, :, :]
    period = 2.0 * np.pi / mod_freq
    n_p = int(round(period / dt))
    if n_p < 1 or n_p > _MAX_CACHE or abs(n_p * dt - period) > 1e-9 * period:
        return None
    steps = np.arange(n_p)
    coeffs = mod_amp * np.cos(mod_freq * (steps + 0.5) * dt)
    return np.stack([exact_propagator(h_static + c * mod_op, dt) for c in coeffs])


def _taylor_propagator(a, order=8):
    """exp(a) by Horner-evaluated Taylor series; needs ||a|| well below 1."""
    d = a.shape[0]
    u = np.eye(d, dtype=complex) + a / order
    for k in range(order - 1, 0, -1):
        u = np.eye(d, dtype=complex) + (a @ u) / k
    return u


def _apply_jump(psi, levels, u_source, u_target):
    pops = np.abs(psi.reshape(levels, 2)) ** 2
    p = pops.sum(axis=1)
    cum = np.cumsum(p)
    source = int(np.searchsorted(cum, u_source * cum[-1], side="right"))
    source = min(source, levels - 1)
    idx = min(int(u_target * (levels - 1)), levels - 2)
    target = idx if idx < source else idx + 1
    out = np.zeros_like(psi)
    block = psi.reshape(levels, 2)[source]
    out.reshape(levels, 2)[target] = block / np.sqrt(p[source])
    return out, source, target


def run_trajectory(
    psi0,
    dt,
    n_steps,
    h_static,
    mod_op,
    mod_amp,
    mod_freq,
    noise_static,
    noise_mod,
    noise_values,
    noise_stride,
    jump_steps,
    jump_uniforms,
    levels,
    sample_steps,
):
    """Step the trajectory and return (states, jump_sources, jump_targets).

    ``states[i]`` is the normalized state at time ``sample_steps[i]*dt``;
    jumps listed in ``jump_steps`` (boundary indices) are applied with the
    matching uniform draws. Deterministic for identical inputs.
    """
    psi = np.array(psi0, dtype=complex)
    d = psi.shape[0]
    n_channels = noise_values.shape[0]
    cache = None
    if n_channels == 0:
        cache = build_period_cache(h_static, mod_op, mod_amp, mod_freq, dt)

    states = np.empty((len(sample_steps), d), dtype=complex)
    jump_sources = np.full(len(jump_steps), -1, dtype=np.int64)
    jump_targets = np.full(len(jump_steps), -1, dtype=np.int64)

    a_static = -1j * dt * h_static
    a_mod = -1j * dt * mod_op
    a_noise_static = -1j * dt * noise_static
    a_noise_mod = -1j * dt * noise_mod
    n_noise = noise_values.shape[1] if n_channels else 0

    si = ji = 0
    n_samples, n_jumps = len(sample_steps), len(jump_steps)
    for k in range(n_steps + 1):
        while si < n_samples and sample_steps[si] == k:
            states[si] = psi / np.linalg.norm(psi)
            si += 1
        while ji < n_jumps and jump_steps[ji] == k:
            psi, jump_sources[ji], jump_targets[ji] = _apply_jump(
                psi, levels, jump_uniforms[ji, 0], jump_uniforms[ji, 1]
            )
            ji += 1
        if k == n_steps:
            break
        if cache is not None:
            psi = cache[k % cache.shape[0]] @ psi
        else:
            carrier = np.cos(mod_freq * (k + 0.5) * dt) if mod_freq else 1.0
            a = a_static + (mod_amp * carrier) * a_mod
            if n_channels:
                xs = noise_values[:, min(k // noise_stride, n_noise - 1)]
                a = a + np.tensordot(xs, a_noise_static + carrier * a_noise_mod, axes=1)
            psi = _taylor_propagator(a) @ psi
            if k % 1000 == 999:
                psi = psi / np.linalg.norm(psi)
    return states, jump_sources, jump_targets
