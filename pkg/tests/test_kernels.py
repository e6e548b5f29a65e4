"""Compiled and pure-Python stepping kernels agree and stay unitary."""

import numpy as np
import pytest
import scipy.linalg

from cddsim._kernels import python_kernel

cykernel = pytest.importorskip("cddsim._kernels._cykernel")


def _workload(levels=2, n_channels=2, n_steps=4000, with_mod=True, seed=0):
    """A randomized but deterministic run_trajectory argument set."""
    rng = np.random.default_rng(seed)
    d = 2 * levels

    def herm(scale):
        a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        return scale * (a + a.conj().T) / 2

    dt = 1e-3
    psi0 = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    psi0 /= np.linalg.norm(psi0)
    noise_stride = 7
    n_noise = int(np.ceil(n_steps / noise_stride))
    kwargs = dict(
        psi0=psi0,
        dt=dt,
        n_steps=n_steps,
        h_static=herm(20.0),
        mod_op=herm(10.0),
        mod_amp=3.0 if with_mod else 0.0,
        mod_freq=2 * np.pi * 40.0 if with_mod else 0.0,
        noise_static=np.stack([herm(1.0) for _ in range(n_channels)])
        if n_channels
        else np.zeros((0, d, d), complex),
        noise_mod=np.stack([herm(1.0) for _ in range(n_channels)])
        if n_channels
        else np.zeros((0, d, d), complex),
        noise_values=rng.standard_normal((n_channels, n_noise))
        if n_channels
        else np.zeros((0, 1)),
        noise_stride=noise_stride,
        jump_steps=np.sort(rng.integers(1, n_steps, size=5)).astype(np.int64),
        jump_uniforms=rng.random((5, 2)),
        levels=levels,
        sample_steps=np.unique(np.linspace(0, n_steps, 41).astype(np.int64)),
    )
    return kwargs


@pytest.mark.parametrize("levels,n_channels,with_mod", [
    (2, 2, True),
    (2, 0, True),   # cached-propagator path
    (3, 3, True),
    (2, 1, False),  # static + noise, no carrier
])
def test_kernels_agree(levels, n_channels, with_mod):
    kwargs = _workload(levels=levels, n_channels=n_channels, with_mod=with_mod)
    s_py, src_py, tgt_py = python_kernel.run_trajectory(**kwargs)
    s_cy, src_cy, tgt_cy = cykernel.run_trajectory(**kwargs)
    np.testing.assert_array_equal(src_py, src_cy)
    np.testing.assert_array_equal(tgt_py, tgt_cy)
    np.testing.assert_allclose(s_cy, s_py, atol=5e-9)


def test_sampled_states_are_normalized():
    kwargs = _workload(levels=3, n_channels=2)
    for kernel in (python_kernel, cykernel):
        states, _, _ = kernel.run_trajectory(**kwargs)
        np.testing.assert_allclose(
            np.linalg.norm(states, axis=1), 1.0, atol=1e-9
        )


def test_taylor_propagator_matches_expm():
    rng = np.random.default_rng(3)
    h = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    h = (h + h.conj().T) / 2
    a = -1j * 0.05 * h
    np.testing.assert_allclose(
        python_kernel._taylor_propagator(a), scipy.linalg.expm(a), atol=1e-10
    )


def test_period_cache_paths():
    rng = np.random.default_rng(4)
    h = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    h = (h + h.conj().T) / 2
    m = np.diag([1.0, 1.0, -1.0, -1.0]).astype(complex)
    # static Hamiltonian -> single propagator
    cache = python_kernel.build_period_cache(h, m, 0.0, 123.0, 0.01)
    assert cache.shape == (1, 4, 4)
    np.testing.assert_allclose(cache[0], scipy.linalg.expm(-1j * 0.01 * h), atol=1e-10)
    # zero-frequency modulation folds statically
    cache = python_kernel.build_period_cache(h, m, 2.0, 0.0, 0.01)
    np.testing.assert_allclose(
        cache[0], scipy.linalg.expm(-1j * 0.01 * (h + 2.0 * m)), atol=1e-10
    )
    # integer-step period -> one unitary per step
    omega = 2 * np.pi / (20 * 0.01)
    cache = python_kernel.build_period_cache(h, m, 2.0, omega, 0.01)
    assert cache.shape == (20, 4, 4)
    for u in cache:
        np.testing.assert_allclose(u.conj().T @ u, np.eye(4), atol=1e-10)
    # non-integer period -> no cache
    assert python_kernel.build_period_cache(h, m, 2.0, omega * 1.0003, 0.01) is None


def test_jump_moves_population_and_keeps_norm():
    psi = np.array([0.6, 0.0, 0.0, 0.8], dtype=complex)  # levels 0 and 1 occupied
    out, source, target = python_kernel._apply_jump(psi, 2, u_source=0.9, u_target=0.0)
    # u_source=0.9 picks the heavier level 1 (p=0.64 of 1.0 total)
    assert (source, target) == (1, 0)
    np.testing.assert_allclose(np.linalg.norm(out), 1.0, atol=1e-12)
    # nuclear conditional state survives the electron reset
    np.testing.assert_allclose(out, [0.0, 1.0, 0.0, 0.0], atol=1e-12)


def test_kernel_selection_env_var():
    import subprocess
    import sys

    code = "import cddsim._kernels as k; print(k.KERNEL_NAME)"
    out = subprocess.run(
        [sys.executable, "-c", code], capture_output=True, text=True
    ).stdout.strip()
    assert out == "cython"
    out = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True,
        text=True,
        env={"PATH": "/usr/bin:/bin", "CDDSIM_PURE_PYTHON": "1"},
    ).stdout.strip()
    assert out == "python"
