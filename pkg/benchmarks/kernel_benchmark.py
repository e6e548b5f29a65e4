"""Compare the compiled and pure-Python trajectory kernels.

Times both kernels on the two hot paths (cached noise-free propagators and
the noisy Taylor stepping path), verifies they produce the same states, and
prints per-step costs plus the speedup.

Run from the repository root:

    python3 benchmarks/kernel_benchmark.py [--steps N]
"""

import argparse
import time

import numpy as np

from cddsim._kernels import _cykernel, python_kernel


def _workload(n_steps, n_channels, seed=0):
    rng = np.random.default_rng(seed)
    d = 4

    def herm(scale):
        a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        return scale * (a + a.conj().T) / 2

    dt = 1e-3
    mod_freq = 2 * np.pi / (40 * dt)  # integer-step period: cacheable
    psi0 = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    psi0 /= np.linalg.norm(psi0)
    stride = 50
    n_noise = int(np.ceil(n_steps / stride))
    return dict(
        psi0=psi0,
        dt=dt,
        n_steps=n_steps,
        h_static=herm(20.0),
        mod_op=herm(10.0),
        mod_amp=3.0,
        mod_freq=mod_freq,
        noise_static=np.stack([herm(1.0) for _ in range(n_channels)])
        if n_channels
        else np.zeros((0, d, d), complex),
        noise_mod=np.stack([herm(1.0) for _ in range(n_channels)])
        if n_channels
        else np.zeros((0, d, d), complex),
        noise_values=rng.standard_normal((n_channels, n_noise))
        if n_channels
        else np.zeros((0, 1)),
        noise_stride=stride,
        jump_steps=np.sort(rng.integers(1, n_steps, size=10)).astype(np.int64),
        jump_uniforms=rng.random((10, 2)),
        levels=2,
        sample_steps=np.unique(np.linspace(0, n_steps, 21).astype(np.int64)),
    )


def _time(kernel, kwargs, repeats=3):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = kernel.run_trajectory(**kwargs)
        best = min(best, time.perf_counter() - t0)
    return best, out[0]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=200_000,
                        help="integration steps per run (default 200000)")
    args = parser.parse_args()

    print(f"{args.steps} steps per trajectory, 4-dimensional state\n")
    print(f"{'path':<22}{'python':>12}{'cython':>12}{'speedup':>10}{'agreement':>12}")
    for label, n_channels in (("cached (noise-free)", 0), ("noisy (Taylor)", 3)):
        kwargs = _workload(args.steps, n_channels)
        t_py, states_py = _time(python_kernel, kwargs)
        t_cy, states_cy = _time(_cykernel, kwargs)
        diff = float(np.abs(states_py - states_cy).max())
        per_py = t_py / args.steps * 1e9
        per_cy = t_cy / args.steps * 1e9
        print(
            f"{label:<22}{per_py:>9.0f} ns{per_cy:>9.0f} ns"
            f"{t_py / t_cy:>9.1f}x{diff:>12.1e}"
        )


if __name__ == "__main__":
    main()
