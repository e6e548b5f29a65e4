"""Stochastic and deterministic evolution of the electron-nucleus pair.

The workhorse is quantum-jump Monte Carlo: between jumps the state evolves
unitarily (the symmetric flip channels make the total jump rate
state-independent), jump times are pre-sampled from the exponential
distribution, and classical OU noise rides on the Hamiltonian. A dense
Lindblad integrator provides the deterministic cross-check for noise-free
runs. Nuclear observables are reported in the nuclear rotating frame by
default so hyperfine-induced dynamics are visible on top of the Larmor
precession.
"""

from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from . import _kernels
from .model import DriveSpec, SystemSpec, jump_channels, lab_frame_parts
from .noise import NoiseSpec, noise_operators, ou_trajectory, substream

#: samples per period of the fastest resolved frequency
_SAMPLES_PER_PERIOD = 20
#: integrator steps per OU correlation time
_STEPS_PER_TAU = 50


class StepSizeError(ValueError):
    """Integrator step too large for the requested dynamics."""

    def __init__(self, dt, bound):
        self.bound = bound
        super().__init__(f"dt={dt:.3e} s exceeds the resolution bound {bound:.3e} s")


@dataclass(frozen=True)
class TrajectoryResult:
    """One stochastic realization, sampled on a fixed time grid."""

    times: np.ndarray
    pop_plus: np.ndarray
    pop_minus: np.ndarray
    coherence_x: np.ndarray
    jump_log: list = field(default_factory=list)


@dataclass(frozen=True)
class EnsembleResult:
    """Pointwise mean and standard error over a trajectory ensemble."""

    times: np.ndarray
    mean_pop_plus: np.ndarray
    se_pop_plus: np.ndarray
    mean_coherence_x: np.ndarray
    se_coherence_x: np.ndarray
    n_trajectories: int


def max_frequency(sys: SystemSpec, drive: DriveSpec):
    """Largest angular frequency the integrator must resolve (rad/s).

    With the drive on this is twice the first Rabi frequency (the
    counter-rotating component); without it, the largest bare scale.
    """
    if drive.omega1 > 0:
        return 2.0 * (drive.omega1 + abs(drive.delta2))
    return max(sys.omega_n, abs(sys.delta), sys.g_par, sys.g_perp)


def dt_bound(sys: SystemSpec, drive: DriveSpec, noise: NoiseSpec | None = None):
    """Resolution bound min(2*pi/(20*Omega_max), tau_min/50)."""
    omega_max = max_frequency(sys, drive)
    bound = np.inf if omega_max == 0 else 2.0 * np.pi / (_SAMPLES_PER_PERIOD * omega_max)
    if noise is not None:
        for _, p in noise.active_channels():
            bound = min(bound, p.tau / _STEPS_PER_TAU)
    return bound


def auto_dt(sys: SystemSpec, drive: DriveSpec, noise: NoiseSpec | None, t_final):
    """Automatic step: the resolution bound, snapped so the drive-modulation
    period is an integer number of steps (enables propagator caching)."""
    bound = dt_bound(sys, drive, noise)
    if not np.isfinite(bound):
        bound = t_final / 1000.0
    if drive.second_drive_on and drive.omega1 > 0:
        period = 2.0 * np.pi / drive.omega1
        return period / int(np.ceil(period / bound))
    return bound


def _initial_state(sys: SystemSpec, seed, trajectory):
    """Nucleus in |+>_I, electron in a uniformly random level (mixed state
    realized per trajectory)."""
    level = int(substream(seed, trajectory, "init").integers(sys.electron_levels))
    psi = np.zeros(sys.dim, dtype=complex)
    psi[2 * level : 2 * level + 2] = 1.0 / np.sqrt(2.0)
    return psi


def _sample_jumps(sys: SystemSpec, t_final, dt, n_steps, seed, trajectory, rate):
    """Pre-sampled jump boundaries: exponential waiting times at the
    state-independent total rate Gamma*(levels-1)."""
    gamma = rate if rate is not None else 1.0 / (2.0 * sys.t1)
    total_rate = gamma * (sys.electron_levels - 1)
    rng = substream(seed, trajectory, "jumps")
    times = []
    t = 0.0
    while total_rate > 0:
        t += rng.exponential(1.0 / total_rate)
        if t >= t_final:
            break
        times.append(t)
    steps = np.clip(np.round(np.asarray(times) / dt).astype(np.int64), 1, n_steps)
    uniforms = rng.random((len(times), 2))
    return steps, uniforms


def nuclear_observables(state, larmor_phase=0.0):
    """(pop_plus, pop_minus, coherence_x) of the nuclear reduced state.

    |+/->_I are the Ix eigenstates; ``larmor_phase`` = omega_n * t rotates
    the nucleus into its Larmor frame before projecting (pass 0 for the lab
    frame). Accepts a joint state vector or density matrix.
    """
    state = np.asarray(state, dtype=complex)
    half = np.exp(0.5j * larmor_phase)
    if state.ndim == 1:
        blocks = state.reshape(-1, 2) * np.array([half, half.conjugate()])
        up, dn = blocks[:, 0], blocks[:, 1]
        pop_plus = 0.5 * np.sum(np.abs(up + dn) ** 2)
        pop_minus = 0.5 * np.sum(np.abs(up - dn) ** 2)
        coherence = 2.0 * np.sum((up.conjugate() * dn).real)
    else:
        d = state.shape[0]
        rot = np.kron(np.eye(d // 2), np.diag([half, half.conjugate()]))
        rho = rot @ state @ rot.conjugate().T
        rho_n = rho.reshape(d // 2, 2, d // 2, 2).trace(axis1=0, axis2=2)
        plus = np.array([1.0, 1.0]) / np.sqrt(2.0)
        minus = np.array([1.0, -1.0]) / np.sqrt(2.0)
        pop_plus = float((plus @ rho_n @ plus).real)
        pop_minus = float((minus @ rho_n @ minus).real)
        coherence = float(2.0 * rho_n[0, 1].real)
    return pop_plus, pop_minus, coherence


def _observable_series(states, times, sys, rotating_frame):
    phases = sys.omega_n * times if rotating_frame else np.zeros_like(times)
    obs = np.array(
        [nuclear_observables(s, larmor_phase=p) for s, p in zip(states, phases)]
    )
    return obs[:, 0], obs[:, 1], obs[:, 2]


def evolve_trajectory(
    sys: SystemSpec,
    drive: DriveSpec,
    noise: NoiseSpec | None,
    init,
    t_final,
    dt=None,
    seed=0,
    trajectory=0,
    n_samples=801,
    rate=None,
    rotating_frame=True,
):
    """One quantum-jump trajectory; deterministic given (inputs, seed, index).

    ``init=None`` draws the per-trajectory initial state (nucleus |+>_I,
    random electron level). Returns a TrajectoryResult sampled on
    ``n_samples`` grid points including both endpoints.
    """
    if t_final <= 0:
        raise ValueError("t_final must be positive")
    noise = noise if noise is not None else NoiseSpec()
    bound = dt_bound(sys, drive, noise)
    if dt is None:
        dt = auto_dt(sys, drive, noise, t_final)
    elif dt > bound * (1 + 1e-12):
        raise StepSizeError(dt, bound)
    n_steps = int(np.ceil(t_final / dt))

    if init is None:
        psi0 = _initial_state(sys, seed, trajectory)
    else:
        psi0 = np.asarray(init, dtype=complex).ravel()
        if abs(np.linalg.norm(psi0) - 1.0) > 1e-9:
            raise ValueError("initial state must be normalized")

    h_static, mod_op, mod_amp, mod_freq = lab_frame_parts(sys, drive)
    if mod_op is None:
        mod_op = np.zeros_like(h_static)
        mod_amp, mod_freq = 0.0, 0.0

    names, noise_static, noise_mod = noise_operators(noise, sys, drive)
    if names:
        taus = [getattr(noise, n).tau for n in names]
        stride = max(1, int(np.floor(min(taus) / _STEPS_PER_TAU / dt)))
        n_noise = int(np.ceil(n_steps / stride))
        values = np.stack(
            [
                ou_trajectory(getattr(noise, n), stride * dt, n_noise, seed, trajectory, n)
                for n in names
            ]
        )
    else:
        stride, values = 1, np.zeros((0, 1))

    jump_steps, jump_uniforms = _sample_jumps(sys, t_final, dt, n_steps, seed, trajectory, rate)
    sample_steps = np.unique(np.round(np.linspace(0, n_steps, n_samples)).astype(np.int64))

    states, sources, targets = _kernels.run_trajectory(
        psi0, dt, n_steps, h_static, mod_op, mod_amp, mod_freq,
        noise_static, noise_mod, values, stride,
        jump_steps, jump_uniforms, sys.electron_levels, sample_steps,
    )

    times = sample_steps * dt
    pop_plus, pop_minus, coherence = _observable_series(states, times, sys, rotating_frame)
    log = [(s * dt, int(a), int(b)) for s, a, b in zip(jump_steps, sources, targets)]
    return TrajectoryResult(times, pop_plus, pop_minus, coherence, log)


def ensemble_average(results):
    """Pointwise mean and standard error over a list of TrajectoryResult."""
    if not results:
        raise ValueError("need at least one trajectory")
    times = results[0].times
    for r in results[1:]:
        if r.times.shape != times.shape or not np.allclose(r.times, times):
            raise ValueError("trajectories must share one time grid")
    n = len(results)
    pops = np.stack([r.pop_plus for r in results])
    cohs = np.stack([r.coherence_x for r in results])
    se = lambda a: (
        a.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros(a.shape[1])
    )
    return EnsembleResult(times, pops.mean(axis=0), se(pops), cohs.mean(axis=0), se(cohs), n)


def simulate_ensemble(
    sys,
    drive,
    noise,
    t_final,
    n_trajectories,
    seed=0,
    dt=None,
    n_samples=801,
    rate=None,
    init=None,
    n_jobs=1,
    rotating_frame=True,
):
    """Run ``n_trajectories`` independent trajectories and average them.

    Trajectories own their RNG substreams keyed by index, so the result is
    independent of scheduling; the merge is ordered by index.
    """
    run = delayed(evolve_trajectory)
    results = Parallel(n_jobs=n_jobs)(
        run(
            sys, drive, noise, init, t_final,
            dt=dt, seed=seed, trajectory=k, n_samples=n_samples,
            rate=rate, rotating_frame=rotating_frame,
        )
        for k in range(n_trajectories)
    )
    return ensemble_average(results)


def evolve_lindblad(
    sys: SystemSpec,
    drive: DriveSpec,
    init_density,
    t_final,
    dt=None,
    noise: NoiseSpec | None = None,
    n_samples=801,
    rate=None,
    rotating_frame=True,
):
    """Deterministic master-equation propagation (classic RK4).

    Only valid without classical noise channels (stochastic trajectories are
    required for those); preserves trace to 1e-8 and Hermiticity to 1e-9
    over the run.
    """
    if noise is not None and noise.any_active:
        raise ValueError("classical noise requires trajectory unraveling")
    rho = np.asarray(init_density, dtype=complex)
    if abs(np.trace(rho).real - 1.0) > 1e-9:
        raise ValueError("initial density matrix must have unit trace")
    w = np.linalg.eigvalsh(rho)
    if w.min() < -1e-9:
        raise ValueError("initial density matrix must be positive semidefinite")

    if dt is None:
        dt = auto_dt(sys, drive, NoiseSpec(), t_final)
    elif dt > dt_bound(sys, drive) * (1 + 1e-12):
        raise StepSizeError(dt, dt_bound(sys, drive))
    n_steps = int(np.ceil(t_final / dt))

    h_static, mod_op, mod_amp, mod_freq = lab_frame_parts(sys, drive)
    channels = jump_channels(sys, rate=rate)
    ops = [c.op for c in channels]
    rates = [c.rate for c in channels]
    anticomm = sum(g * (c.conj().T @ c) for g, c in zip(rates, ops))

    def rhs(rho, t):
        h = h_static
        if mod_op is not None:
            h = h + mod_amp * np.cos(mod_freq * t) * mod_op
        out = -1j * (h @ rho - rho @ h)
        for g, c in zip(rates, ops):
            out = out + g * (c @ rho @ c.conj().T)
        return out - 0.5 * (anticomm @ rho + rho @ anticomm)

    sample_steps = np.unique(np.round(np.linspace(0, n_steps, n_samples)).astype(np.int64))
    states = np.empty((len(sample_steps), rho.shape[0], rho.shape[1]), dtype=complex)
    si = 0
    for k in range(n_steps + 1):
        if si < len(sample_steps) and sample_steps[si] == k:
            states[si] = rho
            si += 1
        if k == n_steps:
            break
        t = k * dt
        k1 = rhs(rho, t)
        k2 = rhs(rho + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = rhs(rho + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = rhs(rho + dt * k3, t + dt)
        rho = rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

    times = sample_steps * dt
    pop_plus, pop_minus, coherence = _observable_series(states, times, sys, rotating_frame)
    return TrajectoryResult(times, pop_plus, pop_minus, coherence, [])
