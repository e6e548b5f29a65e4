"""Ornstein-Uhlenbeck classical noise channels and their Hamiltonian wiring.

Each channel (magnetic field on Sz, Rabi amplitude on the first drive,
second-drive amplitude, NV drive-asymmetry amplitude) is a stationary OU
process evolved with the exact discrete update, reproducible per
(seed, trajectory, channel) through counter-based Philox substreams.
"""

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .model import ConfigError, DriveSpec, SystemSpec, rabi_mismatch_op
from .operators import kron, spin_ops

# Fixed substream identifiers so a trajectory's draws never depend on which
# other channels happen to be enabled.
CHANNEL_IDS = {"jumps": 0, "magnetic": 1, "rabi1": 2, "rabi2": 3, "rabi_mismatch": 4, "init": 5}


@dataclass(frozen=True)
class OUParams:
    """Stationary OU process: correlation time tau and diffusion constant.

    The stationary variance is diffusion*tau/2; ``from_amplitude`` builds the
    parameters from the RMS amplitude instead (diffusion = 2*amplitude^2/tau).
    """

    tau: float
    diffusion: float

    def __post_init__(self):
        if self.tau <= 0:
            raise ConfigError("OU correlation time must be positive")
        if self.diffusion < 0:
            raise ConfigError("OU diffusion constant must be >= 0")

    @classmethod
    def from_amplitude(cls, amplitude, tau):
        return cls(tau=tau, diffusion=2.0 * amplitude**2 / tau)

    @property
    def amplitude(self):
        """RMS stationary amplitude sqrt(C*tau/2) in rad/s."""
        return np.sqrt(self.diffusion * self.tau / 2.0)


@dataclass(frozen=True)
class NoiseSpec:
    """Which classical channels are active; None means the channel is off.

    Rabi-channel amplitudes are stored absolute (rad/s); use
    ``from_relative`` helpers at the config boundary. ``nv_correlated``
    asserts that both three-level drive transitions share one amplitude
    noise process; uncorrelated drives are rejected for protected NV runs.
    """

    magnetic: OUParams | None = None
    rabi1: OUParams | None = None
    rabi2: OUParams | None = None
    rabi_mismatch: OUParams | None = None
    nv_correlated: bool = True

    @property
    def any_active(self):
        return any(
            p is not None and p.diffusion > 0
            for p in (self.magnetic, self.rabi1, self.rabi2, self.rabi_mismatch)
        )

    def active_channels(self):
        """Ordered (name, OUParams) pairs for the enabled channels."""
        out = []
        for name in ("magnetic", "rabi1", "rabi2", "rabi_mismatch"):
            p = getattr(self, name)
            if p is not None and p.diffusion > 0:
                out.append((name, p))
        return out


def substream(seed, trajectory, channel):
    """Deterministic RNG for one (seed, trajectory, channel) triple.

    Counter-based (Philox) so draws are reproducible independently of the
    order in which trajectories or channels are generated.
    """
    cid = CHANNEL_IDS[channel] if isinstance(channel, str) else int(channel)
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence((int(seed), int(trajectory), cid)))
    )


def ou_step(x, dt, p: OUParams, n):
    """One exact OU update: x*e^{-dt/tau} + n*sqrt((C*tau/2)(1-e^{-2dt/tau}))."""
    if dt < 0:
        raise ValueError("dt must be >= 0")
    decay = np.exp(-dt / p.tau)
    return x * decay + n * np.sqrt(p.diffusion * p.tau / 2.0 * (1.0 - decay**2))


def ou_trajectory(p: OUParams, dt, n_steps, seed, trajectory=0, channel="magnetic"):
    """n_steps OU samples; x0 drawn from the stationary distribution.

    Deterministic given (seed, trajectory, channel). A zero-diffusion
    process returns all zeros.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if p.diffusion == 0:
        return np.zeros(n_steps)
    rng = substream(seed, trajectory, channel)
    draws = rng.standard_normal(n_steps)
    sigma = p.amplitude
    decay = np.exp(-dt / p.tau)
    kick = sigma * np.sqrt(1.0 - decay**2)
    # x_k = decay*x_{k-1} + kick*n_k is a first-order IIR filter on the draws
    inputs = kick * draws
    inputs[0] = sigma * draws[0]
    return lfilter([1.0], [1.0, -decay], inputs)


def noise_operators(spec: NoiseSpec, sys: SystemSpec, drive: DriveSpec):
    """Per-channel Hamiltonian shapes for the active channels.

    Returns (names, static_ops, mod_ops): channel c contributes
    x_c(t) * (static_ops[c] + cos(mod_freq*t) * mod_ops[c]) to the lab-frame
    Hamiltonian, where x_c is the OU sample in rad/s (Rabi channels store
    absolute amplitudes). mod_freq is the first drive frequency, shared with
    the deterministic second-drive modulation.
    """
    if (
        sys.electron_levels == 3
        and drive.second_drive_on
        and spec.rabi1 is not None
        and not spec.nv_correlated
    ):
        raise ConfigError(
            "uncorrelated three-level drive noise acts as a large random drive "
            "asymmetry, which can not be refocused continuously"
        )
    se = spin_ops(sys.electron_levels)
    eye_n = np.eye(2, dtype=complex)
    dim = sys.dim
    zero = np.zeros((dim, dim), dtype=complex)
    names, static_ops, mod_ops = [], [], []
    for name, _ in spec.active_channels():
        if name == "magnetic":
            static, mod = kron(se["z"], eye_n), zero
        elif name == "rabi1":
            static, mod = kron(se["x"], eye_n), zero
        elif name == "rabi2":
            if not drive.second_drive_on:
                continue
            axis = "y" if drive.method == "bichromatic" else "z"
            static, mod = zero, 2.0 * kron(se[axis], eye_n)
        elif name == "rabi_mismatch":
            if sys.electron_levels != 3:
                continue
            static, mod = rabi_mismatch_op(sys), zero
        names.append(name)
        static_ops.append(static)
        mod_ops.append(mod)
    if names:
        return names, np.stack(static_ops), np.stack(mod_ops)
    return [], np.zeros((0, dim, dim), complex), np.zeros((0, dim, dim), complex)


def wire_noise(spec: NoiseSpec, sys: SystemSpec, drive: DriveSpec):
    """Callable mapping current OU samples to the lab-frame perturbation.

    ``perturbation(samples, t)`` expects samples ordered as the names
    returned alongside it; the second-drive channel is modulated with the
    same cos(omega1*t) carrier as the deterministic second drive.
    """
    names, static_ops, mod_ops = noise_operators(spec, sys, drive)

    def perturbation(samples, t=0.0):
        h = np.zeros((sys.dim, sys.dim), dtype=complex)
        carrier = np.cos(drive.omega1 * t)
        for x, s_op, m_op in zip(samples, static_ops, mod_ops):
            h = h + x * (s_op + carrier * m_op)
        return h

    return names, perturbation
