"""Physical Hamiltonians, drive constructions and decay channels.

Builds the lab-frame (first-rotating-frame) Hamiltonian of an electron spin
(two-level defect or NV triplet) hyperfine-coupled to a spin-1/2 nucleus,
the continuous-drive terms including the three second-drive constructions,
and the electron jump channels. All frequencies in rad/s.
"""

from dataclasses import dataclass, field

import numpy as np

from .operators import dressed_frame, kron, spin_ops

SECOND_DRIVE_METHODS = ("none", "z_modulation", "phase_modulation", "bichromatic")


class ConfigError(ValueError):
    """Inconsistent physical or drive configuration."""


@dataclass(frozen=True)
class SystemSpec:
    """Physical constants of the electron-nucleus pair (rad/s, seconds)."""

    electron_levels: int
    omega_n: float
    g_par: float
    g_perp: float
    delta: float
    t1: float

    def __post_init__(self):
        if self.electron_levels not in (2, 3):
            raise ConfigError(f"electron_levels must be 2 or 3, got {self.electron_levels}")
        for name in ("omega_n", "g_par", "g_perp"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.t1 <= 0:
            raise ConfigError("t1 must be positive")

    @property
    def dim(self):
        return 2 * self.electron_levels


@dataclass(frozen=True)
class DriveSpec:
    """Control-field configuration (rad/s)."""

    omega1: float = 0.0
    omega2: float = 0.0
    method: str = "none"
    delta2: float = 0.0
    delta_omega: float = 0.0

    def __post_init__(self):
        if self.method not in SECOND_DRIVE_METHODS:
            raise ConfigError(f"unknown second-drive method {self.method!r}")
        if self.method != "none" and self.omega2 >= self.omega1:
            raise ConfigError("second drive requires omega2 < omega1")

    @property
    def second_drive_on(self):
        return self.method != "none" and self.omega2 > 0


@dataclass(frozen=True)
class JumpChannel:
    """Electron decay channel sigma_{to,from} (x) identity, with rate in rad/s."""

    op: np.ndarray
    rate: float
    source: int
    target: int


def _electron_nuclear_ops(levels):
    se = spin_ops(levels)
    sn = spin_ops(2)
    eye_e = np.eye(levels, dtype=complex)
    eye_n = np.eye(2, dtype=complex)
    return se, sn, eye_e, eye_n


def build_bare_hamiltonian(sys: SystemSpec):
    """delta*Sz + omega_n*Iz + g_par*Sz Iz + g_perp*Sz Ix on electron (x) nucleus."""
    se, sn, eye_e, eye_n = _electron_nuclear_ops(sys.electron_levels)
    return (
        sys.delta * kron(se["z"], eye_n)
        + sys.omega_n * kron(eye_e, sn["z"])
        + sys.g_par * kron(se["z"], sn["z"])
        + sys.g_perp * kron(se["z"], sn["x"])
    )


def rabi_mismatch_op(sys: SystemSpec):
    """(sigma_{+1,0} + h.c.) (x) identity; the deliberate NV drive asymmetry."""
    if sys.electron_levels != 3:
        raise ConfigError("the Rabi-mismatch term exists only for three levels")
    m = np.zeros((3, 3), dtype=complex)
    m[0, 1] = m[1, 0] = 1.0
    return kron(m, np.eye(2))


def lab_frame_parts(sys: SystemSpec, drive: DriveSpec):
    """Static/modulated split of the full lab-frame Hamiltonian.

    Returns (h_static, mod_op, mod_amplitude, mod_frequency): the total
    Hamiltonian is h_static + mod_amplitude*cos(mod_frequency*t)*mod_op.
    A dressed-state detuning delta2 is realized as a drift of the first Rabi
    frequency (omega1 + delta2 on the gap) while the second drive stays
    referenced to the nominal omega1.
    """
    if drive.method != "none" and drive.omega2 == 0:
        raise ConfigError(f"method {drive.method!r} needs a nonzero omega2")
    se, sn, eye_e, eye_n = _electron_nuclear_ops(sys.electron_levels)
    h = build_bare_hamiltonian(sys)
    if drive.omega1 != 0 or drive.delta2 != 0:
        h = h + (drive.omega1 + drive.delta2) * kron(se["x"], eye_n)
    if sys.electron_levels == 3 and drive.delta_omega != 0:
        h = h + drive.delta_omega * rabi_mismatch_op(sys)
    if drive.second_drive_on:
        axis = "y" if drive.method == "bichromatic" else "z"
        mod_op = kron(se[axis], eye_n)
        return h, mod_op, 2 * drive.omega2, drive.omega1
    return h, None, 0.0, 0.0


def build_drive_terms(sys: SystemSpec, drive: DriveSpec, t: float):
    """Drive part of the lab Hamiltonian at time t (everything except the bare H)."""
    h_static, mod_op, amp, freq = lab_frame_parts(sys, drive)
    h = h_static - build_bare_hamiltonian(sys)
    if mod_op is not None:
        h = h + amp * np.cos(freq * t) * mod_op
    return h


def jump_channels(sys: SystemSpec, rate: float | None = None):
    """All ordered electron level pairs alpha != beta with one shared rate.

    The per-channel rate defaults to 1/(2*T1), which makes the mean dwell
    time of the two-level electron (and the fitted unprotected nuclear
    dephasing envelope) come out at 2*T1.
    """
    levels = sys.electron_levels
    gamma = rate if rate is not None else 1.0 / (2.0 * sys.t1)
    eye_n = np.eye(2, dtype=complex)
    channels = []
    for target in range(levels):
        for source in range(levels):
            if source == target:
                continue
            op = np.zeros((levels, levels), dtype=complex)
            op[target, source] = 1.0
            channels.append(
                JumpChannel(op=kron(op, eye_n), rate=gamma, source=source, target=target)
            )
    return channels


@dataclass(frozen=True)
class RotatingTerm:
    """One piece of the interaction-picture Hamiltonian: op * exp(i freq t)."""

    op: np.ndarray
    freq: float
    label: str = field(default="", compare=False)


def to_dressed_interaction(sys: SystemSpec, drive: DriveSpec, *, counter_rotating_scale=1.0):
    """Interaction-picture Hamiltonian in the dressed frame as rotating terms.

    The frame rotates with omega1*F_z + omega_n*I_z after the dressed basis
    change; the returned list of RotatingTerm reassembles H_I(t) exactly as
    sum(op * exp(i freq t)). ``counter_rotating_scale`` rescales the 2*omega1
    second-drive terms (used by the cross-validation harness).
    """
    if drive.omega1 <= 0:
        raise ConfigError("dressed interaction picture needs omega1 > 0")
    levels = sys.electron_levels
    frame = dressed_frame(levels)
    f = frame.f_ops
    sn = spin_ops(2)
    eye_e = np.eye(levels, dtype=complex)
    eye_n = np.eye(2, dtype=complex)
    f_plus = f["x"] + 1j * f["y"]
    f_minus = f_plus.conj().T
    i_plus = sn["x"] + 1j * sn["y"]
    i_minus = i_plus.conj().T
    omega1, omega_n = drive.omega1, sys.omega_n

    terms = []

    def add_pair(op, freq, label):
        terms.append(RotatingTerm(op=op, freq=freq, label=label))
        terms.append(RotatingTerm(op=op.conj().T, freq=-freq, label=label + "_hc"))

    if sys.delta != 0:
        add_pair(-(sys.delta / 2) * kron(f_plus, eye_n), omega1, "detuning")
    if sys.g_par != 0:
        add_pair(-(sys.g_par / 2) * kron(f_plus, sn["z"]), omega1, "hf_parallel")
    if sys.g_perp != 0:
        add_pair(-(sys.g_perp / 4) * kron(f_plus, i_plus), omega1 + omega_n, "hf_perp_up")
        add_pair(-(sys.g_perp / 4) * kron(f_plus, i_minus), omega1 - omega_n, "hf_perp_dn")
    if drive.delta2 != 0:
        terms.append(
            RotatingTerm(op=drive.delta2 * kron(f["z"], eye_n), freq=0.0, label="gap_detuning")
        )
    if levels == 3 and drive.delta_omega != 0:
        dw = drive.delta_omega
        terms.append(
            RotatingTerm(op=(dw / np.sqrt(2)) * kron(f["z"], eye_n), freq=0.0, label="mismatch_static")
        )
        add_pair(-(dw / (2 * np.sqrt(2))) * kron(frame.ftilde_plus, eye_n), omega1, "mismatch")
    if drive.second_drive_on:
        w2 = drive.omega2
        cr = counter_rotating_scale
        if drive.method == "bichromatic":
            terms.append(RotatingTerm(op=w2 * kron(f["y"], eye_n), freq=0.0, label="gap2"))
            add_pair(cr * (-0.5j * w2) * kron(f_plus, eye_n), 2 * omega1, "gap2_cr")
        else:
            terms.append(RotatingTerm(op=-w2 * kron(f["x"], eye_n), freq=0.0, label="gap2"))
            add_pair(cr * (-0.5 * w2) * kron(f_plus, eye_n), 2 * omega1, "gap2_cr")
    return terms


def interaction_hamiltonian(terms, t):
    """Reassemble H_I(t) from the rotating-term list."""
    h = np.zeros_like(terms[0].op)
    for term in terms:
        h = h + term.op * np.exp(1j * term.freq * t)
    return h
