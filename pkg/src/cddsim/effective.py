"""Analytic effective-Hamiltonian terms and their numeric cross-validation.

Second-order AC Stark shifts and the residual electron-nucleus coupling, the
concatenated-drive residual, the third-order coupling left by the second
drive's counter-rotating component, the three-level quadratic coupling and
the drive-asymmetry value that cancels it. ``verify_against_magnus`` checks
the closed forms against direct quadrature of the rotating-term Hamiltonian.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .model import ConfigError, DriveSpec, SystemSpec, to_dressed_interaction
from .operators import (
    dressed_frame,
    kron,
    magnus_third_order_numeric,
    second_order_average,
    spin_ops,
)


class ResonanceError(ValueError):
    """Vanishing perturbative denominator (drive resonant with the Larmor
    frequency)."""


class ApplicabilityError(ValueError):
    """Operation requested for a system it is not defined on."""


#: factor by which the drive must exceed every bare scale for the
#: perturbative formulas to carry a clean validity flag
VALIDITY_RATIO = 5.0


@dataclass(frozen=True)
class EffectiveTerms:
    """All analytic coefficients (rad/s) with a perturbative-validity flag."""

    ac_electron: float
    ac_nuclear: float
    g_eff: float
    g_eff2: float
    g_eff3: float
    nv_quadratic: float | None
    valid: bool


def _validity(sys: SystemSpec, drive: DriveSpec):
    scales = (sys.omega_n, abs(sys.delta), sys.g_par, sys.g_perp)
    ok = drive.omega1 >= VALIDITY_RATIO * max(scales)
    if drive.second_drive_on:
        g_eff = sys.g_par * sys.delta / drive.omega1
        ok = ok and drive.omega2 >= VALIDITY_RATIO * abs(g_eff)
    return ok


def second_order_effective(sys: SystemSpec, drive: DriveSpec):
    """(ac_electron, ac_nuclear, g_eff): the static second-order terms.

    ac_electron multiplies F_z, ac_nuclear multiplies I_z, and g_eff is the
    residual F_z I_z coupling g_par*delta/omega1.
    """
    omega = drive.omega1
    if omega == sys.omega_n:
        raise ResonanceError("drive resonant with the nuclear Larmor frequency")
    dsum = 1.0 / (omega - sys.omega_n) + 1.0 / (omega + sys.omega_n)
    ddiff = 1.0 / (omega - sys.omega_n) - 1.0 / (omega + sys.omega_n)
    ac_electron = (sys.g_par**2 + sys.delta**2) / (2.0 * omega) + sys.g_perp**2 / 16.0 * dsum
    ac_nuclear = sys.g_perp**2 / 16.0 * ddiff
    g_eff = sys.g_par * sys.delta / omega
    return ac_electron, ac_nuclear, g_eff


def concatenated_effective(sys: SystemSpec, drive: DriveSpec):
    """Residual coupling under the second gap: g_eff * delta2 / omega2.

    The dephasing axis is F_y for the bichromatic construction and F_x for
    the modulation constructions; both enter the coherence budget identically.
    """
    if drive.method == "none" or drive.omega2 == 0:
        raise ConfigError("the concatenated residual requires an active second drive")
    _, _, g_eff = second_order_effective(sys, drive)
    return g_eff * drive.delta2 / drive.omega2


def third_order_effective(sys: SystemSpec, drive: DriveSpec):
    """Third-order F_x I_z coupling g_par*omega2*delta/(2*omega1^2)."""
    if not drive.second_drive_on:
        raise ConfigError("the third-order coupling requires an active second drive")
    return sys.g_par * drive.omega2 * sys.delta / (2.0 * drive.omega1**2)


def nv_quadratic_coupling(sys: SystemSpec, drive: DriveSpec):
    """Coefficient of the three-level F_z^2 I_z coupling.

    -[(g_perp^2/8)(1/(omega1-omega_n) - 1/(omega1+omega_n))
      - 3*g_par*delta_omega/(2*sqrt(2)*omega1)].
    """
    if sys.electron_levels != 3:
        raise ApplicabilityError("the quadratic coupling exists only for three levels")
    omega = drive.omega1
    if omega == sys.omega_n:
        raise ResonanceError("drive resonant with the nuclear Larmor frequency")
    ddiff = 1.0 / (omega - sys.omega_n) - 1.0 / (omega + sys.omega_n)
    return -(
        sys.g_perp**2 / 8.0 * ddiff
        - 3.0 * sys.g_par * drive.delta_omega / (2.0 * math.sqrt(2.0) * omega)
    )


def tune_delta_omega(sys: SystemSpec, drive: DriveSpec):
    """The drive asymmetry cancelling the quadratic coupling exactly."""
    if sys.electron_levels != 3:
        raise ApplicabilityError("tuning applies to the three-level system only")
    if sys.g_par == 0:
        raise ConfigError("no asymmetry can cancel the quadratic coupling when g_par=0")
    omega = drive.omega1
    ddiff = 1.0 / (omega - sys.omega_n) - 1.0 / (omega + sys.omega_n)
    return (2.0 * math.sqrt(2.0) * omega / (3.0 * sys.g_par)) * (sys.g_perp**2 / 8.0) * ddiff


def effective_terms(sys: SystemSpec, drive: DriveSpec):
    """All coefficients in one record (zero where not applicable)."""
    ac_e, ac_n, g_eff = second_order_effective(sys, drive)
    g2 = concatenated_effective(sys, drive) if drive.second_drive_on else 0.0
    g3 = third_order_effective(sys, drive) if drive.second_drive_on else 0.0
    quad = nv_quadratic_coupling(sys, drive) if sys.electron_levels == 3 else None
    return EffectiveTerms(ac_e, ac_n, g_eff, g2, g3, quad, _validity(sys, drive))


def _target_operator(which, sys: SystemSpec):
    frame = dressed_frame(sys.electron_levels)
    eye_n = np.eye(2, dtype=complex)
    iz = spin_ops(2)["z"]
    if which == "ac_electron":
        return kron(frame.f_ops["z"], eye_n)
    if which == "ac_nuclear":
        return kron(np.eye(sys.electron_levels, dtype=complex), iz)
    if which == "g_eff":
        return kron(frame.f_ops["z"], iz)
    if which == "g_eff3":
        return kron(frame.f_ops["x"], iz)
    raise ValueError(f"unknown term {which!r}")


def _float_gcd(values, rtol=1e-9):
    """Approximate positive gcd of floats by Euclid with tolerance."""
    tol = rtol * max(values)
    g = values[0]
    for v in values[1:]:
        a, b = max(g, v), min(g, v)
        while b > tol:
            a, b = b, a % b
        g = a
    return g


def _quadrature_window(sys: SystemSpec, drive: DriveSpec, freqs):
    """Common period of all rotation frequencies and a resolving step count."""
    nonzero = sorted({abs(f) for f in freqs if abs(f) > 1e-9})
    max_freq = nonzero[-1]
    base = _float_gcd(nonzero)
    if base < max_freq / 1e4:  # no practical common period; settle for the slowest term
        base = nonzero[0]
    t = 2.0 * np.pi / base
    steps = 2 * int(np.ceil(20 * max_freq * t / (2.0 * np.pi)))
    return t, steps, max_freq


def verify_against_magnus(sys: SystemSpec, drive: DriveSpec, which):
    """Relative error of the analytic coefficient vs direct quadrature.

    Second-order terms are validated on the single-drive rotating Hamiltonian
    (the regime where the closed forms hold; the second drive's static gap
    term would otherwise mix into the extraction). The third-order term uses
    the rotating interaction terms plus the second drive's counter-rotating
    components, the combination that generates it. If the analytic value is
    zero, returns (absolute_error, flagged=True) instead.
    """
    if which not in ("ac_electron", "ac_nuclear", "g_eff", "g_eff3"):
        raise ValueError(f"unknown term {which!r}")
    if which == "g_eff3":
        terms = [t for t in to_dressed_interaction(sys, drive) if t.freq != 0.0]
        analytic = third_order_effective(sys, drive)
    else:
        terms = to_dressed_interaction(sys, replace(drive, method="none", omega2=0.0))
        ac_e, ac_n, g_eff = second_order_effective(sys, drive)
        analytic = {"ac_electron": ac_e, "ac_nuclear": ac_n, "g_eff": g_eff}[which]

    ops = np.stack([t.op for t in terms])
    freqs = np.array([t.freq for t in terms])

    def h(t):
        return np.tensordot(np.exp(1j * freqs * t), ops, axes=1)

    t_win, steps, max_freq = _quadrature_window(sys, drive, freqs)
    if which == "g_eff3":
        h_num = magnus_third_order_numeric(h, t_win, steps, max_frequency=max_freq)
    else:
        h_num = second_order_average(h, t_win, steps, max_frequency=max_freq)

    target = _target_operator(which, sys)
    numeric = float(
        np.real(np.trace(target.conj().T @ h_num) / np.trace(target.conj().T @ target))
    )
    if analytic == 0.0:
        return abs(numeric), True
    return abs(numeric - analytic) / abs(analytic), False
