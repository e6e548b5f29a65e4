"""Random-walk dephasing budget and decay-curve fitting.

Each dephasing channel accumulates a phase deviation delta_phi per step
(electron dwell time for jump-driven channels, correlation time for OU
channels); the channel coherence time is 2*step/delta_phi^2 and the total is
the harmonic combination. Channels with delta_phi >= 1 mean the protection
is broken: the coherence then collapses after about two steps, so they carry
t2 = 2*step and a ``protected=False`` flag. Three-level systems double every
noise-channel phase.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit
from scipy.signal import hilbert

from .dynamics import EnsembleResult
from .effective import concatenated_effective, second_order_effective, third_order_effective
from .model import DriveSpec, SystemSpec
from .noise import NoiseSpec


class EmptyBudgetError(ValueError):
    """No dephasing channels applicable to the configuration."""


class FitError(RuntimeError):
    """Decay fit failed to converge or found no decay."""


@dataclass(frozen=True)
class BudgetChannel:
    """One dephasing channel of the random-walk model."""

    name: str
    step_time: float
    delta_phi: float
    t2: float
    protected: bool


@dataclass(frozen=True)
class CoherenceBudget:
    channels: list
    total_t2: float
    nv_doubling_applied: bool


@dataclass(frozen=True)
class DecayFit:
    t2_fit: float
    amplitude: float
    offset: float
    residual_rms: float


def _channel(name, step_time, delta_phi):
    if delta_phi < 1.0:
        return BudgetChannel(name, step_time, delta_phi, 2.0 * step_time / delta_phi**2, True)
    return BudgetChannel(name, step_time, delta_phi, 2.0 * step_time, False)


def phase_variance_channels(sys: SystemSpec, drive: DriveSpec, noise: NoiseSpec | None = None):
    """Assemble every applicable dephasing channel and the combined total.

    Zero-strength channels are omitted. Noise-channel phases use the OU
    correlation time as the step; jump-driven channels use the electron
    dwell time (t1 by the decay-rate convention used throughout).
    """
    noise = noise if noise is not None else NoiseSpec()
    nv = sys.electron_levels == 3
    double = 2.0 if nv else 1.0
    t1 = sys.t1
    channels = []

    def add(name, step, dphi):
        if dphi > 0:
            channels.append(_channel(name, step, dphi))

    if drive.omega1 == 0:
        add("unprotected", t1, max(sys.g_par, sys.g_perp) * t1)
    else:
        omega = drive.omega1
        _, _, g_eff = second_order_effective(sys, drive)
        add("parallel", t1, sys.g_par / omega)
        add("perpendicular", t1, sys.g_perp / omega)
        if drive.second_drive_on:
            omega2 = drive.omega2
            add("gap2", t1, abs(g_eff) / omega2)
            if drive.delta2 != 0:
                add("eff2", t1, abs(concatenated_effective(sys, drive)) * t1)
            add("eff3", t1, abs(third_order_effective(sys, drive)) * t1)
            if noise.magnetic is not None:
                amp = noise.magnetic.amplitude
                add(
                    "magnetic",
                    noise.magnetic.tau,
                    double * sys.g_par * amp / (omega * omega2),
                )
            if noise.rabi1 is not None:
                amp = noise.rabi1.amplitude
                add(
                    "rabi1",
                    noise.rabi1.tau,
                    double * abs(g_eff) * amp * noise.rabi1.tau / omega2,
                )
            if nv and noise.rabi_mismatch is not None:
                # residual quadratic coupling 3*g_par*dDeltaOmega/(sqrt(2)*Omega)
                # accumulated over one correlation time (negligible for a
                # tuned asymmetry, but carried for completeness)
                amp = noise.rabi_mismatch.amplitude
                add(
                    "rabi_mismatch",
                    noise.rabi_mismatch.tau,
                    double
                    * 3.0
                    * sys.g_par
                    * amp
                    * noise.rabi_mismatch.tau
                    / (math.sqrt(2.0) * omega),
                )
            # second-drive amplitude noise does not couple to the hyperfine
            # interaction and is deliberately absent from the budget
        else:
            add("eff", t1, abs(g_eff) * t1)
            if noise.magnetic is not None:
                amp = noise.magnetic.amplitude
                add(
                    "magnetic",
                    noise.magnetic.tau,
                    double * sys.g_par * amp * noise.magnetic.tau / omega,
                )

    if not channels:
        raise EmptyBudgetError("no dephasing channel applies to this configuration")
    total = combine_t2_channels(channels)
    return CoherenceBudget(channels=channels, total_t2=total, nv_doubling_applied=nv)


def combine_t2_channels(channels):
    if not channels:
        raise EmptyBudgetError("cannot combine an empty channel list")
    return 1.0 / sum(1.0 / c.t2 for c in channels)


def combine_t2(budget: CoherenceBudget):
    """Harmonic combination 1/T2 = sum of channel rates."""
    return combine_t2_channels(budget.channels)


def dominant_frequency(times, values):
    """Angular frequency (rad/s) of the strongest non-DC spectral component.

    Hann-windowed rFFT with parabolic peak interpolation; ``times`` must be
    uniformly spaced.
    """
    times = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float) - np.mean(values)
    dt = times[1] - times[0]
    if not np.allclose(np.diff(times), dt, rtol=1e-6):
        raise ValueError("dominant_frequency requires a uniform time grid")
    spec = np.abs(np.fft.rfft(y * np.hanning(len(y))))
    freqs = np.fft.rfftfreq(len(y), dt)
    k = int(np.argmax(spec[1:]) + 1)
    if 1 <= k < len(spec) - 1:
        a, b, c = spec[k - 1], spec[k], spec[k + 1]
        denom = a - 2 * b + c
        shift = 0.5 * (a - c) / denom if denom != 0 else 0.0
    else:
        shift = 0.0
    return 2.0 * np.pi * (freqs[k] + shift * (freqs[1] - freqs[0]))


def _exp_model(t, offset, amplitude, t2):
    return offset + amplitude * np.exp(-t / t2)


def fit_decay(ensemble: EnsembleResult, model="plus_population"):
    """Fit an exponential decay constant to an ensemble trace.

    ``plus_population`` fits mean_pop_plus to offset + amplitude*exp(-t/T2),
    weighted by the standard errors when present. ``coherence_envelope``
    fits the analytic-signal envelope of mean_coherence_x, for traces whose
    coherence oscillates under the decay.
    """
    times = np.asarray(ensemble.times, dtype=float)
    if len(times) < 10:
        raise ValueError("need at least 10 time samples")
    span = times[-1] - times[0]

    if model == "plus_population":
        y = np.asarray(ensemble.mean_pop_plus, dtype=float)
        se = np.asarray(ensemble.se_pop_plus, dtype=float)
        p0 = (0.5, 0.5, span / 3.0)
    elif model == "coherence_envelope":
        coh = np.asarray(ensemble.mean_coherence_x, dtype=float)
        envelope = np.abs(hilbert(coh))
        trim = max(1, len(times) // 10)  # edge artifacts of the analytic signal
        times, y = times[trim:-trim], envelope[trim:-trim]
        se = None
        p0 = (0.0, max(y.max(), 1e-12), span / 3.0)
    else:
        raise ValueError(f"unknown fit model {model!r}")

    if np.ptp(y) < 1e-9:
        raise FitError("trace is constant; no decay to fit")
    sigma = se if se is not None and np.all(se > 0) else None
    try:
        popt, _ = curve_fit(
            _exp_model,
            times,
            y,
            p0=p0,
            sigma=sigma,
            bounds=([-np.inf, -np.inf, 1e-15], [np.inf, np.inf, np.inf]),
            maxfev=20000,
        )
    except RuntimeError as err:
        raise FitError(f"decay fit did not converge: {err}") from err
    offset, amplitude, t2 = popt
    if t2 > 100.0 * span:
        raise FitError(f"no decay detected over the trace (fitted T2 = {t2:.3e} s)")
    residual = float(np.sqrt(np.mean((_exp_model(times, *popt) - y) ** 2)))
    return DecayFit(t2_fit=float(t2), amplitude=float(amplitude), offset=float(offset),
                    residual_rms=residual)
