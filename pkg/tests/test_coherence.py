"""Dephasing budget identities and decay fitting."""

import numpy as np
import pytest

from cddsim.coherence import (
    BudgetChannel,
    EmptyBudgetError,
    FitError,
    _channel,
    combine_t2,
    combine_t2_channels,
    dominant_frequency,
    fit_decay,
    phase_variance_channels,
)
from cddsim.dynamics import EnsembleResult
from cddsim.model import DriveSpec, SystemSpec

TWO_PI = 2.0 * np.pi


def _by_name(budget):
    return {c.name: c for c in budget.channels}


def test_channel_identity_and_broken_flag():
    ok = _channel("x", 1e-3, 0.01)
    assert ok.protected
    assert ok.t2 * ok.delta_phi**2 == pytest.approx(2.0 * ok.step_time, rel=1e-12)
    broken = _channel("y", 1e-3, 3.0)
    assert not broken.protected
    assert broken.t2 == pytest.approx(2.0 * broken.step_time)


def test_combination_monotonicity_and_sandwich(sys2, drive_protected, noise_full):
    budget = phase_variance_channels(sys2, drive_protected, noise_full)
    t2s = [c.t2 for c in budget.channels]
    assert budget.total_t2 <= min(t2s)
    assert budget.total_t2 >= min(t2s) / len(t2s)
    extra = budget.channels + [BudgetChannel("extra", 1e-3, 0.5, 8e-3, True)]
    assert combine_t2_channels(extra) < budget.total_t2
    assert combine_t2(budget) == pytest.approx(budget.total_t2)
    with pytest.raises(EmptyBudgetError):
        combine_t2_channels([])


def test_unprotected_budget_is_the_dwell_time(sys2):
    budget = phase_variance_channels(sys2, DriveSpec())
    assert [c.name for c in budget.channels] == ["unprotected"]
    chan = budget.channels[0]
    assert not chan.protected  # g*t1 >> 1: protection absent by construction
    assert chan.t2 == pytest.approx(2.0 * sys2.t1)
    quiet = SystemSpec(electron_levels=2, omega_n=sys2.omega_n, g_par=0.0,
                       g_perp=0.0, delta=sys2.delta, t1=sys2.t1)
    with pytest.raises(EmptyBudgetError):
        phase_variance_channels(quiet, DriveSpec())


def test_protected_channel_values_match_hand_arithmetic(sys2, drive_protected):
    """Independent arithmetic for every deterministic channel at the headline
    parameters: delta_phi per electron dwell, T2 = 2*T1/delta_phi^2."""
    budget = phase_variance_channels(sys2, drive_protected)
    chans = _by_name(budget)
    omega, omega2 = drive_protected.omega1, drive_protected.omega2
    t1 = sys2.t1
    g_eff = sys2.g_par * sys2.delta / omega
    g_eff3 = sys2.g_par * omega2 * sys2.delta / (2 * omega**2)
    expected = {
        "parallel": 2 * t1 / (sys2.g_par / omega) ** 2,       # 25 s
        "perpendicular": 2 * t1 / (sys2.g_perp / omega) ** 2,  # 100 s
        "gap2": 2 * t1 / (g_eff / omega2) ** 2,                # 138.4 s
        "eff3": 2 * t1 / (g_eff3 * t1) ** 2,                   # 0.0469 s
    }
    assert set(chans) == set(expected)
    for name, t2 in expected.items():
        assert chans[name].t2 == pytest.approx(t2, rel=1e-12)
    assert expected["parallel"] == pytest.approx(25.0, rel=1e-6)
    assert expected["gap2"] == pytest.approx(138.4, rel=1e-3)
    assert expected["eff3"] == pytest.approx(0.04685, rel=1e-3)
    assert budget.total_t2 == pytest.approx(
        1.0 / sum(1.0 / v for v in expected.values()), rel=1e-12
    )


def test_noise_channels_and_nv_doubling(sys2, sys3, drive_protected, noise_full):
    b2 = phase_variance_channels(sys2, drive_protected, noise_full)
    b3 = phase_variance_channels(sys3, drive_protected, noise_full)
    assert not b2.nv_doubling_applied and b3.nv_doubling_applied
    c2, c3 = _by_name(b2), _by_name(b3)
    for name in ("magnetic", "rabi1"):
        assert c3[name].delta_phi == pytest.approx(2.0 * c2[name].delta_phi)
        assert c3[name].t2 == pytest.approx(c2[name].t2 / 4.0)
    # second-drive amplitude noise never enters the budget
    assert "rabi2" not in c2 and "rabi2" not in c3
    # drive-asymmetry noise exists only with noise on that channel
    assert "rabi_mismatch" not in c3
    # hand arithmetic for the drive-amplitude channel: 0.0701 s two-level
    tau = noise_full.rabi1.tau
    g_eff = sys2.g_par * sys2.delta / drive_protected.omega1
    dphi = g_eff * noise_full.rabi1.amplitude * tau / drive_protected.omega2
    assert c2["rabi1"].t2 == pytest.approx(2 * tau / dphi**2, rel=1e-12)
    assert c2["rabi1"].t2 == pytest.approx(0.0701, rel=2e-3)
    assert c3["rabi1"].t2 == pytest.approx(0.0175, rel=3e-3)


def test_single_drive_budget_has_magnetic_channel(sys2, noise_full):
    drive = DriveSpec(omega1=TWO_PI * 4e6)
    chans = _by_name(phase_variance_channels(sys2, drive, noise_full))
    assert set(chans) == {"parallel", "perpendicular", "eff", "magnetic"}
    g_eff = sys2.g_par * sys2.delta / drive.omega1
    assert chans["eff"].delta_phi == pytest.approx(g_eff * sys2.t1)


def test_dominant_frequency_recovers_a_tone():
    t = np.linspace(0, 1, 4001)
    f0 = 40.25
    y = 0.3 + np.cos(TWO_PI * f0 * t) + 0.1 * np.cos(TWO_PI * 3.0 * t)
    assert dominant_frequency(t, y) == pytest.approx(TWO_PI * f0, rel=5e-3)
    with pytest.raises(ValueError):
        dominant_frequency(np.array([0.0, 0.1, 0.5]), np.zeros(3))


def _ensemble(times, pop, coh, se=None):
    se = se if se is not None else np.full_like(times, 1e-3)
    return EnsembleResult(times, pop, se, coh, se, 100)


def test_fit_decay_recovers_population_constant():
    t = np.linspace(0, 0.1, 400)
    t2 = 0.023
    pop = 0.5 + 0.5 * np.exp(-t / t2)
    fit = fit_decay(_ensemble(t, pop, np.zeros_like(t)))
    assert fit.t2_fit == pytest.approx(t2, rel=1e-6)
    assert fit.offset == pytest.approx(0.5, abs=1e-6)
    assert fit.residual_rms < 1e-9


def test_fit_decay_envelope_mode():
    t = np.linspace(0, 0.1, 2000)
    t2 = 0.02
    coh = np.exp(-t / t2) * np.cos(TWO_PI * 500 * t)
    fit = fit_decay(_ensemble(t, 0.5 * np.ones_like(t), coh), model="coherence_envelope")
    assert fit.t2_fit == pytest.approx(t2, rel=0.05)


def test_fit_decay_failure_modes():
    t = np.linspace(0, 0.1, 200)
    with pytest.raises(FitError):
        fit_decay(_ensemble(t, 0.5 * np.ones_like(t), np.zeros_like(t)))
    slow = 0.5 + 0.5 * np.exp(-t / 1e4)  # no visible decay over the window
    with pytest.raises(FitError):
        fit_decay(_ensemble(t, slow, np.zeros_like(t)))
    with pytest.raises(ValueError):
        fit_decay(_ensemble(t[:5], slow[:5], np.zeros(5)))
    with pytest.raises(ValueError):
        fit_decay(_ensemble(t, slow, np.zeros_like(t)), model="nope")
