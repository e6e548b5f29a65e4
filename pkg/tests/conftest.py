"""Shared fixtures: the headline operating point in both system variants."""

import numpy as np
import pytest

from cddsim.model import DriveSpec, SystemSpec
from cddsim.noise import NoiseSpec, OUParams

TWO_PI = 2.0 * np.pi


@pytest.fixture
def sys2():
    return SystemSpec(
        electron_levels=2,
        omega_n=TWO_PI * 100e3,
        g_par=TWO_PI * 40e3,
        g_perp=TWO_PI * 20e3,
        delta=TWO_PI * 100e3,
        t1=1.25e-3,
    )


@pytest.fixture
def sys3(sys2):
    return SystemSpec(
        electron_levels=3,
        omega_n=sys2.omega_n,
        g_par=sys2.g_par,
        g_perp=sys2.g_perp,
        delta=sys2.delta,
        t1=sys2.t1,
    )


@pytest.fixture
def drive_protected():
    return DriveSpec(
        omega1=TWO_PI * 4e6,
        omega2=TWO_PI * 4e6 / 17.0,
        method="z_modulation",
    )


@pytest.fixture
def noise_full():
    return NoiseSpec(
        magnetic=OUParams.from_amplitude(TWO_PI * 50e3, 25e-6),
        rabi1=OUParams.from_amplitude(TWO_PI * 0.005 * 4e6, 100e-6),
        rabi2=OUParams.from_amplitude(TWO_PI * 0.005 * 4e6 / 17.0, 100e-6),
    )
