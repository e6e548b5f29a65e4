"""Named parameter sets for the headline simulations.

All frequencies are plain Hz here (multiplied by 2*pi at the model
boundary). The ``*-scaled`` presets multiply every frequency by 20 and
divide every time by 20; the dynamics are invariant under that rescaling
(every coupling formula is degree-1 homogeneous in frequency), so the
scaled decay must match the scaled budget at 1/400 of the wall-clock cost.
"""

import copy

SCALE = 20.0

_SYSTEM = {
    "levels": 2,
    "larmor_hz": 100e3,
    "g_parallel_hz": 40e3,
    "g_perp_hz": 20e3,
    "detuning_hz": 100e3,
    "t1_s": 1.25e-3,
}

_DRIVE_OFF = {
    "rabi1_hz": 0.0,
    "rabi2_hz": 0.0,
    "method": "none",
    "detuning2_hz": 0.0,
    "rabi_mismatch_hz": 0.0,
}

_DRIVE_ON = {
    "rabi1_hz": 4e6,
    "rabi2_hz": 4e6 / 17.0,
    "method": "z_modulation",
    "detuning2_hz": 0.0,
    "rabi_mismatch_hz": 0.0,
}

_NOISE_OFF = {}

_NOISE_ON = {
    "magnetic_amplitude_hz": 50e3,
    "magnetic_tau_s": 25e-6,
    "rabi1_relative": 0.005,
    "rabi1_tau_s": 100e-6,
    "rabi2_relative": 0.005,
    "rabi2_tau_s": 100e-6,
    "mismatch_relative": 0.005,
    "mismatch_tau_s": 100e-6,
    "nv_correlated": True,
}


def _preset(system, drive, noise, run):
    return {
        "system": copy.deepcopy(system),
        "drive": copy.deepcopy(drive),
        "noise": copy.deepcopy(noise),
        "run": copy.deepcopy(run),
    }


def _nv(preset, tuned=True):
    p = copy.deepcopy(preset)
    p["system"]["levels"] = 3
    if tuned and p["drive"]["rabi1_hz"] > 0:
        p["drive"]["rabi_mismatch_hz"] = "tuned"
    return p


def _scaled(preset):
    p = copy.deepcopy(preset)
    for key in ("larmor_hz", "g_parallel_hz", "g_perp_hz", "detuning_hz"):
        p["system"][key] *= SCALE
    p["system"]["t1_s"] /= SCALE
    for key in ("rabi1_hz", "rabi2_hz", "detuning2_hz"):
        p["drive"][key] *= SCALE
    for key in ("magnetic_amplitude_hz",):
        if key in p["noise"]:
            p["noise"][key] *= SCALE
    for key in ("magnetic_tau_s", "rabi1_tau_s", "rabi2_tau_s", "mismatch_tau_s"):
        if key in p["noise"]:
            p["noise"][key] /= SCALE
    p["run"]["t_final_s"] /= SCALE
    return p


PRESETS = {
    "fig3-2level-unprotected": _preset(
        _SYSTEM, _DRIVE_OFF, _NOISE_OFF,
        {"t_final_s": 10e-3, "trajectories": 300, "seed": 1234, "samples": 2001,
         "observable": "coherence"},
    ),
    "fig3-2level-protected-noiseless": _preset(
        _SYSTEM, _DRIVE_ON, _NOISE_OFF,
        {"t_final_s": 0.15, "trajectories": 200, "seed": 1234, "samples": 601,
         "observable": "plus_population"},
    ),
    "fig3-2level-noisy": _preset(
        _SYSTEM, _DRIVE_ON, _NOISE_ON,
        {"t_final_s": 0.1, "trajectories": 300, "seed": 1234, "samples": 601,
         "observable": "plus_population"},
    ),
}

PRESETS["fig3-nv-unprotected"] = _nv(PRESETS["fig3-2level-unprotected"])
PRESETS["fig3-nv-protected-noiseless"] = _nv(PRESETS["fig3-2level-protected-noiseless"])
PRESETS["fig3-nv-noisy"] = _nv(PRESETS["fig3-2level-noisy"])
PRESETS["fig3-scaled"] = _scaled(PRESETS["fig3-2level-noisy"])
PRESETS["fig3-scaled"]["run"].update({"t_final_s": 4.0e-3, "trajectories": 500, "samples": 401})
PRESETS["fig3-scaled-nv"] = _scaled(PRESETS["fig3-nv-noisy"])
PRESETS["fig3-scaled-nv"]["run"].update({"t_final_s": 2.0e-3, "trajectories": 500, "samples": 401})
