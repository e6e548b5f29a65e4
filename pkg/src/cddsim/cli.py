"""Batch experiment runner.

Subcommands: ``simulate`` (trajectory ensemble -> trace CSV + report JSON),
``budget`` (dephasing-channel table), ``effective`` (analytic terms with
numeric cross-checks), ``fit`` (re-fit an existing trace CSV). Configuration
comes from TOML files and/or named presets; flags take precedence over the
config file, which takes precedence over the preset. Frequencies are plain
Hz in configs and multiplied by 2*pi internally.
"""

import copy
import json
import math
import os
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import click
import numpy as np

from . import __version__, _kernels, coherence, dynamics, effective
from .model import ConfigError, DriveSpec, SystemSpec
from .noise import NoiseSpec, OUParams
from .presets import PRESETS

SCHEMA_VERSION = 1
TWO_PI = 2.0 * math.pi

_SCHEMA = {
    "system": {"levels", "larmor_hz", "g_parallel_hz", "g_perp_hz", "detuning_hz", "t1_s"},
    "drive": {"rabi1_hz", "rabi2_hz", "method", "detuning2_hz", "rabi_mismatch_hz"},
    "noise": {
        "magnetic_amplitude_hz", "magnetic_tau_s",
        "rabi1_relative", "rabi1_tau_s",
        "rabi2_relative", "rabi2_tau_s",
        "mismatch_relative", "mismatch_tau_s",
        "nv_correlated",
    },
    "run": {"t_final_s", "dt_s", "trajectories", "seed", "samples", "observable", "out_dir"},
}

_RUN_DEFAULTS = {
    "dt_s": "auto",
    "trajectories": 100,
    "seed": 0,
    "samples": 801,
    "observable": "plus_population",
}


def _validate_sections(cfg, origin):
    for section, keys in cfg.items():
        if section not in _SCHEMA:
            raise ConfigError(f"{origin}: unknown section [{section}]")
        unknown = set(keys) - _SCHEMA[section]
        if unknown:
            raise ConfigError(
                f"{origin}: unknown key(s) in [{section}]: {', '.join(sorted(unknown))}"
            )


def merge_config(preset_name=None, config_path=None, overrides=None):
    """Layer preset < config file < flag overrides into one config dict."""
    cfg = {"system": {}, "drive": {}, "noise": {}, "run": dict(_RUN_DEFAULTS)}
    if preset_name is not None:
        if preset_name not in PRESETS:
            raise ConfigError(
                f"unknown preset {preset_name!r}; available: {', '.join(sorted(PRESETS))}"
            )
        for section, values in copy.deepcopy(PRESETS[preset_name]).items():
            cfg[section].update(values)
    if config_path is not None:
        with open(config_path, "rb") as fh:
            file_cfg = tomllib.load(fh)
        _validate_sections(file_cfg, str(config_path))
        for section, values in file_cfg.items():
            cfg[section].update(values)
    for dotted, value in (overrides or {}).items():
        section, key = dotted.split(".", 1)
        cfg[section][key] = value
    _validate_sections(cfg, "merged config")
    if not cfg["system"]:
        raise ConfigError("no system parameters: pass a config file and/or --preset")
    return cfg


def resolve(cfg):
    """Turn a config dict into model objects; 'tuned' asymmetry is resolved
    against the configured system."""
    s = cfg["system"]
    sys_spec = SystemSpec(
        electron_levels=int(s.get("levels", 2)),
        omega_n=TWO_PI * s.get("larmor_hz", 0.0),
        g_par=TWO_PI * s.get("g_parallel_hz", 0.0),
        g_perp=TWO_PI * s.get("g_perp_hz", 0.0),
        delta=TWO_PI * s.get("detuning_hz", 0.0),
        t1=s.get("t1_s", 1.0),
    )
    d = cfg["drive"]
    mismatch = d.get("rabi_mismatch_hz", 0.0)
    drive = DriveSpec(
        omega1=TWO_PI * d.get("rabi1_hz", 0.0),
        omega2=TWO_PI * d.get("rabi2_hz", 0.0),
        method=d.get("method", "none"),
        delta2=TWO_PI * d.get("detuning2_hz", 0.0),
        delta_omega=0.0 if mismatch == "tuned" else TWO_PI * mismatch,
    )
    if mismatch == "tuned":
        drive = DriveSpec(
            omega1=drive.omega1, omega2=drive.omega2, method=drive.method,
            delta2=drive.delta2, delta_omega=effective.tune_delta_omega(sys_spec, drive),
        )
    n = cfg["noise"]

    def ou(amp_hz, tau):
        return OUParams.from_amplitude(TWO_PI * amp_hz, tau) if amp_hz and tau else None

    rabi1_hz = n.get("rabi1_relative", 0.0) * d.get("rabi1_hz", 0.0)
    rabi2_hz = n.get("rabi2_relative", 0.0) * d.get("rabi2_hz", 0.0)
    mism_base = drive.delta_omega / TWO_PI
    mism_hz = n.get("mismatch_relative", 0.0) * mism_base
    noise = NoiseSpec(
        magnetic=ou(n.get("magnetic_amplitude_hz", 0.0), n.get("magnetic_tau_s", 0.0)),
        rabi1=ou(rabi1_hz, n.get("rabi1_tau_s", 0.0)),
        rabi2=ou(rabi2_hz, n.get("rabi2_tau_s", 0.0)),
        rabi_mismatch=ou(mism_hz, n.get("mismatch_tau_s", 0.0)),
        nv_correlated=bool(n.get("nv_correlated", True)),
    )
    return sys_spec, drive, noise, cfg["run"]


def _out_dir(run_cfg):
    out = run_cfg.get("out_dir") or os.environ.get("CDDSIM_OUT") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _report_base(cfg, extra=None):
    report = {
        "schema_version": SCHEMA_VERSION,
        "code_version": __version__,
        "kernel": _kernels.KERNEL_NAME,
        "config": cfg,
    }
    if extra:
        report.update(extra)
    return report


def _write_json(path, payload):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _budget_payload(budget):
    return {
        "channels": [
            {
                "name": c.name,
                "step_time_s": c.step_time,
                "delta_phi": c.delta_phi,
                "t2_s": c.t2,
                "protected": c.protected,
            }
            for c in budget.channels
        ],
        "total_t2_s": budget.total_t2,
        "nv_doubling_applied": budget.nv_doubling_applied,
    }


def _write_trace_csv(path, ens):
    lines = ["time_s,mean_pop_plus,se_pop_plus,mean_coherence_x,se_coherence_x"]
    for row in zip(
        ens.times, ens.mean_pop_plus, ens.se_pop_plus, ens.mean_coherence_x, ens.se_coherence_x
    ):
        lines.append(",".join(f"{v:.12e}" for v in row))
    path.write_text("\n".join(lines) + "\n")


def _common_options(fn):
    fn = click.argument("config", required=False, type=click.Path(exists=True))(fn)
    fn = click.option("--preset", default=None, help="Named parameter set.")(fn)
    fn = click.option("--seed", type=int, default=None, help="Override run.seed.")(fn)
    fn = click.option(
        "--trajectories", type=int, default=None, help="Override run.trajectories."
    )(fn)
    fn = click.option("--out", default=None, help="Output directory.")(fn)
    return fn


def _load(config, preset, seed, trajectories, out):
    overrides = {}
    if seed is not None:
        overrides["run.seed"] = seed
    if trajectories is not None:
        overrides["run.trajectories"] = trajectories
    if out is not None:
        overrides["run.out_dir"] = out
    try:
        cfg = merge_config(preset, config, overrides)
        resolved = resolve(cfg)
    except (ConfigError, ValueError, tomllib.TOMLDecodeError) as err:
        click.echo(f"config error: {err}", err=True)
        sys.exit(2)
    return cfg, resolved


def _stem(config, preset):
    if preset:
        return preset
    return Path(config).stem if config else "run"


@click.group()
@click.version_option(__version__)
def main():
    """Nuclear-spin dephasing simulator under continuous decoupling."""


@main.command()
@_common_options
def simulate(config, preset, seed, trajectories, out):
    """Run the trajectory ensemble; write the trace CSV and the fit report."""
    cfg, (sys_spec, drive, noise, run_cfg) = _load(config, preset, seed, trajectories, out)
    dt = run_cfg.get("dt_s", "auto")
    dt = None if dt == "auto" else float(dt)
    try:
        ens = dynamics.simulate_ensemble(
            sys_spec, drive, noise,
            t_final=float(run_cfg["t_final_s"]),
            n_trajectories=int(run_cfg["trajectories"]),
            seed=int(run_cfg["seed"]),
            dt=dt,
            n_samples=int(run_cfg["samples"]),
        )
    except (FloatingPointError, np.linalg.LinAlgError) as err:
        click.echo(f"numerical failure: {err}", err=True)
        sys.exit(3)
    model = (
        "coherence_envelope"
        if run_cfg.get("observable") == "coherence"
        else "plus_population"
    )
    try:
        fit = coherence.fit_decay(ens, model=model)
        fit_payload = {
            "model": model,
            "t2_fit_s": fit.t2_fit,
            "amplitude": fit.amplitude,
            "offset": fit.offset,
            "residual_rms": fit.residual_rms,
        }
    except (coherence.FitError, ValueError) as err:
        fit_payload = {"model": model, "error": str(err)}
    budget = coherence.phase_variance_channels(sys_spec, drive, noise)
    used_dt = dt if dt is not None else dynamics.auto_dt(
        sys_spec, drive, noise, float(run_cfg["t_final_s"])
    )
    out_dir = _out_dir(run_cfg)
    stem = _stem(config, preset)
    _write_trace_csv(out_dir / f"{stem}-trace.csv", ens)
    _write_json(
        out_dir / f"{stem}-report.json",
        _report_base(
            cfg,
            {
                "dt_s": used_dt,
                "n_trajectories": ens.n_trajectories,
                "fit": fit_payload,
                "budget": _budget_payload(budget),
            },
        ),
    )
    t2 = fit_payload.get("t2_fit_s")
    click.echo(
        f"wrote {stem}-trace.csv and {stem}-report.json to {out_dir} "
        f"(fitted T2 = {t2 if t2 is not None else 'n/a'})"
    )


@main.command()
@_common_options
def budget(config, preset, seed, trajectories, out):
    """Emit the dephasing-channel budget without running dynamics."""
    cfg, (sys_spec, drive, noise, run_cfg) = _load(config, preset, seed, trajectories, out)
    bud = coherence.phase_variance_channels(sys_spec, drive, noise)
    out_dir = _out_dir(run_cfg)
    stem = _stem(config, preset)
    payload = _budget_payload(bud)
    lines = ["name,step_time_s,delta_phi,t2_s,protected"]
    for c in payload["channels"]:
        lines.append(
            f"{c['name']},{c['step_time_s']:.12e},{c['delta_phi']:.12e},"
            f"{c['t2_s']:.12e},{c['protected']}"
        )
    (out_dir / f"{stem}-budget.csv").write_text("\n".join(lines) + "\n")
    _write_json(out_dir / f"{stem}-budget.json", _report_base(cfg, payload))
    click.echo(f"total T2 = {bud.total_t2:.6g} s ({len(bud.channels)} channels)")


@main.command(name="effective")
@_common_options
def effective_cmd(config, preset, seed, trajectories, out):
    """Emit the analytic effective terms with numeric cross-check errors."""
    cfg, (sys_spec, drive, noise, run_cfg) = _load(config, preset, seed, trajectories, out)
    terms = effective.effective_terms(sys_spec, drive)
    payload = {
        "terms_hz": {
            "ac_electron": terms.ac_electron / TWO_PI,
            "ac_nuclear": terms.ac_nuclear / TWO_PI,
            "g_eff": terms.g_eff / TWO_PI,
            "g_eff2": terms.g_eff2 / TWO_PI,
            "g_eff3": terms.g_eff3 / TWO_PI,
        },
        "perturbative_valid": terms.valid,
        "cross_check_relative_error": {},
    }
    if terms.nv_quadratic is not None:
        payload["terms_hz"]["nv_quadratic"] = terms.nv_quadratic / TWO_PI
        payload["tuned_delta_omega_hz"] = effective.tune_delta_omega(sys_spec, drive) / TWO_PI
    checks = ["ac_electron", "ac_nuclear", "g_eff"]
    if drive.second_drive_on:
        checks.append("g_eff3")
    for which in checks:
        err, flagged = effective.verify_against_magnus(sys_spec, drive, which)
        payload["cross_check_relative_error"][which] = {
            "error": err,
            "absolute": bool(flagged),
        }
    out_dir = _out_dir(run_cfg)
    stem = _stem(config, preset)
    _write_json(out_dir / f"{stem}-effective.json", _report_base(cfg, payload))
    click.echo(json.dumps(payload["terms_hz"], indent=2, sort_keys=True))


@main.command()
@click.argument("trace", type=click.Path(exists=True))
@click.option(
    "--model",
    type=click.Choice(["plus_population", "coherence_envelope"]),
    default="plus_population",
)
def fit(trace, model):
    """Fit the decay constant of an existing trace CSV."""
    data = np.genfromtxt(trace, delimiter=",", names=True)
    ens = dynamics.EnsembleResult(
        times=data["time_s"],
        mean_pop_plus=data["mean_pop_plus"],
        se_pop_plus=data["se_pop_plus"],
        mean_coherence_x=data["mean_coherence_x"],
        se_coherence_x=data["se_coherence_x"],
        n_trajectories=0,
    )
    try:
        result = coherence.fit_decay(ens, model=model)
    except coherence.FitError as err:
        click.echo(f"fit failed: {err}", err=True)
        sys.exit(3)
    click.echo(
        json.dumps(
            {
                "model": model,
                "t2_fit_s": result.t2_fit,
                "amplitude": result.amplitude,
                "offset": result.offset,
                "residual_rms": result.residual_rms,
            },
            indent=2,
        )
    )


if __name__ == "__main__":
    main()
