"""Run configuration files: flat key=value text with [sections].

A run manifest is the same format with every value resolved, so a
manifest can be fed back in as the config of an identical run.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .simulator import SPEED_OF_SOUND_WATER, AcquisitionConfig, Phantom

_ACQ_KEYS = {
    "f_us_hz": (float, None),
    "f_s_hz": (float, None),
    "sound_speed_m_s": (float, None),
    "mode": (str, "coded"),
    "order": (int, 79),
    "duration_s": (float, None),
    "noise_sigma": (float, 0.0),
    "modulation_efficiency": (float, 1.0),
    "seed": (int, 0),
    "water_sound_speed_m_s": (float, SPEED_OF_SOUND_WATER),
    "water_path_m": (float, 0.0),
}

_PHANTOM_KEYS = {
    "mu_s_prime_per_cm": (float, None),
    "mu_a_per_cm": (float, None),
    "src_x_m": (float, None),
    "src_y_m": (float, 0.0),
    "det_x_m": (float, None),
    "det_y_m": (float, 0.0),
    "boundary_z_m": (float, 0.0),
    "sound_speed_m_s": (float, None),
    "depth_extent_m": (float, None),
}

_SCAN_KEYS = {
    "x_min_m": (float, 0.0),
    "x_max_m": (float, 0.0),
    "y_min_m": (float, 0.0),
    "y_max_m": (float, 0.0),
    "step_m": (float, 0.0005),
}

_SWEEP_KEYS = {
    "orders": (str, "7,19,31,79"),
    "n_trials": (int, 200),
    "reference": (str, "matched"),
    "subtract_noise_floor": (bool, False),
}

_SECTIONS = {
    "acquisition": _ACQ_KEYS,
    "phantom": _PHANTOM_KEYS,
    "scan": _SCAN_KEYS,
    "sweep": _SWEEP_KEYS,
}


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved parameters for one CLI run."""

    acquisition: AcquisitionConfig
    phantom: Phantom
    scan_x: tuple[float, float]
    scan_y: tuple[float, float]
    scan_step: float
    sweep_orders: tuple[int, ...]
    sweep_trials: int
    sweep_reference: str
    sweep_subtract_noise_floor: bool


def _coerce(section: str, key: str, raw: str, kind):
    try:
        if kind is bool:
            low = raw.strip().lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from exc


def _read_section(parser: configparser.ConfigParser, name: str) -> dict:
    spec = _SECTIONS[name]
    present = dict(parser[name]) if parser.has_section(name) else {}
    unknown = set(present) - set(spec)
    if unknown:
        raise ConfigError(f"[{name}]: unknown keys {sorted(unknown)}")
    out = {}
    for key, (kind, default) in spec.items():
        if key in present:
            out[key] = _coerce(name, key, present[key], kind)
        elif default is None:
            raise ConfigError(f"[{name}]: missing required key {key}")
        else:
            out[key] = default
    return out


def parse_run_config(path: str | Path) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None)
    text = Path(path).read_text()
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    unknown = set(parser.sections()) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"{path}: unknown sections {sorted(unknown)}")
    for required in ("acquisition", "phantom"):
        if not parser.has_section(required):
            raise ConfigError(f"{path}: missing [{required}] section")

    acq = _read_section(parser, "acquisition")
    pha = _read_section(parser, "phantom")
    scan = _read_section(parser, "scan")
    sweep = _read_section(parser, "sweep")

    acquisition = AcquisitionConfig(
        f_us=acq["f_us_hz"],
        f_s=acq["f_s_hz"],
        c=acq["sound_speed_m_s"],
        mode=acq["mode"],
        order=acq["order"],
        duration_s=acq["duration_s"],
        noise_sigma=acq["noise_sigma"],
        modulation_efficiency=acq["modulation_efficiency"],
        seed=acq["seed"],
        water_sound_speed=acq["water_sound_speed_m_s"],
        water_path_m=acq["water_path_m"],
    )
    phantom = Phantom(
        mu_s_prime=pha["mu_s_prime_per_cm"],
        mu_a=pha["mu_a_per_cm"],
        src_pos=(pha["src_x_m"], pha["src_y_m"], pha["boundary_z_m"]),
        det_pos=(pha["det_x_m"], pha["det_y_m"], pha["boundary_z_m"]),
        sound_speed=pha["sound_speed_m_s"],
        depth_extent=pha["depth_extent_m"],
    )
    try:
        orders = tuple(int(tok) for tok in sweep["orders"].split(",") if tok.strip())
    except ValueError as exc:
        raise ConfigError(f"[sweep] orders: {exc}") from exc
    if sweep["reference"] not in ("matched", "max-rate"):
        raise ConfigError("[sweep] reference must be matched or max-rate")
    return RunConfig(
        acquisition=acquisition,
        phantom=phantom,
        scan_x=(scan["x_min_m"], scan["x_max_m"]),
        scan_y=(scan["y_min_m"], scan["y_max_m"]),
        scan_step=scan["step_m"],
        sweep_orders=orders,
        sweep_trials=sweep["n_trials"],
        sweep_reference=sweep["reference"],
        sweep_subtract_noise_floor=sweep["subtract_noise_floor"],
    )


def manifest_text(rc: RunConfig) -> str:
    """Config text with every parameter resolved; reparsing it reproduces rc."""
    acq = rc.acquisition
    ph = rc.phantom

    def fmt(v):
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, float):
            return repr(v)
        return str(v)

    lines = [
        "[acquisition]",
        f"f_us_hz = {fmt(acq.f_us)}",
        f"f_s_hz = {fmt(acq.f_s)}",
        f"sound_speed_m_s = {fmt(acq.c)}",
        f"mode = {acq.mode}",
        f"order = {acq.order}",
        f"duration_s = {fmt(acq.duration_s)}",
        f"noise_sigma = {fmt(acq.noise_sigma)}",
        f"modulation_efficiency = {fmt(acq.modulation_efficiency)}",
        f"seed = {acq.seed}",
        f"water_sound_speed_m_s = {fmt(acq.water_sound_speed)}",
        f"water_path_m = {fmt(acq.water_path_m)}",
        "",
        "[phantom]",
        f"mu_s_prime_per_cm = {fmt(ph.mu_s_prime)}",
        f"mu_a_per_cm = {fmt(ph.mu_a)}",
        f"src_x_m = {fmt(ph.src_pos[0])}",
        f"src_y_m = {fmt(ph.src_pos[1])}",
        f"det_x_m = {fmt(ph.det_pos[0])}",
        f"det_y_m = {fmt(ph.det_pos[1])}",
        f"boundary_z_m = {fmt(ph.boundary_z)}",
        f"sound_speed_m_s = {fmt(ph.sound_speed)}",
        f"depth_extent_m = {fmt(ph.depth_extent)}",
        "",
        "[scan]",
        f"x_min_m = {fmt(rc.scan_x[0])}",
        f"x_max_m = {fmt(rc.scan_x[1])}",
        f"y_min_m = {fmt(rc.scan_y[0])}",
        f"y_max_m = {fmt(rc.scan_y[1])}",
        f"step_m = {fmt(rc.scan_step)}",
        "",
        "[sweep]",
        f"orders = {','.join(str(n) for n in rc.sweep_orders)}",
        f"n_trials = {rc.sweep_trials}",
        f"reference = {rc.sweep_reference}",
        f"subtract_noise_floor = {fmt(rc.sweep_subtract_noise_floor)}",
    ]
    return "\n".join(lines) + "\n"


def write_manifest(rc: RunConfig, path: str | Path) -> None:
    Path(path).write_text(manifest_text(rc))
