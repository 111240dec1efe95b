"""On-disk formats: sequence lines, stream files, CSV tables, PGM, SVG.

Stream files carry one ASCII header line followed by raw little-endian
float64 samples::

    aoimux-stream 1 f_s=... t0=... length=... f_us=... c=... mode=...
        order=... duration_s=... noise_sigma=... modulation_efficiency=...
        seed=... water_sound_speed=... water_path_m=...\\n

(single line, fields space separated, floats in shortest round-trip
form).  All CSV output uses explicit units in the column headers and
shortest round-trip float formatting, so identical runs produce byte
identical files.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .codes import SSequence
from .demux import DepthProfile
from .errors import ConfigError
from .pipeline import AdvantageCurve, SnrReport
from .simulator import AcquisitionConfig, SampledStream, ScanResult

_STREAM_MAGIC = "aoimux-stream"
_STREAM_VERSION = 1


def _fmt(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------- sequences


def write_sequence(seq: SSequence, path: str | Path) -> None:
    Path(path).write_text(seq.to_text() + "\n")


def read_sequence(path: str | Path) -> SSequence:
    return SSequence.from_text(Path(path).read_text())


# ------------------------------------------------------------------ streams


def _config_fields(cfg: AcquisitionConfig) -> dict[str, str]:
    return {
        "f_us": _fmt(cfg.f_us),
        "c": _fmt(cfg.c),
        "mode": cfg.mode,
        "order": str(cfg.order),
        "duration_s": _fmt(cfg.duration_s),
        "noise_sigma": _fmt(cfg.noise_sigma),
        "modulation_efficiency": _fmt(cfg.modulation_efficiency),
        "seed": str(cfg.seed),
        "water_sound_speed": _fmt(cfg.water_sound_speed),
        "water_path_m": _fmt(cfg.water_path_m),
    }


def write_stream(stream: SampledStream, path: str | Path) -> None:
    fields = {
        "f_s": _fmt(stream.f_s),
        "t0": _fmt(stream.t0),
        "length": str(stream.samples.size),
    }
    fields.update(_config_fields(stream.config_snapshot))
    header = " ".join(
        [_STREAM_MAGIC, str(_STREAM_VERSION)] + [f"{k}={v}" for k, v in fields.items()]
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii") + b"\n")
        fh.write(stream.samples.astype("<f8").tobytes())


def read_stream(path: str | Path) -> SampledStream:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").strip()
        raw = fh.read()
    tokens = header.split()
    if len(tokens) < 2 or tokens[0] != _STREAM_MAGIC or tokens[1] != str(_STREAM_VERSION):
        raise ConfigError(f"{path}: not an aoimux stream file")
    kv = dict(tok.split("=", 1) for tok in tokens[2:])
    try:
        cfg = AcquisitionConfig(
            f_us=float(kv["f_us"]),
            f_s=float(kv["f_s"]),
            c=float(kv["c"]),
            mode=kv["mode"],
            order=int(kv["order"]),
            duration_s=float(kv["duration_s"]),
            noise_sigma=float(kv["noise_sigma"]),
            modulation_efficiency=float(kv["modulation_efficiency"]),
            seed=int(kv["seed"]),
            water_sound_speed=float(kv["water_sound_speed"]),
            water_path_m=float(kv["water_path_m"]),
        )
        length = int(kv["length"])
        t0 = float(kv["t0"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{path}: malformed stream header: {exc}") from exc
    samples = np.frombuffer(raw, dtype="<f8")
    if samples.size != length:
        raise ConfigError(
            f"{path}: header says {length} samples, file holds {samples.size}"
        )
    return SampledStream(samples.copy(), cfg.f_s, t0, cfg)


def write_stream_csv(stream: SampledStream, path: str | Path) -> None:
    """Plain-text alternative for small streams."""
    lines = ["t_s,sample"]
    inv_fs = 1.0 / stream.f_s
    for i, v in enumerate(stream.samples):
        lines.append(f"{_fmt(stream.t0 + i * inv_fs)},{_fmt(v)}")
    Path(path).write_text("\n".join(lines) + "\n")


# ----------------------------------------------------------------- profiles


def write_profile_csv(profile: DepthProfile, path: str | Path) -> None:
    lines = ["depth_m,amplitude"]
    for z, v in zip(profile.depths, profile.values):
        lines.append(f"{_fmt(z)},{_fmt(v)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_profile_csv(path: str | Path) -> DepthProfile:
    rows = Path(path).read_text().strip().splitlines()
    if not rows or rows[0] != "depth_m,amplitude":
        raise ConfigError(f"{path}: not a depth-profile CSV")
    depths, values = [], []
    for row in rows[1:]:
        z, v = row.split(",")
        depths.append(float(z))
        values.append(float(v))
    if len(depths) < 2:
        raise ConfigError(f"{path}: profile needs at least two rows")
    bin_width = depths[1] - depths[0]
    return DepthProfile(np.array(values), bin_width_m=bin_width, depth_origin_m=depths[0])


# -------------------------------------------------------------- experiments


def write_snr_reports_csv(reports: list[SnrReport], path: str | Path) -> None:
    lines = ["mode,order,n_trials,signal_mean,noise_std,snr"]
    for r in reports:
        lines.append(
            f"{r.mode},{r.order},{r.n_trials},{_fmt(r.signal_mean)},"
            f"{_fmt(r.noise_std)},{_fmt(r.snr)}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def write_advantage_csv(curve: AdvantageCurve, path: str | Path) -> None:
    lines = ["order,measured_gain,theoretical_gain"]
    for n, m, t in zip(curve.orders, curve.measured_gain, curve.theoretical_gain):
        lines.append(f"{n},{_fmt(m)},{_fmt(t)}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_advantage_svg(curve: AdvantageCurve, path: str | Path) -> None:
    """Self-contained line chart: theoretical gain in blue, measured in red."""
    width, height = 640, 440
    ml, mr, mt, mb = 70, 20, 30, 50
    xs = np.asarray(curve.orders, dtype=float)
    all_y = np.asarray(curve.measured_gain + curve.theoretical_gain, dtype=float)
    x_lo, x_hi = xs.min(), xs.max()
    y_lo, y_hi = 0.0, float(all_y.max()) * 1.1 + 1e-12
    if x_hi == x_lo:
        x_hi = x_lo + 1.0

    def px(x):
        return ml + (x - x_lo) / (x_hi - x_lo) * (width - ml - mr)

    def py(y):
        return height - mb - (y - y_lo) / (y_hi - y_lo) * (height - mt - mb)

    def polyline(ys, color):
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))
        return (
            f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{pts}"/>'
        )

    def markers(ys, color):
        return "".join(
            f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3" fill="{color}"/>'
            for x, y in zip(xs, ys)
        )

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{ml}" y1="{height - mb}" x2="{width - mr}" y2="{height - mb}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{height - mb}" stroke="black"/>',
    ]
    for x in xs:
        parts.append(
            f'<text x="{px(x):.2f}" y="{height - mb + 18}" font-size="12" '
            f'text-anchor="middle">{int(x)}</text>'
        )
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = y_lo + frac * (y_hi - y_lo)
        parts.append(
            f'<text x="{ml - 8}" y="{py(y) + 4:.2f}" font-size="12" '
            f'text-anchor="end">{y:.2f}</text>'
        )
    parts += [
        polyline(curve.theoretical_gain, "blue"),
        markers(curve.theoretical_gain, "blue"),
        polyline(curve.measured_gain, "red"),
        markers(curve.measured_gain, "red"),
        f'<text x="{width - mr - 10}" y="{mt + 10}" font-size="12" text-anchor="end" '
        f'fill="blue">theoretical sqrt(N)/2</text>',
        f'<text x="{width - mr - 10}" y="{mt + 26}" font-size="12" text-anchor="end" '
        f'fill="red">measured</text>',
        f'<text x="{(ml + width - mr) / 2}" y="{height - 12}" font-size="13" '
        f'text-anchor="middle">code order N</text>',
        f'<text x="16" y="{(mt + height - mb) / 2}" font-size="13" '
        f'text-anchor="middle" transform="rotate(-90 16 {(mt + height - mb) / 2})">'
        f"SNR gain</text>",
        "</svg>",
    ]
    Path(path).write_text("\n".join(parts) + "\n")


# -------------------------------------------------------------------- scans


def write_scan_map_csv(result: ScanResult, path: str | Path) -> None:
    lines = ["x_m,y_m,peak_amplitude"]
    for iy, y in enumerate(result.ys):
        for ix, x in enumerate(result.xs):
            lines.append(f"{_fmt(x)},{_fmt(y)},{_fmt(result.peak_map[iy, ix])}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_scan_stack_csv(result: ScanResult, path: str | Path) -> None:
    lines = ["x_m,y_m,depth_m,amplitude"]
    depths = result.depths
    for iy, y in enumerate(result.ys):
        for ix, x in enumerate(result.xs):
            for iz, z in enumerate(depths):
                lines.append(
                    f"{_fmt(x)},{_fmt(y)},{_fmt(z)},{_fmt(result.stack[iy, ix, iz])}"
                )
    Path(path).write_text("\n".join(lines) + "\n")


def write_pgm(image: np.ndarray, path: str | Path, *, db_floor: float | None = None) -> None:
    """8-bit binary portable graymap of a non-negative image.

    Linear mapping by default (0 .. peak -> 0 .. 255); with ``db_floor``
    the image is written on a decibel scale clipped at that floor.
    """
    img = np.asarray(image, dtype=np.float64)
    peak = img.max()
    if peak <= 0:
        scaled = np.zeros_like(img)
    elif db_floor is None:
        scaled = img / peak
    else:
        if db_floor >= 0:
            raise ConfigError("db_floor must be negative")
        db = 20.0 * np.log10(np.maximum(img, 1e-300) / peak)
        scaled = np.clip(1.0 - db / db_floor, 0.0, 1.0)
    data = np.round(255.0 * scaled).astype(np.uint8)
    h, w = data.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(data.tobytes())
