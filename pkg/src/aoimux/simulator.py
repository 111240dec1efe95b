"""Forward model of pulsed and coded acousto-optic acquisition.

Model conventions, fixed here for the whole package:

* The acoustic axis is +z.  It is discretized into fine bins of width
  c / f_s; one code element spans K = f_s / f_us fine bins (the element
  width is one carrier period times the sound speed).
* Streams are synthesized in cyclic steady state: at sample 0 the code
  pattern lies along the axis in sequence order, and it advances one
  fine bin per sample.  Every complete repetition period of the
  zero-noise stream is therefore identical, and each deinterleaved
  frame satisfies the circulant measurement equation exactly.
* The traveling pulse carries its one-cycle sine shape, so detector
  samples oscillate at f_us; the envelope is recovered downstream by
  quadrature demodulation.
* Light transport uses the steady-state diffusion approximation for an
  infinite medium: point-source kernel G(d) = exp(-mu_eff d) / d with
  mu_eff = sqrt(3 mu_a mu_s'), source and detector displaced one
  transport length 1 / mu_s' into the medium along +z, and distances
  clamped at one transport length (the kernel is not meaningful
  closer).  Modulated-light strength at a point is the product
  G(source -> point) * G(point -> detector).
* Detector noise is additive i.i.d. zero-mean Gaussian, independent of
  the signal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import codes
from .errors import (
    ConfigError,
    InsufficientSamples,
    InvalidOrder,
    NonIntegerRatio,
    OutOfDomain,
)
from .seeding import SCAN_SALT, derive_seed

SPEED_OF_SOUND_WATER = 1482.0  # m/s, distilled water near room temperature

MODE_SINGLE_PULSE = "single-pulse"
MODE_CODED = "coded"

_CM_TO_M = 100.0  # 1/cm -> 1/m for optical coefficients
_SCALE_GRID = 2048  # axial samples used to fix the phantom fluence scale


def integer_ratio(f_s: float, f_us: float) -> int:
    """The integer K = f_s / f_us; raises NonIntegerRatio otherwise."""
    if f_us <= 0 or f_s <= 0:
        raise NonIntegerRatio("rates must be positive")
    ratio = f_s / f_us
    k = round(ratio)
    if k < 1 or abs(ratio - k) > 1e-9 * k:
        raise NonIntegerRatio(f"f_s/f_us = {ratio} is not a natural number")
    return k


@dataclass(frozen=True)
class Phantom:
    """Optically diffuse medium probed along the acoustic axis.

    Optical coefficients are in 1/cm, geometry in meters.  The source
    and detector fibers sit on the boundary plane z = src_pos[2]; the
    medium spans boundary depth .. boundary depth + depth_extent.
    """

    mu_s_prime: float  # reduced scattering, 1/cm
    mu_a: float  # absorption, 1/cm
    src_pos: tuple[float, float, float]
    det_pos: tuple[float, float, float]
    sound_speed: float  # m/s
    depth_extent: float  # m

    def __post_init__(self):
        if self.mu_s_prime <= 0:
            raise ConfigError("mu_s_prime must be positive")
        if self.mu_a < 0:
            raise ConfigError("mu_a must be non-negative")
        if self.sound_speed <= 0:
            raise ConfigError("sound_speed must be positive")
        if self.depth_extent <= 0:
            raise ConfigError("depth_extent must be positive")
        if abs(self.src_pos[2] - self.det_pos[2]) > 1e-12:
            raise ConfigError("source and detector must lie on one z plane")

    @property
    def boundary_z(self) -> float:
        return self.src_pos[2]

    @property
    def transport_length_m(self) -> float:
        return 1.0 / (self.mu_s_prime * _CM_TO_M)

    @property
    def mu_eff_per_m(self) -> float:
        return math.sqrt(3.0 * self.mu_a * self.mu_s_prime) * _CM_TO_M


@dataclass(frozen=True)
class AcquisitionConfig:
    """Physical and sampling parameters of one acquisition.

    In coded mode ``order`` is the code length N (prime, 3 mod 4); in
    single-pulse mode it is the repetition period in carrier cycles, so
    the pulse spacing matches a coded run of the same order.
    """

    f_us: float  # ultrasound center frequency, Hz
    f_s: float  # sampling rate, Hz
    c: float  # sound speed used for depth mapping, m/s
    mode: str  # "coded" | "single-pulse"
    order: int
    duration_s: float
    noise_sigma: float = 0.0
    modulation_efficiency: float = 1.0
    seed: int = 0
    water_sound_speed: float = SPEED_OF_SOUND_WATER
    water_path_m: float = 0.0

    def __post_init__(self):
        integer_ratio(self.f_s, self.f_us)
        if self.mode not in (MODE_SINGLE_PULSE, MODE_CODED):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.mode == MODE_CODED and not codes.validate_order(self.order):
            raise InvalidOrder(
                f"coded mode needs a prime order congruent to 3 mod 4, got {self.order}"
            )
        if self.order < 1:
            raise ConfigError("order must be a positive integer")
        if self.c <= 0 or self.water_sound_speed <= 0:
            raise ConfigError("sound speeds must be positive")
        if self.duration_s < 0:
            raise ConfigError("duration_s must be non-negative")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be non-negative")
        if self.water_path_m < 0:
            raise ConfigError("water_path_m must be non-negative")

    @property
    def subsets_per_cycle(self) -> int:
        """K = f_s / f_us, the number of interleaved subsets."""
        return integer_ratio(self.f_s, self.f_us)

    @property
    def carrier_period_s(self) -> float:
        return 1.0 / self.f_us

    @property
    def prf(self) -> float:
        """Repetition rate of the pulse (or of the full code sequence), Hz."""
        return self.f_us / self.order

    @property
    def period_samples(self) -> int:
        """Samples per repetition period."""
        return self.order * self.subsets_per_cycle

    @property
    def n_samples(self) -> int:
        return round(self.duration_s * self.f_s)

    @property
    def bin_width_m(self) -> float:
        """Width of one fine depth bin, c / f_s."""
        return self.c / self.f_s

    @property
    def span_m(self) -> float:
        """Axial distance covered by one repetition period, N T c."""
        return self.order * self.c / self.f_us

    @property
    def inter_pulse_spacing_m(self) -> float:
        """Distance between repetitions in the water path above the medium."""
        return self.water_sound_speed / self.prf


@dataclass
class SampledStream:
    """Detector time series plus the configuration that produced it."""

    samples: np.ndarray
    f_s: float
    t0: float
    config_snapshot: AcquisitionConfig

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)

    def __len__(self) -> int:
        return self.samples.size


def pulse_waveform(f_us: float, f_s: float) -> np.ndarray:
    """One cycle of a unit-amplitude sine at f_us sampled at f_s (K samples)."""
    k = integer_ratio(f_s, f_us)
    return np.sin(2.0 * np.pi * np.arange(k) / k)


def _effective_endpoints(ph: Phantom) -> tuple[np.ndarray, np.ndarray]:
    shift = np.array([0.0, 0.0, ph.transport_length_m])
    return np.asarray(ph.src_pos) + shift, np.asarray(ph.det_pos) + shift


def _fluence_raw(ph: Phantom, points: np.ndarray) -> np.ndarray:
    """Unnormalized G(src->r) G(r->det) at an (n, 3) array of points."""
    src, det = _effective_endpoints(ph)
    mu = ph.mu_eff_per_m
    floor = ph.transport_length_m
    d1 = np.maximum(np.linalg.norm(points - src, axis=-1), floor)
    d2 = np.maximum(np.linalg.norm(points - det, axis=-1), floor)
    return np.exp(-mu * (d1 + d2)) / (d1 * d2)


def fluence_scale(ph: Phantom) -> float:
    """Phantom-wide normalization constant for simulated signal amplitudes.

    Fixed as the maximum kernel value on the axial column through the
    source fiber (where the product peaks), sampled on a dense grid, so
    profiles at different transducer positions stay on a common scale.
    """
    zs = np.linspace(ph.boundary_z, ph.boundary_z + ph.depth_extent, _SCALE_GRID + 1)
    pts = np.column_stack(
        [np.full_like(zs, ph.src_pos[0]), np.full_like(zs, ph.src_pos[1]), zs]
    )
    return float(_fluence_raw(ph, pts).max())


def fluence_profile(
    ph: Phantom,
    axis_positions: np.ndarray,
    axis_xy: tuple[float, float] = (0.0, 0.0),
) -> np.ndarray:
    """Relative modulated-light strength along the acoustic axis.

    axis_positions are absolute z coordinates and must lie inside the
    phantom.  The returned profile is normalized to peak 1.
    """
    zs = np.asarray(axis_positions, dtype=np.float64)
    lo, hi = ph.boundary_z, ph.boundary_z + ph.depth_extent
    if zs.size == 0:
        raise OutOfDomain("no positions given")
    if zs.min() < lo - 1e-12 or zs.max() > hi + 1e-12:
        raise OutOfDomain(
            f"positions must lie within [{lo}, {hi}] along the acoustic axis"
        )
    pts = np.column_stack(
        [np.full_like(zs, axis_xy[0]), np.full_like(zs, axis_xy[1]), zs]
    )
    raw = _fluence_raw(ph, pts)
    return raw / raw.max()


def axial_profile(
    cfg: AcquisitionConfig,
    ph: Phantom,
    axis_xy: tuple[float, float] = (0.0, 0.0),
) -> np.ndarray:
    """Fine-binned source vector x over one repetition period.

    Bin m sits at z = m * c / f_s; bins outside the phantom carry 0.
    Values are the diffusion kernel product divided by fluence_scale, so
    different transducer positions remain mutually comparable.
    """
    _check_geometry(cfg, ph)
    period = cfg.period_samples
    zs = np.arange(period) * cfg.bin_width_m
    inside = (zs >= ph.boundary_z) & (zs <= ph.boundary_z + ph.depth_extent)
    x = np.zeros(period)
    if inside.any():
        pts = np.column_stack(
            [
                np.full(inside.sum(), axis_xy[0]),
                np.full(inside.sum(), axis_xy[1]),
                zs[inside],
            ]
        )
        x[inside] = _fluence_raw(ph, pts) / fluence_scale(ph)
    return x


def _check_geometry(cfg: AcquisitionConfig, ph: Phantom) -> None:
    if abs(ph.sound_speed - cfg.c) > 1e-9 * cfg.c:
        raise ConfigError(
            f"phantom sound speed {ph.sound_speed} != acquisition c {cfg.c}"
        )
    if ph.boundary_z < 0:
        raise ConfigError("phantom boundary must be at non-negative depth")
    if ph.boundary_z + ph.depth_extent > cfg.span_m + 1e-12:
        # more than one pulse/sequence would occupy the medium at once
        raise ConfigError(
            f"phantom extends to {ph.boundary_z + ph.depth_extent:.4f} m but one "
            f"repetition period spans only {cfg.span_m:.4f} m"
        )


def _spatial_code_profile(cfg: AcquisitionConfig, rectified: bool) -> np.ndarray:
    """Pressure pattern along the axis at sample 0, one repetition period."""
    pulse = pulse_waveform(cfg.f_us, cfg.f_s)
    if rectified:
        pulse = np.abs(pulse)
    if cfg.mode == MODE_CODED:
        bits = codes.generate_s_sequence(cfg.order).bits.astype(np.float64)
        return np.repeat(bits, cfg.subsets_per_cycle) * np.tile(pulse, cfg.order)
    prof = np.zeros(cfg.period_samples)
    prof[: pulse.size] = pulse
    return prof


def _circular_correlate(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    """out[n] = sum_m x[m] * c[(m - n) mod P]."""
    p = x.size
    return np.fft.irfft(np.fft.rfft(x) * np.conj(np.fft.rfft(c)), n=p)


def simulate_stream(
    cfg: AcquisitionConfig,
    ph: Phantom,
    axis_xy: tuple[float, float] = (0.0, 0.0),
    *,
    rectified_carrier: bool = False,
) -> SampledStream:
    """Synthesize a detector stream for one transducer position.

    The zero-noise stream is periodic with cfg.period_samples; noise is
    drawn from ``default_rng(cfg.seed)``, so identical configurations
    give bit-identical streams.  ``rectified_carrier=True`` replaces the
    signed one-cycle sine by its absolute value; this diagnostic mode
    makes raw sample energies directly comparable between coded and
    single-pulse transmission but is not demodulatable.
    """
    n_samples = cfg.n_samples
    if n_samples < 1:
        raise InsufficientSamples(
            f"duration {cfg.duration_s} s at {cfg.f_s} Hz gives no samples"
        )
    x = axial_profile(cfg, ph, axis_xy)
    prof = _spatial_code_profile(cfg, rectified_carrier)
    base = cfg.modulation_efficiency * _circular_correlate(x, prof)
    reps = -(-n_samples // base.size)
    samples = np.tile(base, reps)[:n_samples]
    if cfg.noise_sigma > 0:
        rng = np.random.default_rng(cfg.seed)
        samples = samples + rng.normal(0.0, cfg.noise_sigma, n_samples)
    else:
        samples = samples.copy()
    t0 = cfg.water_path_m / cfg.water_sound_speed
    return SampledStream(samples, cfg.f_s, t0, cfg)


@dataclass
class ScanResult:
    """Output of a 2D transducer scan, normalized to global peak 1."""

    xs: np.ndarray  # scanned x positions, m
    ys: np.ndarray  # scanned y positions, m
    peak_map: np.ndarray  # (ny, nx) peak profile value per position
    stack: np.ndarray  # (ny, nx, depth bins) full profiles
    bin_width_m: float
    depth_origin_m: float = 0.0

    @property
    def depths(self) -> np.ndarray:
        return self.depth_origin_m + np.arange(self.stack.shape[-1]) * self.bin_width_m


def scan_positions(
    x_range: tuple[float, float], y_range: tuple[float, float], step: float
) -> tuple[np.ndarray, np.ndarray]:
    if step <= 0:
        raise ConfigError("scan step must be positive")
    nx = int(round((x_range[1] - x_range[0]) / step)) + 1
    ny = int(round((y_range[1] - y_range[0]) / step)) + 1
    return (
        x_range[0] + step * np.arange(max(nx, 1)),
        y_range[0] + step * np.arange(max(ny, 1)),
    )


def scan_2d(
    cfg: AcquisitionConfig,
    ph: Phantom,
    x_range: tuple[float, float],
    y_range: tuple[float, float],
    step: float,
    *,
    solver_kind: str = "spectral",
) -> ScanResult:
    """Run the full acquire/demultiplex/extract pipeline over an XY grid.

    Per-position noise streams use seeds derived from
    ``(cfg.seed, SCAN_SALT, iy, ix)``, so the result is independent of
    traversal order.
    """
    from .pipeline import reconstruct_profile  # local import, avoids cycle

    xs, ys = scan_positions(x_range, y_range, step)
    stack = None
    for iy, y in enumerate(ys):
        for ix, x in enumerate(xs):
            pos_cfg = replace(cfg, seed=derive_seed(cfg.seed, SCAN_SALT, iy, ix))
            stream = simulate_stream(pos_cfg, ph, axis_xy=(float(x), float(y)))
            profile = reconstruct_profile(stream, kind=solver_kind)
            if stack is None:
                stack = np.zeros((ys.size, xs.size, profile.values.size))
            stack[iy, ix] = profile.values
    peak = stack.max()
    if peak > 0:
        stack = stack / peak
    return ScanResult(
        xs=xs,
        ys=ys,
        peak_map=stack.max(axis=-1),
        stack=stack,
        bin_width_m=cfg.bin_width_m,
    )
