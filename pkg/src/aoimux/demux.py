"""Circulant system construction, inversion and stream demultiplexing.

The measurement matrix S has the code sequence as its first row and each
following row cyclically shifted right by one, i.e. S[r, c] =
bits[(c - r) mod N].  Applying S is then a circular convolution with the
index-reversed sequence, which gives two interchangeable solvers: a
dense LU factorization (the reference) and an FFT circular
deconvolution (O(N log N) per frame, used for long streams).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.linalg

from .codes import SSequence, circulant_matrix
from .errors import (
    InsufficientSamples,
    LengthMismatch,
    NonIntegerRatio,
    OrderTooLarge,
    SingularSystem,
)
from .simulator import SampledStream, integer_ratio

_DENSE_MAX = 1024


class InverseKind(Enum):
    DENSE = "dense"
    SPECTRAL = "spectral"


@dataclass
class MultiplexedFrame:
    """One code period of measurements at the carrier rate for one subset."""

    values: np.ndarray
    subset_index: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)


@dataclass
class DepthProfile:
    """Reconstructed signal versus depth along the acoustic axis."""

    values: np.ndarray
    bin_width_m: float
    depth_origin_m: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.bin_width_m <= 0:
            raise ValueError("bin_width_m must be positive")

    def __len__(self) -> int:
        return self.values.size

    @property
    def depths(self) -> np.ndarray:
        return self.depth_origin_m + np.arange(self.values.size) * self.bin_width_m

    @property
    def span_m(self) -> float:
        return self.values.size * self.bin_width_m


class CirculantSystem:
    """Immutable solver for S x = y; shareable across threads once built."""

    def __init__(self, sequence: SSequence, kind: InverseKind):
        self.sequence = sequence
        self.order = sequence.order
        self.kind = kind
        # first column of S; S x is a circular convolution with it
        kernel = np.roll(sequence.bits[::-1], 1).astype(np.float64)
        spectrum = np.fft.rfft(kernel)
        mags = np.abs(spectrum)
        if mags.max() == 0.0 or mags.min() < 1e-9 * mags.max():
            raise SingularSystem(
                f"circulant spectrum of order {self.order} is numerically singular"
            )
        self._spectrum = spectrum
        self._lu = None
        if kind is InverseKind.DENSE:
            self._lu = scipy.linalg.lu_factor(self.matrix().astype(np.float64))

    def matrix(self) -> np.ndarray:
        """Dense integer S, rows are successive right shifts of the sequence."""
        return circulant_matrix(self.sequence)

    @property
    def spectrum(self) -> np.ndarray:
        """DFT of the solving kernel; its DC term equals the row weight."""
        return self._spectrum

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Forward map y = S x (spectral, exact to rounding)."""
        x = np.asarray(x, dtype=np.float64)
        return np.fft.irfft(np.fft.rfft(x, axis=-1) * self._spectrum, n=self.order, axis=-1)

    def solve(self, y: np.ndarray) -> np.ndarray:
        return self.solve_many(np.asarray(y, dtype=np.float64)[None, :])[0]

    def solve_many(self, ys: np.ndarray) -> np.ndarray:
        """Solve S x = y for each row of ys, shape (..., N)."""
        ys = np.asarray(ys, dtype=np.float64)
        if ys.shape[-1] != self.order:
            raise LengthMismatch(
                f"frame length {ys.shape[-1]} != system order {self.order}"
            )
        if self.kind is InverseKind.DENSE:
            flat = ys.reshape(-1, self.order)
            sol = scipy.linalg.lu_solve(self._lu, flat.T).T
            return sol.reshape(ys.shape)
        return np.fft.irfft(
            np.fft.rfft(ys, axis=-1) / self._spectrum, n=self.order, axis=-1
        )

    def condition_number(self) -> float:
        """Spectral 2-norm condition number (singular values of a circulant
        are the magnitudes of its eigenvalues)."""
        full = np.fft.fft(np.roll(self.sequence.bits[::-1], 1).astype(np.float64))
        mags = np.abs(full)
        return float(mags.max() / mags.min())


def build_system(
    seq: SSequence, kind: InverseKind | str = InverseKind.DENSE
) -> CirculantSystem:
    """Build the solver for the given sequence; kind picks the inverse path."""
    if isinstance(kind, str):
        kind = InverseKind(kind)
    return CirculantSystem(seq, kind)


def demultiplex_frame(
    sys: CirculantSystem, frame: MultiplexedFrame | np.ndarray
) -> np.ndarray:
    """Recover x from one multiplexed frame y by solving S x = y."""
    values = frame.values if isinstance(frame, MultiplexedFrame) else frame
    return sys.solve(values)


def analytic_inverse_check(sys: CirculantSystem) -> float:
    """Max elementwise gap between the solver inverse and the closed form.

    The closed-form inverse of an order-N system is
    (2 / (N + 1)) * (2 S^T - J); it is multiplied back against S and
    checked against the identity before being used as the reference.
    """
    n = sys.order
    if n > _DENSE_MAX:
        raise OrderTooLarge(f"dense check limited to order {_DENSE_MAX}, got {n}")
    s = sys.matrix().astype(np.float64)
    closed = (2.0 / (n + 1)) * (2.0 * s.T - np.ones((n, n)))
    if np.abs(s @ closed - np.eye(n)).max() > 1e-9:
        raise SingularSystem("closed-form inverse failed the identity check")
    solver_inv = sys.solve_many(np.eye(n)).T  # column i solves S x = e_i
    return float(np.abs(solver_inv - closed).max())


def _frames_array(stream_samples: np.ndarray, n: int, k: int) -> np.ndarray:
    """Reshape the leading complete periods to (periods, n, k)."""
    if n < 1 or k < 1:
        raise LengthMismatch("order and subset count must be positive")
    periods = stream_samples.size // (n * k)
    if periods < 1:
        raise InsufficientSamples(
            f"{stream_samples.size} samples < one period of {n * k}"
        )
    # trailing partial period is discarded
    return stream_samples[: periods * n * k].reshape(periods, n, k)


def deinterleave(
    stream: SampledStream, n: int, k: int
) -> list[list[MultiplexedFrame]]:
    """Split a stream into K phase-offset subsets of length-n frames.

    Subset j holds samples j, j+k, j+2k, ...; adjacent subsets are
    offset by one sample (T / K) in time.
    """
    cfg = stream.config_snapshot
    if cfg is not None and integer_ratio(stream.f_s, cfg.f_us) != k:
        raise NonIntegerRatio(
            f"stream metadata implies K = {integer_ratio(stream.f_s, cfg.f_us)}, "
            f"got {k}"
        )
    arr = _frames_array(stream.samples, n, k)
    return [
        [MultiplexedFrame(arr[p, :, j], j) for p in range(arr.shape[0])]
        for j in range(k)
    ]


def reinterleave(subsets: list[list[MultiplexedFrame]]) -> np.ndarray:
    """Inverse of deinterleave: merge subset frames back into one stream."""
    k = len(subsets)
    periods = len(subsets[0])
    n = subsets[0][0].values.size
    arr = np.empty((periods, n, k))
    for j, frames in enumerate(subsets):
        if len(frames) != periods:
            raise LengthMismatch("subsets carry different frame counts")
        for p, frame in enumerate(frames):
            arr[p, :, j] = frame.values
    return arr.reshape(-1)


def average_periods(stream: SampledStream) -> DepthProfile:
    """Mean over complete repetition periods of a single-pulse stream.

    No inversion is needed without coding; folding the stream at the
    repetition period directly yields the depth-resolved signal.
    """
    cfg = stream.config_snapshot
    period = cfg.period_samples
    periods = stream.samples.size // period
    if periods < 1:
        raise InsufficientSamples(
            f"{stream.samples.size} samples < one period of {period}"
        )
    folded = stream.samples[: periods * period].reshape(periods, period).mean(axis=0)
    return DepthProfile(folded, bin_width_m=cfg.c / stream.f_s)


def demultiplex_stream(sys: CirculantSystem, stream: SampledStream) -> DepthProfile:
    """Invert a coded stream into the single-pulse-equivalent depth signal.

    Deinterleaves into K subsets, solves each frame, averages solutions
    across code periods and re-merges the subsets in time order.  Sample
    i of the result maps to depth i * c / f_s; the full profile spans
    one code period, N T c.
    """
    cfg = stream.config_snapshot
    n = sys.order
    if cfg.mode == "coded" and cfg.order != n:
        raise LengthMismatch(
            f"stream was coded with order {cfg.order}, system has order {n}"
        )
    k = integer_ratio(stream.f_s, cfg.f_us)
    arr = _frames_array(stream.samples, n, k)  # (periods, n, k)
    frames = np.moveaxis(arr, 2, 0)  # (k, periods, n)
    solved = sys.solve_many(frames)
    averaged = solved.mean(axis=1)  # (k, n)
    profile = averaged.T.reshape(-1)  # index i*k + j <- subset j, element i
    return DepthProfile(profile, bin_width_m=cfg.c / stream.f_s)
