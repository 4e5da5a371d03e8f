"""Synthetic baseband I/Q frame generation for eight digital modulations.

All constellations are normalized to unit average symbol energy, so the
SNR knob in :func:`add_awgn` is defined per complex sample (Es/N0 at the
sample level) against empirically measured signal power.

Bit-to-symbol mappings (documented because several conventions exist):

* BPSK: 0 -> +1, 1 -> -1.
* QPSK / 8PSK: points at ``exp(j*(offset + 2*pi*p/M))`` for position
  ``p``; the point at position ``p`` carries the Gray code of ``p``.
  QPSK uses offset pi/4 (odd multiples of pi/4), 8PSK uses offset 0.
* PAM4: Gray-coded real levels {-3,-1,+1,+3}/sqrt(5), ascending level
  order Gray-labeled (00,01,11,10).
* QAM16/QAM64: square constellations; the first half of the bits selects
  the I level, the second half the Q level, each through the Gray PAM
  table; scaled by 1/sqrt(10) and 1/sqrt(42).
* CPFSK: modulation index 0.5, rectangular frequency pulse.
* GFSK: modulation index 0.5, Gaussian frequency pulse with BT = 0.35
  spanning 4 symbols (edge-replicated at frame boundaries).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

__all__ = [
    "ModulationScheme",
    "IQFrame",
    "GenConfig",
    "Dataset",
    "CLASS_NAMES",
    "modulate",
    "add_awgn",
    "to_iq_frame",
    "from_rows",
    "generate_dataset",
    "filter_classes",
    "filter_snrs",
]


class ModulationScheme(IntEnum):
    """The eight digital modulations, ordinal ids in alphabetical order."""

    PSK8 = 0
    BPSK = 1
    CPFSK = 2
    GFSK = 3
    PAM4 = 4
    QAM16 = 5
    QAM64 = 6
    QPSK = 7


CLASS_NAMES = ["8PSK", "BPSK", "CPFSK", "GFSK", "PAM4", "QAM16", "QAM64", "QPSK"]

BITS_PER_SYMBOL = {
    ModulationScheme.PSK8: 3,
    ModulationScheme.BPSK: 1,
    ModulationScheme.CPFSK: 1,
    ModulationScheme.GFSK: 1,
    ModulationScheme.PAM4: 2,
    ModulationScheme.QAM16: 4,
    ModulationScheme.QAM64: 6,
    ModulationScheme.QPSK: 2,
}

CPFSK_MOD_INDEX = 0.5
GFSK_MOD_INDEX = 0.5
GFSK_BT = 0.35
GFSK_SPAN_SYMBOLS = 4


@dataclass
class IQFrame:
    """One labeled signal sample: a 2 x N float32 matrix plus tags.

    Row 0 is the in-phase (real) part, row 1 the quadrature (imaginary)
    part.
    """

    class_id: int
    snr_db: int
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float32)
        if self.samples.ndim != 2 or self.samples.shape[0] != 2:
            raise ValueError(f"samples must be 2 x N, got shape {self.samples.shape}")
        if self.samples.shape[1] < 1:
            raise ValueError("frame must contain at least one sample")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("frame contains non-finite values")

    @property
    def frame_len(self):
        return self.samples.shape[1]


@dataclass
class GenConfig:
    """Parameters of the synthetic corpus generator."""

    frames_per_class_per_snr: int = 1000
    snr_list: tuple[int, ...] = tuple(range(-6, 16, 2))
    frame_len: int = 128
    samples_per_symbol: int = 8
    seed: int = 0
    # Optional subset of schemes; None means all eight.
    classes: tuple[ModulationScheme, ...] | None = None

    def __post_init__(self):
        self.snr_list = tuple(int(s) for s in self.snr_list)
        if not self.snr_list:
            raise ValueError("snr_list must be non-empty")
        if self.frame_len % self.samples_per_symbol != 0:
            raise ValueError(
                f"frame_len {self.frame_len} not divisible by "
                f"samples_per_symbol {self.samples_per_symbol}"
            )
        if self.classes is not None:
            self.classes = tuple(ModulationScheme(c) for c in self.classes)

    @property
    def scheme_list(self):
        if self.classes is None:
            return tuple(ModulationScheme)
        return self.classes


@dataclass
class Dataset:
    """An ordered list of frames plus the class-name table they index."""

    frames: list[IQFrame] = field(default_factory=list)
    class_names: list[str] = field(default_factory=lambda: list(CLASS_NAMES))

    def __post_init__(self):
        for f in self.frames:
            if not 0 <= f.class_id < len(self.class_names):
                raise ValueError(f"class_id {f.class_id} out of range")
        lens = {f.frame_len for f in self.frames}
        if len(lens) > 1:
            raise ValueError(f"frames have mixed lengths: {sorted(lens)}")

    def __len__(self):
        return len(self.frames)

    @property
    def frame_len(self):
        return self.frames[0].frame_len if self.frames else 0


def _gray_symbol_table(points):
    """Map bit value -> constellation point so adjacent points differ in one bit."""
    m = len(points)
    table = np.empty(m, dtype=np.complex128)
    for p in range(m):
        table[p ^ (p >> 1)] = points[p]
    return table


def _psk_points(m, offset):
    return np.exp(1j * (offset + 2.0 * np.pi * np.arange(m) / m))


def _pam_levels(m):
    levels = 2.0 * np.arange(m) - (m - 1)
    return levels / math.sqrt(np.mean(levels**2))


_QPSK_TABLE = _gray_symbol_table(_psk_points(4, np.pi / 4))
_PSK8_TABLE = _gray_symbol_table(_psk_points(8, 0.0))
_PAM4_TABLE = _gray_symbol_table(_pam_levels(4).astype(np.complex128))
# Square QAM: independent Gray PAM on each axis, joint unit-energy scale.
_PAM4_RAW = _gray_symbol_table((2.0 * np.arange(4) - 3).astype(np.complex128)).real
_PAM8_RAW = _gray_symbol_table((2.0 * np.arange(8) - 7).astype(np.complex128)).real


def _bits_to_ints(bits, width):
    """Pack consecutive bit groups MSB-first into integers."""
    bits = np.asarray(bits, dtype=np.int64)
    groups = bits.reshape(-1, width)
    weights = 1 << np.arange(width - 1, -1, -1)
    return groups @ weights


def _gaussian_freq_pulse(sps):
    """Unit-DC-gain Gaussian filter taps for the GFSK frequency pulse."""
    half = GFSK_SPAN_SYMBOLS * sps // 2
    t = np.arange(-half, half + 1) / sps
    taps = np.exp(-2.0 * np.pi**2 * GFSK_BT**2 * t**2 / np.log(2.0))
    return taps / taps.sum()


def _phase_modulate(sym_values, sps, mod_index, taps=None):
    """Continuous-phase FSK from NRZ symbol values in {-1,+1}."""
    nrz = np.repeat(sym_values.astype(np.float64), sps)
    if taps is not None:
        pad = (len(taps) - 1) // 2
        padded = np.concatenate(
            [np.full(pad, nrz[0]), nrz, np.full(pad, nrz[-1])]
        )
        nrz = np.convolve(padded, taps, mode="valid")
    phase = np.cumsum(nrz) * (np.pi * mod_index / sps)
    return np.exp(1j * phase)


def modulate(scheme, bits, sps, rng=None):
    """Map a bit sequence to baseband complex samples with unit symbol energy.

    ``rng`` is accepted for interface uniformity; none of the current
    schemes draws randomness during modulation.
    """
    scheme = ModulationScheme(scheme)
    if sps < 1:
        raise ValueError("sps must be >= 1")
    bits = np.asarray(bits, dtype=np.int64)
    bps = BITS_PER_SYMBOL[scheme]
    if bits.size == 0 or bits.size % bps != 0:
        raise ValueError(
            f"bit count {bits.size} is not a positive multiple of "
            f"{bps} (bits per {scheme.name} symbol)"
        )
    vals = _bits_to_ints(bits, bps)

    if scheme == ModulationScheme.BPSK:
        symbols = 1.0 - 2.0 * vals + 0j
    elif scheme == ModulationScheme.QPSK:
        symbols = _QPSK_TABLE[vals]
    elif scheme == ModulationScheme.PSK8:
        symbols = _PSK8_TABLE[vals]
    elif scheme == ModulationScheme.PAM4:
        symbols = _PAM4_TABLE[vals]
    elif scheme == ModulationScheme.QAM16:
        i = _PAM4_RAW[vals >> 2]
        q = _PAM4_RAW[vals & 0b11]
        symbols = (i + 1j * q) / math.sqrt(10.0)
    elif scheme == ModulationScheme.QAM64:
        i = _PAM8_RAW[vals >> 3]
        q = _PAM8_RAW[vals & 0b111]
        symbols = (i + 1j * q) / math.sqrt(42.0)
    elif scheme == ModulationScheme.CPFSK:
        return _phase_modulate(1.0 - 2.0 * vals, sps, CPFSK_MOD_INDEX)
    elif scheme == ModulationScheme.GFSK:
        return _phase_modulate(
            1.0 - 2.0 * vals, sps, GFSK_MOD_INDEX, taps=_gaussian_freq_pulse(sps)
        )
    else:  # pragma: no cover - IntEnum conversion rejects unknown values
        raise ValueError(f"unsupported scheme: {scheme!r}")

    return np.repeat(symbols, sps)


def add_awgn(signal, snr_db, rng):
    """Add circularly-symmetric white Gaussian noise at the requested SNR.

    Noise variance per complex sample is ``P_signal / 10**(snr_db/10)``
    with the signal power measured over the given frame, split equally
    between the I and Q components. ``snr_db = inf`` returns the input.
    """
    signal = np.asarray(signal, dtype=np.complex128)
    if signal.size == 0:
        raise ValueError("signal must be non-empty")
    if math.isinf(snr_db) and snr_db > 0:
        return signal.copy()
    p_signal = float(np.mean(np.abs(signal) ** 2))
    noise_var = p_signal / (10.0 ** (snr_db / 10.0))
    scale = math.sqrt(noise_var / 2.0)
    noise = rng.standard_normal(signal.size) + 1j * rng.standard_normal(signal.size)
    return signal + scale * noise


def to_iq_frame(signal, class_id, snr_db):
    """Pack a complex sequence into a 2 x N frame (row 0 = I, row 1 = Q)."""
    signal = np.asarray(signal)
    samples = np.stack([signal.real, signal.imag]).astype(np.float32)
    return IQFrame(class_id=int(class_id), snr_db=int(snr_db), samples=samples)


def from_rows(frame):
    """Inverse of :func:`to_iq_frame`: rebuild the complex sequence."""
    return frame.samples[0].astype(np.float64) + 1j * frame.samples[1].astype(np.float64)


def _frame_rng(seed, frame_index):
    # Each frame owns an independent stream, so any generation schedule
    # (serial or parallel) produces identical bytes.
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(frame_index)]))


def _synthesize_frame(scheme, snr_db, cfg, rng):
    sps = cfg.samples_per_symbol
    n_sym = cfg.frame_len // sps
    bps = BITS_PER_SYMBOL[scheme]
    # One guard symbol so a random timing offset within a symbol period
    # still yields frame_len samples.
    bits = rng.integers(0, 2, size=(n_sym + 1) * bps)
    offset = int(rng.integers(0, sps))
    phase = rng.uniform(0.0, 2.0 * np.pi)
    clean = modulate(scheme, bits, sps)[offset : offset + cfg.frame_len]
    clean = clean * np.exp(1j * phase)
    noisy = add_awgn(clean, snr_db, rng)
    return to_iq_frame(noisy, int(scheme), snr_db)


def generate_dataset(config):
    """Generate the labeled synthetic corpus described by ``config``.

    Deterministic for a fixed seed: every frame's bits, timing offset,
    carrier phase, and noise come from a stream derived from
    (seed, frame index).
    """
    schemes = config.scheme_list
    frames = []
    index = 0
    for scheme in schemes:
        for snr_db in config.snr_list:
            for _ in range(config.frames_per_class_per_snr):
                rng = _frame_rng(config.seed, index)
                frames.append(_synthesize_frame(scheme, snr_db, config, rng))
                index += 1
    return Dataset(frames=frames, class_names=list(CLASS_NAMES))


def filter_classes(dataset, class_ids):
    """Subset of a dataset containing only the given class ids."""
    keep = {int(c) for c in class_ids}
    frames = [f for f in dataset.frames if f.class_id in keep]
    return Dataset(frames=frames, class_names=list(dataset.class_names))


def filter_snrs(dataset, snrs):
    """Subset of a dataset containing only the given SNR tags."""
    keep = {int(s) for s in snrs}
    frames = [f for f in dataset.frames if f.snr_db in keep]
    return Dataset(frames=frames, class_names=list(dataset.class_names))
