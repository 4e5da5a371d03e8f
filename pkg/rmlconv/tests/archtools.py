import pickle

import numpy as np

ARCHIVE_MODS = (
    "8PSK", "AM-DSB", "AM-SSB", "BPSK", "CPFSK", "GFSK",
    "PAM4", "QAM16", "QAM64", "QPSK", "WBFM",
)
ARCHIVE_SNRS = tuple(range(-20, 20, 2))


def build_archive(frames_per_cell, seed=0):
    """Synthetic stand-in with the 2016.10A structure (11 mods x 20 SNRs)."""
    rng = np.random.default_rng(seed)
    data = {}
    offsets = np.arange(frames_per_cell, dtype=np.float32)[:, None, None]
    for mod in ARCHIVE_MODS:
        for snr in ARCHIVE_SNRS:
            base = rng.standard_normal((2, 128)).astype(np.float32)
            data[(mod, snr)] = base[None] + 0.001 * offsets
    return data


def dump_archive(data, path):
    with open(path, "wb") as fh:
        pickle.dump(data, fh, protocol=2)
