"""Central finite-difference helpers shared by the gradient tests."""

import numpy as np


def fd_grad(f, x, h=1e-5):
    """Central-difference gradient of the scalar ``f()`` wrt ``x``.

    ``x`` is perturbed in place coordinate by coordinate, so ``f`` must
    read it afresh on every call. Use float64 arrays.
    """
    g = np.zeros(x.shape, dtype=np.float64)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        keep = x[i]
        x[i] = keep + h
        fp = f()
        x[i] = keep - h
        fm = f()
        x[i] = keep
        g[i] = (fp - fm) / (2.0 * h)
    return g


def rel_err(analytic, numeric):
    """Max elementwise difference over the larger gradient magnitude."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = max(np.abs(analytic).max(), np.abs(numeric).max(), 1e-8)
    return float(np.abs(analytic - numeric).max() / scale)
