"""Selection between the compiled filtering kernels and the NumPy fallback.

The compiled extension is optional: when the import fails the package
still works through the reference Python implementation, just slower.
``KPDEREV_BACKEND`` can force a choice globally; an explicit ``backend``
argument wins over the environment.
"""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import DereverbError, NumericsError

try:
    from . import _core
except ImportError:  # extension not built
    _core = None

BACKENDS = ("native", "python")


def have_native() -> bool:
    return _core is not None


def default_backend() -> str:
    env = os.environ.get("KPDEREV_BACKEND")
    if env:
        if env not in BACKENDS:
            raise DereverbError(f"KPDEREV_BACKEND={env!r}, expected one of {BACKENDS}")
        if env == "native" and not have_native():
            raise DereverbError("KPDEREV_BACKEND=native but the compiled kernels are not built")
        return env
    return "native" if have_native() else "python"


def resolve(backend: str | None, counter=None) -> str:
    """Pick the backend for one processing call."""
    if counter is not None:
        if backend == "native":
            raise DereverbError("multiply counting instruments the python backend only")
        return "python"
    if backend is None:
        return default_backend()
    if backend not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}, got {backend!r}")
    if backend == "native" and not have_native():
        raise DereverbError("compiled kernels are not built; install with a C compiler "
                            "or pass backend='python'")
    return backend


def run_native(algorithm: str, observed: np.ndarray, s_nn: np.ndarray,
               lam: np.ndarray, params: dict, workers: int = 1) -> np.ndarray:
    """Run a compiled kernel over the grid, optionally splitting bins
    across threads. Bins are independent, so the result does not depend
    on the partitioning."""
    if _core is None:
        raise DereverbError("compiled kernels are not built")
    # bins-major layout keeps each bin's frame sequence contiguous
    y = np.ascontiguousarray(observed.T)
    s = np.ascontiguousarray(s_nn.T)
    w = np.ascontiguousarray(lam.T)
    out = np.empty_like(y)
    f_bins = y.shape[0]
    workers = max(1, min(int(workers), f_bins))

    cap = params.get("cap", 16.0)
    if algorithm == "fcp":
        def chunk(f0, f1):
            return _core.fcp_grid(y, s, w, params["k"], params["alpha"], cap, f0, f1, out)
    elif algorithm == "kpfcp":
        def chunk(f0, f1):
            return _core.kpfcp_grid(y, s, w, params["p"], params["k1"], params["k2"],
                                    params["alpha1"], params["alpha2"], cap, f0, f1, out)
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")

    if workers == 1:
        statuses = [chunk(0, f_bins)]
    else:
        step = (f_bins + workers - 1) // workers
        spans = [(lo, min(lo + step, f_bins)) for lo in range(0, f_bins, step)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            statuses = list(pool.map(lambda span: chunk(*span), spans))
    for status in statuses:
        if status >= 0:
            frame, bin_index = divmod(int(status), f_bins)
            raise NumericsError(frame, bin_index, f"{algorithm} output (native)")
    return np.ascontiguousarray(out.T)
