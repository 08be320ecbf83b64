"""Multiply-accumulate cost models and the runtime multiply counter.

The closed-form models give the per-TF-unit cost of each algorithm as a
polynomial in the filter sizes. The counter instruments the reference
(pure Python) filtering path and tallies real multiply units: a complex
times complex multiply-accumulate counts 4, real times complex counts 2,
real times real counts 1. The models assume a slightly more expensive
update (no reuse of the Hermitian matrix-vector product), so measured
counts land below the model but well within a factor of two.
"""

from dataclasses import dataclass

from .errors import DereverbError

# Reported cost of the neural direct-path stage, per TF unit; exposed for
# context in complexity reports, never added to the filter models.
GTCRN_MACS_PER_TF_UNIT = 2100


def mac_fcp(k: int) -> int:
    """Model for the full-filter online algorithm with K taps."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return 16 * k * k + 20 * k + 16


def mac_kpfcp(p: int, k1: int, k2: int) -> int:
    """Model for the Kronecker-factored algorithm of order P over (K1, K2)."""
    if p < 1 or k1 < 1 or k2 < 1:
        raise ValueError("p, k1 and k2 must all be >= 1")
    return 16 * p * p * (k1 * k1 + k2 * k2) + 8 * p * k1 * k2 + 16 * p * k1 + 20 * p * k2 + 24


def crossover(k1: int, k2: int) -> int | None:
    """Smallest P at which the factored model stops being cheaper.

    Searches P = 1 .. min(k1, k2) + 1 and returns the first P with
    mac_kpfcp(P) >= mac_fcp(k1*k2), or None if parity is never reached
    inside that range.
    """
    if k1 < 1 or k2 < 1:
        raise ValueError("k1 and k2 must be >= 1")
    full = mac_fcp(k1 * k2)
    for p in range(1, min(k1, k2) + 2):
        if mac_kpfcp(p, k1, k2) >= full:
            return p
    return None


@dataclass(frozen=True)
class MacModel:
    algorithm: str
    params: tuple
    macs_per_tf_unit: int

    @classmethod
    def for_fcp(cls, k: int) -> "MacModel":
        return cls("fcp_online", (k,), mac_fcp(k))

    @classmethod
    def for_kpfcp(cls, p: int, k1: int, k2: int) -> "MacModel":
        return cls("kp_fcp", (p, k1, k2), mac_kpfcp(p, k1, k2))


class MacCounter:
    """Accumulates real multiply units along the filtering hot path."""

    __slots__ = ("total",)

    def __init__(self):
        self.total = 0

    def add_cc(self, n: int) -> None:
        """n complex*complex multiply-accumulates."""
        self.total += 4 * n

    def add_rc(self, n: int) -> None:
        """n real*complex multiplies."""
        self.total += 2 * n

    def add_rr(self, n: int) -> None:
        """n real*real multiplies."""
        self.total += n


def measure_macs(algorithm: str, observed, s_nn, params, instrument: bool = True) -> float:
    """Run ``algorithm`` over the given grids with counting enabled and
    return the measured multiplies per TF unit."""
    if not instrument:
        raise DereverbError("multiply counting requested with instrumentation disabled")
    from . import fcp, kpfcp  # local import, avoids a cycle

    counter = MacCounter()
    if algorithm == "fcp":
        fcp.fcp_process(observed, s_nn, params, backend="python", counter=counter)
    elif algorithm == "kpfcp":
        kpfcp.kpfcp_process(observed, s_nn, params, backend="python", counter=counter)
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    units = observed.data.shape[0] * observed.data.shape[1]
    return counter.total / units


def sweep_rows(k1: int, k2: int, p_values) -> list:
    """(P, mac_kpfcp, mac_fcp) rows for a model comparison sweep."""
    full = mac_fcp(k1 * k2)
    return [(p, mac_kpfcp(p, k1, k2), full) for p in p_values]
