"""Rosenzweig-Porter random matrices.

Diagonal entries are standard normal; off-diagonal entries are normal with
variance epsilon**2 / n**gamma_exp.  Every realisation draws from its own
random stream, derived from ``(master_seed, realization_index)``, so any
subset of realisations can be regenerated independently and in any order.
"""
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import InputError, ResourceError

# bytes allowed for one matrix (packed triangle plus the dense working copy)
DEFAULT_MEMORY_BUDGET = 2 * 1024**3


@dataclass(frozen=True)
class EnsembleParams:
    n: int
    gamma_exp: float
    epsilon: float
    master_seed: int = 0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise InputError(f"matrix dimension must be an integer >= 2, got {self.n}")
        if not self.gamma_exp >= 0:
            raise InputError(f"gamma_exp must be >= 0, got {self.gamma_exp}")
        if not self.epsilon > 0:
            raise InputError(f"epsilon must be > 0, got {self.epsilon}")
        if not 0 <= int(self.master_seed) < 2**64:
            raise InputError("master_seed must be a 64-bit unsigned integer")
        var = self.offdiag_variance
        if not (np.isfinite(var) and var > 0):
            raise InputError(f"off-diagonal variance {var} is not finite and positive")

    @property
    def offdiag_variance(self):
        # log form: underflows to 0 (rejected) instead of overflowing
        return math.exp(2.0 * math.log(self.epsilon) - self.gamma_exp * math.log(self.n))

    def replace(self, **changes):
        fields = asdict(self)
        fields.update(changes)
        return EnsembleParams(**fields)


@dataclass(frozen=True)
class SymmetricMatrix:
    """Real symmetric matrix stored as its packed upper triangle.

    ``packed`` holds the entries H[i, j], i <= j, in ``np.triu_indices`` order.
    """

    order: int
    packed: np.ndarray

    def __post_init__(self):
        if self.packed.shape != (self.order * (self.order + 1) // 2,):
            raise InputError("packed storage has the wrong length for this order")

    def _offset(self, i, j):
        if i > j:
            i, j = j, i
        n = self.order
        return i * n - i * (i - 1) // 2 + (j - i)

    def __getitem__(self, index):
        i, j = index
        return self.packed[self._offset(i, j)]

    def diagonal(self):
        n = self.order
        rows = np.arange(n)
        return self.packed[rows * n - rows * (rows - 1) // 2]

    def to_dense(self):
        n = self.order
        dense = np.zeros((n, n))
        iu = np.triu_indices(n)
        dense[iu] = self.packed
        dense.T[iu] = self.packed
        return dense

    @classmethod
    def from_dense(cls, dense):
        dense = np.asarray(dense, dtype=float)
        n = dense.shape[0]
        if dense.shape != (n, n):
            raise InputError("matrix must be square")
        if not np.array_equal(dense, dense.T):
            raise InputError("matrix is not symmetric")
        return cls(n, dense[np.triu_indices(n)].copy())


def derive_stream(master_seed, realization_index):
    """Independent generator for one realisation.

    Uses numpy's SeedSequence spawning: the realisation index is the spawn
    key, so streams for different indices are statistically independent and
    reproducible without generating the preceding ones.
    """
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(int(realization_index),))
    return np.random.Generator(np.random.PCG64(seq))


def matrix_bytes(n):
    return 8 * (n * (n + 1) // 2 + n * n)


def sample_matrix(params, realization_index, memory_budget=DEFAULT_MEMORY_BUDGET):
    """Draw one matrix of the ensemble as a :class:`SymmetricMatrix`."""
    if realization_index < 0:
        raise InputError("realization_index must be non-negative")
    n = int(params.n)
    if matrix_bytes(n) > memory_budget:
        raise ResourceError(
            f"N={n} needs {matrix_bytes(n) / 2**20:.0f} MiB, budget is "
            f"{memory_budget / 2**20:.0f} MiB")
    rng = derive_stream(params.master_seed, realization_index)
    diag = rng.standard_normal(n)
    off = rng.standard_normal(n * (n - 1) // 2) * np.sqrt(params.offdiag_variance)

    packed = np.empty(n * (n + 1) // 2)
    rows = np.arange(n)
    starts = rows * n - rows * (rows - 1) // 2
    packed[starts] = diag
    mask = np.ones(packed.size, dtype=bool)
    mask[starts] = False
    packed[mask] = off
    return SymmetricMatrix(n, packed)


def sample_dense(params, realization_index, memory_budget=DEFAULT_MEMORY_BUDGET):
    """Same draw as :func:`sample_matrix`, returned as a dense array."""
    return sample_matrix(params, realization_index, memory_budget).to_dense()
