"""Numerical tolerances and size caps shared across the package.

Every function that takes a ``tol``-style keyword falls back to the values
held in :data:`TOLERANCES` when the keyword is left as ``None``, so a caller
can tighten or loosen everything in one place.
"""

from __future__ import annotations

import os
from dataclasses import dataclass


@dataclass
class Tolerances:
    row_sum: float = 1e-12
    stationary_residual: float = 1e-12
    reversibility: float = 1e-8
    imaginary: float = 1e-8
    constant_eigvec: float = 1e-6
    jacobi: float = 1e-15
    jacobi_max_sweeps: int = 100
    # Symmetric problems larger than this go to LAPACK instead of Jacobi.
    jacobi_max_n: int = 64
    power: float = 1e-10
    power_max_iter: int = 200_000
    max_m: int = 12
    max_states: int = 4096
    max_k_enumerate: int = 8


TOLERANCES = Tolerances()


def thread_count() -> int:
    """Worker count for row-parallel estimation (``DACHAINS_THREADS``)."""
    try:
        return max(1, int(os.environ.get("DACHAINS_THREADS", "1")))
    except ValueError:
        return 1
