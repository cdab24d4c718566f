"""Allocation vectors, relabelling orbits and the random label-switching kernel.

Allocation space ``Y = {1..k}^m`` is indexed in ``itertools.product`` order,
so for ``m = 2, k = 2`` the states are ``11, 12, 21, 22``. Every matrix on
``Y`` built anywhere in the package uses this order.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass

import numpy as np

from .config import TOLERANCES
from .errors import CapExceededError


@dataclass(frozen=True)
class AllocationState:
    labels: tuple
    k: int

    def __post_init__(self):
        labels = tuple(int(v) for v in self.labels)
        object.__setattr__(self, "labels", labels)
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if len(labels) < 1:
            raise ValueError("allocation needs at least one observation")
        if any(v < 1 or v > self.k for v in labels):
            raise ValueError(f"labels must lie in 1..{self.k}: {labels}")

    @property
    def m(self):
        return len(self.labels)

    @property
    def distinct(self):
        return len(set(self.labels))

    def partition(self):
        """Clustering of observation indices (1-based), independent of the labels."""
        groups = {}
        for i, v in enumerate(self.labels, start=1):
            groups.setdefault(v, []).append(i)
        return frozenset(frozenset(g) for g in groups.values())

    def index(self):
        return state_index(self.labels, self.k)

    def __str__(self):
        if self.k <= 9:
            return "".join(str(v) for v in self.labels)
        return ",".join(str(v) for v in self.labels)

    @classmethod
    def parse(cls, text, k):
        text = text.strip()
        parts = text.split(",") if "," in text else list(text)
        return cls(tuple(int(p) for p in parts), k)


@dataclass(frozen=True)
class Permutation:
    """Bijection of ``1..k``; ``sigma(j) == mapping[j - 1]``."""

    mapping: tuple

    def __post_init__(self):
        mapping = tuple(int(v) for v in self.mapping)
        object.__setattr__(self, "mapping", mapping)
        if sorted(mapping) != list(range(1, len(mapping) + 1)):
            raise ValueError(f"not a permutation of 1..{len(mapping)}: {mapping}")

    @property
    def k(self):
        return len(self.mapping)

    def __call__(self, j):
        return self.mapping[j - 1]

    def inverse(self):
        inv = [0] * self.k
        for j, sj in enumerate(self.mapping, start=1):
            inv[sj - 1] = j
        return Permutation(tuple(inv))

    @classmethod
    def identity(cls, k):
        return cls(tuple(range(1, k + 1)))

    @classmethod
    def from_cycles(cls, text, k):
        """Parse cycle notation such as ``"(1324)"`` or ``"(1 3)(2 4)"``.

        Single-digit labels may be written without separators.
        """
        mapping = list(range(1, k + 1))
        for body in re.findall(r"\(([^)]*)\)", text):
            items = body.replace(",", " ").split()
            if len(items) == 1 and len(items[0]) > 1:
                items = list(items[0])
            cyc = [int(v) for v in items]
            for a, b in zip(cyc, cyc[1:] + cyc[:1]):
                mapping[a - 1] = b
        return cls(tuple(mapping))


def apply_permutation(sigma, y):
    """Relabel ``y`` so that label ``j`` becomes ``sigma(j)``."""
    if sigma.k != y.k:
        raise ValueError(f"permutation on {sigma.k} labels applied to k={y.k}")
    return AllocationState(tuple(sigma(v) for v in y.labels), y.k)


@dataclass(frozen=True)
class Orbit:
    members: tuple
    size: int


def orbit_size(y):
    return math.perm(y.k, y.distinct)


def orbit_of(y, cap=None):
    """All relabellings of ``y``, deduplicated, in state-index order."""
    cap = TOLERANCES.max_k_enumerate if cap is None else cap
    if y.k > cap:
        raise CapExceededError(f"k={y.k} exceeds enumeration cap {cap}")
    seen = {}
    for perm in itertools.permutations(range(1, y.k + 1)):
        w = apply_permutation(Permutation(perm), y)
        seen[w.labels] = w
    members = tuple(sorted(seen.values(), key=lambda s: s.index()))
    return Orbit(members, len(members))


def r_sample(y, rng):
    """One label-switching move: a uniformly random relabelling of ``y``."""
    perm = rng.permutation(y.k) + 1
    return apply_permutation(Permutation(tuple(perm)), y)


def flip(labels):
    """Swap labels 1 and 2 (the only nontrivial relabelling when ``k = 2``)."""
    return tuple(3 - v for v in labels)


def state_index(labels, k):
    idx = 0
    for v in labels:
        idx = idx * k + (v - 1)
    return idx


def all_states(m, k):
    """Label array of shape ``(k**m, m)`` in state-index order."""
    return np.array(list(itertools.product(range(1, k + 1), repeat=m)), dtype=int).reshape(-1, m)


def canonical_form(labels):
    """Relabel by order of first appearance; equal forms <=> same orbit."""
    first = {}
    return tuple(first.setdefault(v, len(first) + 1) for v in labels)


def r_matrix(m, k, cap=None):
    """Label-switching kernel ``R[y, y'] = 1{y' in O_y} / |O_y|`` on ``{1..k}^m``."""
    cap = TOLERANCES.max_states if cap is None else cap
    if m < 1 or k < 1:
        raise ValueError("need m >= 1 and k >= 1")
    n = k ** m
    if n > cap:
        raise CapExceededError(f"k^m = {n} exceeds cap {cap}")
    groups = {}
    for i, labels in enumerate(itertools.product(range(1, k + 1), repeat=m)):
        groups.setdefault(canonical_form(labels), []).append(i)
    R = np.zeros((n, n))
    for members in groups.values():
        idx = np.array(members)
        R[np.ix_(idx, idx)] = 1.0 / len(members)
    return R


def idempotence_residual(R):
    R = np.asarray(R, dtype=float)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise ValueError("idempotence needs a square matrix")
    return float(np.max(np.abs(R @ R - R)))
