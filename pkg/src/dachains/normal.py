"""Two-component normal mixture: Gibbs conditionals and Monte Carlo
estimation of the conjugate transition matrices on ``Y = {1,2}^m``.

Priors: ``p ~ Uniform(0, 1)``, ``mu_j | tau2_j ~ N(0, tau2_j)`` and
``tau2_j ~ IG(2, 1/2)`` (density proportional to ``w^(-3) exp(-1/(2w))``).

Random streams come from :class:`numpy.random.Generator`; per-row streams
for matrix estimation are spawned from ``SeedSequence(seed)`` with a spawn
key of ``(variant, row)``, so a row's numbers do not depend on which worker
computes it.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import TOLERANCES, thread_count
from .errors import CapExceededError, DegeneratePointError
from .kernel import dominant_eigenvalue, row_normalize
from .label_switch import AllocationState, all_states

PRIOR_IG_SHAPE = 2.0
PRIOR_IG_SCALE = 0.5

VARIANTS = ("mda", "fs")

DATASET_1 = (0.2519, 2.529, -0.2930, 2.799, 3.397, 0.5596, 2.810, 2.541, 2.487, -0.1937)
DATASET_2 = (0.6699, 3.408, 0.1093, 3.289, -0.1407, 3.525, 2.454, 0.2716, -0.7443, 3.570)

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class MixtureParams:
    mu: tuple
    tau2: tuple
    p: float

    def __post_init__(self):
        if min(self.tau2) <= 0:
            raise ValueError("variances must be positive")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("weight p must lie in [0, 1]")

    def swapped(self):
        return MixtureParams(self.mu[::-1], self.tau2[::-1], 1.0 - self.p)

    def as_row(self):
        return (self.mu[0], self.mu[1], self.tau2[0], self.tau2[1], self.p)


@dataclass
class ParamBatch:
    """Vectorised parameter draws; every field has shape ``(N,)``."""

    mu1: np.ndarray
    mu2: np.ndarray
    tau2_1: np.ndarray
    tau2_2: np.ndarray
    p: np.ndarray

    def __len__(self):
        return len(self.p)

    def __getitem__(self, i):
        return MixtureParams(
            (float(self.mu1[i]), float(self.mu2[i])),
            (float(self.tau2_1[i]), float(self.tau2_2[i])),
            float(self.p[i]),
        )

    @classmethod
    def from_params(cls, params):
        return cls(
            np.array([params.mu[0]]), np.array([params.mu[1]]),
            np.array([params.tau2[0]]), np.array([params.tau2[1]]),
            np.array([params.p]),
        )


@dataclass(frozen=True)
class NormalMixtureProblem:
    z: tuple

    def __post_init__(self):
        z = tuple(float(v) for v in np.atleast_1d(self.z))
        object.__setattr__(self, "z", z)
        if len(z) < 1:
            raise ValueError("need at least one observation")

    @property
    def m(self):
        return len(self.z)

    @property
    def data(self):
        return np.asarray(self.z)

    def prefix(self, m):
        return NormalMixtureProblem(self.z[:m])


@dataclass(frozen=True)
class EstimationSettings:
    samples_per_row: int = 20_000
    seed: int = 0
    variant: str = "mda"
    chunk: int = 4096

    def __post_init__(self):
        if self.samples_per_row < 1:
            raise ValueError("samples_per_row must be >= 1")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")


def _log_component(z, mu, tau2):
    return -0.5 * (z - mu) ** 2 / tau2 - 0.5 * np.log(tau2) - _LOG_SQRT_2PI


def _log_weights(z, batch):
    """Unnormalised log masses of labels 1 and 2, shape ``(N, m)`` each."""
    z = np.asarray(z, dtype=float)[None, :]
    with np.errstate(divide="ignore", over="ignore"):
        lp = np.log(batch.p)[:, None]
        lq = np.log1p(-batch.p)[:, None]
        l1 = lp + _log_component(z, batch.mu1[:, None], batch.tau2_1[:, None])
        l2 = lq + _log_component(z, batch.mu2[:, None], batch.tau2_2[:, None])
    if np.any(np.isneginf(l1) & np.isneginf(l2)):
        raise DegeneratePointError("both component densities vanish at a data point")
    return l1, l2


def _log_allocation_probs(z, batch):
    """``(log P(y_i = 1), log P(y_i = 2))`` for every draw and observation."""
    l1, l2 = _log_weights(z, batch)
    norm = np.logaddexp(l1, l2)
    return l1 - norm, l2 - norm


def allocation_probability(z_i, params):
    """Probability that an observation ``z_i`` is allocated to component 1."""
    lp1, _ = _log_allocation_probs([z_i], ParamBatch.from_params(params))
    return float(np.exp(lp1[0, 0]))


def sample_allocations(problem, params, rng):
    """Independent label draws given the parameters."""
    lp1, _ = _log_allocation_probs(problem.data, ParamBatch.from_params(params))
    prob1 = np.exp(lp1[0])
    labels = np.where(rng.random(problem.m) < prob1, 1, 2)
    return AllocationState(tuple(labels), 2)


def component_stats(z, labels):
    """``(c_j, zbar_j, s2_j)`` for ``j = 1, 2``; empty components give zeros."""
    z = np.asarray(z, dtype=float)
    labels = np.asarray(labels)
    out = []
    for j in (1, 2):
        zj = z[labels == j]
        c = zj.size
        zbar = float(zj.mean()) if c else 0.0
        s2 = float(np.sum((zj - zbar) ** 2)) if c else 0.0
        out.append((c, zbar, s2))
    return out


def _draw_params(rng, size, c1, zbar1, s21, c2, zbar2, s22):
    """Conditional draws of ``(p, mu, tau2)``; statistics may be arrays of length ``size``.

    ``p ~ Beta(c1 + 1, c2 + 1)``,
    ``tau2_j ~ IG((c_j + 4) / 2, (s2_j + c_j zbar_j^2 / (c_j + 1) + 1) / 2)``,
    ``mu_j | tau2_j ~ N(c_j zbar_j / (c_j + 1), tau2_j / (c_j + 1))``.
    """
    p = rng.beta(c1 + 1.0, c2 + 1.0, size=size)
    comps = []
    for c, zbar, s2 in ((c1, zbar1, s21), (c2, zbar2, s22)):
        shape = (c + 4.0) / 2.0
        scale = 0.5 * (s2 + c * zbar ** 2 / (c + 1.0) + 1.0)
        tau2 = scale / rng.standard_gamma(shape, size=size)
        mu = c * zbar / (c + 1.0) + np.sqrt(tau2 / (c + 1.0)) * rng.standard_normal(size)
        comps.append((mu, tau2))
    (mu1, t1), (mu2, t2) = comps
    return ParamBatch(mu1, mu2, t1, t2, p)


def sample_params_batch(problem, y, rng, size):
    (c1, zb1, s1), (c2, zb2, s2) = component_stats(problem.data, _labels(y))
    return _draw_params(rng, size, c1, zb1, s1, c2, zb2, s2)


def sample_params(problem, y, rng):
    """One draw from the parameter conditional given allocations ``y``."""
    return sample_params_batch(problem, y, rng, 1)[0]


def sample_prior(rng):
    return _draw_params(rng, 1, 0, 0.0, 0.0, 0, 0.0, 0.0)[0]


def _labels(y):
    return np.asarray(y.labels if isinstance(y, AllocationState) else y)


def _target_masks(m):
    ys = all_states(m, 2)
    return (ys == 1).T.astype(float), (ys == 2).T.astype(float)


def _log_masses(z, batch, masks=None):
    """``log pi(y' | params, z)`` for every target ``y'``: shape ``(N, 2^m)``."""
    lp1, lp2 = _log_allocation_probs(z, batch)
    ones, twos = _target_masks(len(z)) if masks is None else masks
    return lp1 @ ones + lp2 @ twos


def _flip_index(m):
    return (2 ** m - 1) - np.arange(2 ** m)


def y_mass_mda(y_target, problem, params):
    """``pi(y' | params, z)``: product of per-observation allocation probabilities."""
    lp1, lp2 = _log_allocation_probs(problem.data, ParamBatch.from_params(params))
    labels = _labels(y_target)
    return float(np.exp(np.sum(np.where(labels == 1, lp1[0], lp2[0]))))


def y_mass_fs(y_target, problem, params):
    """Orbit-averaged allocation mass ``(pi(y') + pi(flip y')) / 2``.

    With two components every orbit is ``{y', flip y'}``, so averaging over
    the orbit of ``y'`` is the same as averaging with the flipped vector.
    """
    labels = _labels(y_target)
    return 0.5 * (y_mass_mda(labels, problem, params) + y_mass_mda(3 - labels, problem, params))


def _row_stream(seed, variant, row):
    key = (VARIANTS.index(variant), row)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def estimate_row(problem, row, settings, masks=None):
    """Monte Carlo estimate of one row of the conjugate matrix.

    MDA: average ``pi(y' | params)`` over draws ``params ~ pi(. | y, z)``.
    FS: each draw first relabels ``y`` uniformly on its orbit (a fair coin
    decides whether to flip), then draws the parameters from the
    conditional given the relabelled vector; the averaged mass is the
    orbit average of ``pi(y' | params)``.
    """
    m = problem.m
    masks = _target_masks(m) if masks is None else masks
    ys = all_states(m, 2)
    y = ys[row]
    rng = _row_stream(settings.seed, settings.variant, row)
    z = problem.data
    (c1, zb1, s1), (c2, zb2, s2) = component_stats(z, y)
    flip_idx = _flip_index(m)

    total = np.zeros(2 ** m)
    remaining = settings.samples_per_row
    while remaining > 0:
        n = min(settings.chunk, remaining)
        remaining -= n
        if settings.variant == "fs":
            flip = rng.random(n) < 0.5
            batch = _draw_params(
                rng, n,
                np.where(flip, c2, c1), np.where(flip, zb2, zb1), np.where(flip, s2, s1),
                np.where(flip, c1, c2), np.where(flip, zb1, zb2), np.where(flip, s1, s2),
            )
        else:
            batch = _draw_params(rng, n, c1, zb1, s1, c2, zb2, s2)
        mass = np.exp(_log_masses(z, batch, masks))
        if settings.variant == "fs":
            mass = 0.5 * (mass + mass[:, flip_idx])
        total += mass.sum(axis=0)
    return total / settings.samples_per_row


def estimate_conjugate_matrix(problem, settings, workers=None):
    """Monte Carlo estimate of the ``2^m x 2^m`` conjugate matrix.

    Rows are renormalised to sum to one before returning; the raw drift is
    only float rounding because every draw contributes a probability vector.
    """
    m = problem.m
    if m > TOLERANCES.max_m:
        raise CapExceededError(f"m={m} exceeds cap {TOLERANCES.max_m}")
    masks = _target_masks(m)
    n = 2 ** m
    workers = thread_count() if workers is None else workers
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(lambda r: estimate_row(problem, r, settings, masks), range(n)))
    else:
        rows = [estimate_row(problem, r, settings, masks) for r in range(n)]
    return row_normalize(np.vstack(rows))


def dominant_eigenvalue_curve(z_full, samples_per_row=20_000, seed=0, ms=None, variants=VARIANTS):
    """Estimated dominant eigenvalue for each data prefix and variant.

    Returns rows ``(m, variant, lambda_hat, seed, N)``.
    """
    problem = NormalMixtureProblem(tuple(z_full))
    ms = range(1, problem.m + 1) if ms is None else ms
    rows = []
    for m in ms:
        sub = problem.prefix(m)
        for variant in variants:
            settings = EstimationSettings(samples_per_row, seed, variant)
            K = estimate_conjugate_matrix(sub, settings)
            rows.append((m, variant, dominant_eigenvalue(K), seed, samples_per_row))
    return rows
