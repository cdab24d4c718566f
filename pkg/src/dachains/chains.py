"""Direct simulation of the MDA and FS chains and sojourn diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bernoulli import STATE_LABELS, BernoulliConfig
from .label_switch import r_sample
from .normal import sample_allocations, sample_params, sample_prior

# Bernoulli chains start in (rho, 1 - rho).
BERNOULLI_START = 1


@dataclass
class ChainTrace:
    states: np.ndarray
    seed: int
    model: str = "bernoulli"
    variant: str = "mda"
    labels: tuple = field(default=STATE_LABELS, repr=False)

    @property
    def length(self):
        return len(self.states)

    def rows(self):
        if self.states.ndim == 1:
            return [(t, int(s)) for t, s in enumerate(self.states)]
        return [(t, *map(float, s)) for t, s in enumerate(self.states)]

    def header(self):
        if self.states.ndim == 1:
            return ("iteration", "state")
        return ("iteration", "mu1", "mu2", "tau2_1", "tau2_2", "p")


def _check_variant(variant):
    variant = variant.lower()
    if variant not in ("mda", "fs"):
        raise ValueError(f"unknown variant {variant!r}")
    return variant


def run_bernoulli(config, variant="mda", iters=1000, seed=0, z=None, start=BERNOULLI_START, burn_in=0):
    """Simulate the Bernoulli MDA or FS chain by explicit conditional draws.

    Each iteration draws the allocation vector given the current ``(r, s)``
    (``y_i = 1`` iff ``U_i < P(y_i = 1 | r, s, z_i)``), optionally flips all
    labels on a fair coin (FS), then draws ``r`` and ``s`` independently from
    their two-point conditionals given the allocation counts.

    The uniforms for iteration ``t`` are generated in bulk; the allocation
    they induce is evaluated for each of the four possible current states
    up front so the sequential loop only has to look up the realised one.
    """
    variant = _check_variant(variant)
    if iters < 1:
        raise ValueError("iters must be >= 1")
    z = config.default_data() if z is None else np.asarray(z, dtype=int)
    rho = config.rho
    rs = config.state_values()
    # P(y_i = 1 | state) for each state and observation, shape (4, m)
    h1 = np.where(z[None, :] == 1, rs[:, [0]], 1 - rs[:, [0]])
    h2 = np.where(z[None, :] == 1, rs[:, [1]], 1 - rs[:, [1]])
    q = h1 / (h1 + h2)
    succ = z == 1

    m = len(z)
    m1 = int(succ.sum())
    m0 = m - m1
    # P(component takes value rho | k1 successes, k0 failures) depends on k1 - k0.
    lrat = math.log1p(-rho) - math.log(rho)
    diffs = np.arange(-m, m + 1)
    p_lo = 1.0 / (1.0 + np.exp(np.clip(diffs * lrat, -700, 700)))

    rng = np.random.default_rng(seed)
    total = iters + burn_in
    states = np.empty(total, dtype=np.int8)
    state = start
    chunk = 1 << 16
    t = 0
    while t < total:
        n = min(chunk, total - t)
        U = rng.random((n, m))
        draws = rng.random((n, 3))
        # allocation counts per candidate current state: (n, 4)
        y1 = U[:, None, :] < q[None, :, :]
        m11 = np.sum(y1 & succ, axis=2)
        m10 = np.sum(y1 & ~succ, axis=2)
        for i in range(n):
            a11 = int(m11[i, state])
            a10 = int(m10[i, state])
            a21 = m1 - a11
            a20 = m0 - a10
            if variant == "fs" and draws[i, 2] < 0.5:
                a11, a10, a21, a20 = a21, a20, a11, a10
            r_hi = draws[i, 0] >= p_lo[a11 - a10 + m]
            s_hi = draws[i, 1] >= p_lo[a21 - a20 + m]
            state = 2 * r_hi + s_hi
            states[t + i] = state
        t += n
    return ChainTrace(states[burn_in:].astype(int), seed, "bernoulli", variant)


def run_normal(problem, variant="mda", iters=1000, seed=0, burn_in=0):
    """Simulate the normal-mixture MDA or FS chain.

    Starts from a prior draw; records ``(mu1, mu2, tau2_1, tau2_2, p)``
    after every iteration.
    """
    variant = _check_variant(variant)
    if iters < 1:
        raise ValueError("iters must be >= 1")
    rng = np.random.default_rng(seed)
    params = sample_prior(rng)
    out = np.empty((iters + burn_in, 5))
    for t in range(iters + burn_in):
        y = sample_allocations(problem, params, rng)
        if variant == "fs":
            y = r_sample(y, rng)
        params = sample_params(problem, y, rng)
        out[t] = params.as_row()
    return ChainTrace(out[burn_in:], seed, "normal", variant, labels=())


@dataclass
class SojournReport:
    target: int
    visits: int
    runs: int
    mean_stay: float
    mode_switches: int
    empirical_occupancy: np.ndarray
    absent: bool = False

    def as_dict(self):
        return {
            "target": self.target,
            "visits": self.visits,
            "runs": self.runs,
            "mean_stay": self.mean_stay,
            "mode_switches": self.mode_switches,
            "empirical_occupancy": [float(x) for x in self.empirical_occupancy],
            "absent": self.absent,
        }


def run_lengths(states, target):
    """Lengths of maximal runs of consecutive ``target`` visits."""
    hit = np.concatenate(([False], np.asarray(states) == target, [False]))
    edges = np.flatnonzero(np.diff(hit.astype(np.int8)))
    return edges[1::2] - edges[0::2]


def mode_switches(states, modes=(1, 2)):
    """Number of times the chain reaches one mode after last visiting the other.

    Visits to states outside ``modes`` are ignored, so a path
    ``1 -> 0 -> 2`` counts as one switch.
    """
    s = np.asarray(states)
    seq = s[np.isin(s, modes)]
    if seq.size < 2:
        return 0
    return int(np.count_nonzero(seq[1:] != seq[:-1]))


def sojourn_analysis(trace, target=BERNOULLI_START, modes=(1, 2), n_states=None):
    """Run-length statistics for ``target`` plus switches between ``modes``."""
    states = np.asarray(trace.states if isinstance(trace, ChainTrace) else trace)
    if states.ndim != 1:
        raise ValueError("sojourn analysis needs a trace over a finite labelled space")
    n_states = int(max(states.max(), target, *modes)) + 1 if n_states is None else n_states
    occ = np.bincount(states, minlength=n_states) / len(states)
    runs = run_lengths(states, target)
    absent = runs.size == 0
    return SojournReport(
        target=target,
        visits=int(runs.sum()),
        runs=int(runs.size),
        mean_stay=float(runs.mean()) if runs.size else 0.0,
        mode_switches=mode_switches(states, modes),
        empirical_occupancy=occ,
        absent=absent,
    )
