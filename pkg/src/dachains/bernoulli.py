"""Two-component Bernoulli mixture with success probabilities in {rho, 1 - rho}.

The parameter space has four points, ordered
``(rho, rho), (rho, 1-rho), (1-rho, rho), (1-rho, 1-rho)``; mixture weights
are fixed at 1/2. Everything that can under- or overflow for large ``m`` is
evaluated in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln, logsumexp

from .config import TOLERANCES
from .errors import CapExceededError
from .kernel import compose_da, sandwich_compose
from .label_switch import all_states, r_matrix

STATE_LABELS = ("(rho,rho)", "(rho,1-rho)", "(1-rho,rho)", "(1-rho,1-rho)")


@dataclass(frozen=True)
class BernoulliConfig:
    rho: float
    m: int
    m1: int

    def __post_init__(self):
        if not 0.0 < self.rho < 0.5:
            raise ValueError(f"rho must lie in (0, 1/2), got {self.rho}")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if not 0 <= self.m1 <= self.m:
            raise ValueError(f"m1 must lie in 0..m, got {self.m1}")

    @property
    def m0(self):
        return self.m - self.m1

    @classmethod
    def balanced(cls, rho, m):
        """Half the observations are successes (``m1 = m // 2``)."""
        return cls(rho, m, m // 2)

    def state_values(self):
        """``(r, s)`` for each of the four states, as a ``(4, 2)`` array."""
        lo, hi = self.rho, 1.0 - self.rho
        return np.array([(lo, lo), (lo, hi), (hi, lo), (hi, hi)])

    def default_data(self):
        """``m0`` failures followed by ``m1`` successes."""
        return np.array([0] * self.m0 + [1] * self.m1)


class LogW(NamedTuple):
    """Natural logs of the three positive double sums ``w0, w1, w2``."""

    w0: float
    w1: float
    w2: float


def posterior(config):
    """Posterior masses over the four parameter states."""
    rs = config.state_values()
    tot = rs.sum(axis=1)
    logm = config.m1 * np.log(tot) + config.m0 * np.log(2.0 - tot)
    return np.exp(logm - logsumexp(logm))


def _log_binom(n, k):
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


def w_coefficients(config):
    """Log-space evaluation of ``w_0, w_1, w_2``.

    Each is a double sum over ``i = 0..m1`` and ``j = 0..m0`` of
    ``C(m1,i) C(m0,j) rho^(k(m0-j+i)) (1-rho)^(k(m1-i+j))`` divided by
    ``(rho^i (1-rho)^j + rho^j (1-rho)^i)
    (rho^(m1-i) (1-rho)^(m0-j) + rho^(m0-j) (1-rho)^(m1-i))``.
    """
    m1, m0 = config.m1, config.m0
    lr, lq = math.log(config.rho), math.log1p(-config.rho)
    i = np.arange(m1 + 1)[:, None]
    j = np.arange(m0 + 1)[None, :]
    base = _log_binom(m1, i) + _log_binom(m0, j)
    base = base - np.logaddexp(i * lr + j * lq, j * lr + i * lq)
    base = base - np.logaddexp((m1 - i) * lr + (m0 - j) * lq, (m0 - j) * lr + (m1 - i) * lq)
    expo = (m0 - j + i) * lr + (m1 - i + j) * lq
    return LogW(*(float(logsumexp(base + kk * expo)) for kk in range(3)))


def _entries(config):
    """The seven distinct log-entries of the MDA matrix, named as in ``SpecialMtm``."""
    lw = w_coefficients(config)
    m, m1, m0 = config.m, config.m1, config.m0
    lr, lq = math.log(config.rho), math.log1p(-config.rho)
    log2m = m * math.log(2.0)
    h1 = m1 * lr + m0 * lq  # rho^m1 (1-rho)^m0
    h0 = m0 * lr + m1 * lq  # rho^m0 (1-rho)^m1
    return {
        "a": h1 - log2m + lw.w0,
        "b": lw.w1 - log2m,
        "c": h0 - log2m + lw.w0,
        "d": h1 + lw.w1,
        "e": lw.w2,
        "f": m * (lr + lq) + lw.w0,
        "g": h0 + lw.w1,
    }


def _assemble(a, b, c, d, e, f, g):
    return np.array([
        [a, b, b, c],
        [d, e, f, g],
        [d, f, e, g],
        [a, b, b, c],
    ])


def mda_mtm(config):
    """4x4 transition matrix of the MDA chain built from the w-coefficients."""
    ent = {k: math.exp(v) for k, v in _entries(config).items()}
    return _assemble(**ent)


def fs_mtm(config):
    """4x4 transition matrix of the FS chain.

    Identical to :func:`mda_mtm` except that the middle 2x2 block has both
    of its row entries replaced by their average.
    """
    ent = {k: math.exp(v) for k, v in _entries(config).items()}
    mid = 0.5 * (ent["e"] + ent["f"])
    ent["e"] = ent["f"] = mid
    return _assemble(**ent)


@dataclass
class ClosedFormSpectrum:
    lambda1: float
    lambda2: float
    lambda3: float
    v1: np.ndarray
    v2: np.ndarray
    alpha: float
    # 1 - lambda1 without cancellation; lambda1 rounds to 1 for large m
    gap1: float = 0.0

    def eigenvalues(self):
        return np.array([self.lambda1, self.lambda2, self.lambda3])


def closed_form_eigenvalues(config):
    """Nontrivial eigen-solutions of the MDA matrix in closed form.

    ``lambda1 = w2 - rho^m (1-rho)^m w0`` with ``v1 = (0, 1, -1, 0)`` and
    ``lambda2 = g w0 / 2^m - g w1`` with ``v2 = (alpha, 1, 1, alpha)``,
    where ``g = rho^m1 (1-rho)^m0 + rho^m0 (1-rho)^m1``. The third
    eigenvalue is 0 because rows one and four coincide. For the FS chain
    the only nonzero eigenvalue is ``lambda2``.
    """
    ent = {k: math.exp(v) for k, v in _entries(config).items()}
    # rows sum to one, so 1 - (e - f) = d + 2f + g
    gap1 = ent["d"] + 2.0 * ent["f"] + ent["g"]
    lam1 = 1.0 - gap1 if ent["e"] >= 0.5 else ent["e"] - ent["f"]
    g_w0 = ent["a"] + ent["c"]  # g w0 / 2^m
    g_w1 = ent["d"] + ent["g"]  # g w1
    lam2 = g_w0 - g_w1
    alpha = (g_w0 - 1.0) / g_w1
    return ClosedFormSpectrum(
        lambda1=lam1,
        lambda2=lam2,
        lambda3=0.0,
        v1=np.array([0.0, 1.0, -1.0, 0.0]),
        v2=np.array([alpha, 1.0, 1.0, alpha]),
        alpha=alpha,
        gap1=gap1,
    )


def conditionals(config, z=None):
    """The two conditionals as matrices over ``Y = {1,2}^m``.

    Returns ``(A, B)`` with ``A[y, x] = pi(r, s | y, z)`` of shape
    ``(2^m, 4)`` and ``B[x, y] = pi(y | r, s, z)`` of shape ``(4, 2^m)``.
    """
    z = config.default_data() if z is None else np.asarray(z, dtype=int)
    m = len(z)
    if m != config.m or int(z.sum()) != config.m1:
        raise ValueError("data vector does not match (m, m1) of the config")
    if m > TOLERANCES.max_m:
        raise CapExceededError(f"m={m} exceeds cap {TOLERANCES.max_m}")
    ys = all_states(m, 2)
    lr, lq = math.log(config.rho), math.log1p(-config.rho)

    is1 = ys == 1
    m11 = np.sum(is1 & (z == 1), axis=1)
    m10 = np.sum(is1 & (z == 0), axis=1)
    m21 = np.sum(~is1 & (z == 1), axis=1)
    m20 = np.sum(~is1 & (z == 0), axis=1)

    def two_point(k1, k0):
        # mass on (rho, 1 - rho) for a component with k1 successes, k0 failures
        lo = k1 * lr + k0 * lq
        hi = k0 * lr + k1 * lq
        norm = np.logaddexp(lo, hi)
        return np.exp(lo - norm), np.exp(hi - norm)

    r_lo, r_hi = two_point(m11, m10)
    s_lo, s_hi = two_point(m21, m20)
    A = np.stack([r_lo * s_lo, r_lo * s_hi, r_hi * s_lo, r_hi * s_hi], axis=1)

    rs = config.state_values()
    # log h_theta(z_i) for theta = rho / 1-rho
    log_h = np.where(z[None, :] == 1, np.log(rs[:, :, None]), np.log1p(-rs[:, :, None]))
    log_norm = np.logaddexp(log_h[:, 0, :], log_h[:, 1, :])
    log_p1 = log_h[:, 0, :] - log_norm  # (4, m): log P(y_i = 1 | r, s)
    log_p2 = log_h[:, 1, :] - log_norm
    logB = log_p1 @ is1.T.astype(float) + log_p2 @ (~is1).T.astype(float)
    B = np.exp(logB)
    return A, B


def y_marginal(config, z=None):
    """``pi(y | z)`` over ``{1,2}^m``."""
    _, B = conditionals(config, z)
    return posterior(config) @ B


def conjugate_mtm(config, z=None):
    """The ``2^m x 2^m`` conjugate (y-chain) matrix of the MDA chain."""
    A, B = conditionals(config, z)
    return compose_da(A, B)[1]


def fs_mtm_sandwich(config, z=None):
    """FS matrix built as a sandwich with the label-flip kernel."""
    A, B = conditionals(config, z)
    return sandwich_compose(A, r_matrix(config.m, 2), B)[0]


@dataclass(frozen=True)
class SpecialMtm:
    """4x4 transition matrix with rows ``(a,b,b,c), (d,e,f,cd/a), (d,f,e,cd/a), (a,b,b,c)``."""

    a: float
    b: float
    c: float
    d: float
    e: float
    f: float

    def __post_init__(self):
        vals = (self.a, self.b, self.c, self.d, self.e, self.f)
        if min(vals) <= 0:
            raise ValueError("all entries must be strictly positive")
        if abs(self.a + 2 * self.b + self.c - 1.0) > 1e-12:
            raise ValueError("first row must sum to 1")
        if abs(self.d + self.e + self.f + self.c * self.d / self.a - 1.0) > 1e-12:
            raise ValueError("second row must sum to 1")

    def matrix(self):
        g = self.c * self.d / self.a
        return _assemble(self.a, self.b, self.c, self.d, self.e, self.f, g)

    @classmethod
    def from_matrix(cls, M, tol=1e-12):
        M = np.asarray(M, dtype=float)
        a, b, c = M[0, 0], M[0, 1], M[0, 3]
        d, e, f = M[1, 0], M[1, 1], M[1, 2]
        cand = cls(a, b, c, d, e, f)
        if np.max(np.abs(cand.matrix() - M)) > tol:
            raise ValueError("matrix does not have the required pattern")
        return cand


@dataclass
class SpecialEigenReport:
    stationary: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    alpha: float


def analyze_special_mtm(M):
    """Stationary law and all four eigen-solutions of a :class:`SpecialMtm`.

    Eigenpairs, in column order: ``(1, ones)``, ``(e - f, (0,1,-1,0))``,
    ``((a+c)(a-d)/a, (alpha,1,1,alpha))`` with
    ``alpha = a(a+c-1) / (d(a+c))``, and ``(0, (c,0,0,-a))``.
    """
    if not isinstance(M, SpecialMtm):
        M = SpecialMtm.from_matrix(M)
    a, b, c, d, e, f = M.a, M.b, M.c, M.d, M.e, M.f
    p1 = a * d / (a * d + 2 * a * b + c * d)
    p2 = b * p1 / d
    pi = np.array([p1, p2, p2, c * p1 / a])
    alpha = a * (a + c - 1) / (d * (a + c))
    vals = np.array([1.0, e - f, (a + c) * (a - d) / a, 0.0])
    vecs = np.column_stack([
        np.ones(4),
        [0.0, 1.0, -1.0, 0.0],
        [alpha, 1.0, 1.0, alpha],
        [c, 0.0, 0.0, -a],
    ])
    return SpecialEigenReport(pi, vals, vecs, alpha)


def eigenvalue_sweep(rhos, ms, chain="mda", m1=None):
    """Dominant eigenvalue over a ``(rho, m)`` grid from the closed forms.

    Rows are ``(rho, m, m1, chain, dominant, gap)`` where ``gap`` is
    ``1 - dominant`` computed without cancellation; ``m1`` defaults to
    ``m // 2``. For the FS chain the dominant eigenvalue is ``lambda2``.
    """
    chain = chain.lower()
    if chain not in ("mda", "fs"):
        raise ValueError(f"unknown chain {chain!r}")
    rows = []
    for rho in rhos:
        for m in ms:
            cfg = BernoulliConfig(rho, m, m // 2 if m1 is None else m1)
            cf = closed_form_eigenvalues(cfg)
            if chain == "mda":
                rows.append((rho, m, cfg.m1, chain, cf.lambda1, cf.gap1))
            else:
                rows.append((rho, m, cfg.m1, chain, cf.lambda2, 1.0 - cf.lambda2))
    return rows
