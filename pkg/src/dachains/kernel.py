"""Finite-state Markov kernel algebra.

Transition matrices are plain ``(n, n)`` float arrays with
``M[i, j] = P(i -> j)``; conditional matrices are rectangular arrays whose
rows are probability vectors. Eigenvectors are right eigenvectors, i.e.
functions on the state space, matching the operator view ``(Mg)(i) =
sum_j M[i, j] g(j)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .config import TOLERANCES
from .errors import (
    ComplexSpectrumWarning,
    ConvergenceError,
    DegeneracyWarning,
    DimensionError,
    NonErgodicError,
)
from .jacobi import jacobi_eigh


@dataclass
class ValidationReport:
    square: bool
    max_row_deviation: float
    negative_entries: int
    min_entry: float
    strictly_positive: bool
    valid: bool


@dataclass
class SpectrumReport:
    """Eigenvalues on the mean-zero subspace, sorted descending.

    ``eigenvectors[:, i]`` is the right eigenvector for ``eigenvalues[i]``;
    on the symmetric route these are normalised so that
    ``sum(pi * v**2) == 1``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None
    method: str = "symmetric-exact"
    complex_warning: bool = False
    trivial_eigenvalue: float = 1.0
    solver: str = field(default="jacobi", repr=False)

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def dominant(self):
        return float(self.eigenvalues[0]) if len(self.eigenvalues) else 0.0


@dataclass
class DominationResult:
    holds: bool
    first_violation: int | None = None
    max_excess: float = 0.0

    def __bool__(self):
        return self.holds


def _as_square(M):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise DimensionError(f"expected a non-empty square matrix, got shape {M.shape}")
    return M


def validate(M, tol=None):
    """Report row-sum error, negativity and strict positivity of ``M``."""
    tol = TOLERANCES.row_sum if tol is None else tol
    M = np.asarray(M, dtype=float)
    square = M.ndim == 2 and M.shape[0] == M.shape[1] and M.shape[0] >= 1
    if M.ndim != 2 or M.size == 0:
        return ValidationReport(False, np.inf, 0, np.nan, False, False)
    dev = float(np.max(np.abs(M.sum(axis=1) - 1.0)))
    neg = int(np.count_nonzero(M < 0))
    positive = bool(np.all(M > 0))
    return ValidationReport(
        square=square,
        max_row_deviation=dev,
        negative_entries=neg,
        min_entry=float(M.min()),
        strictly_positive=positive,
        valid=square and neg == 0 and dev <= tol,
    )


def check_conditional(A, name="matrix", tol=None):
    """Raise ``ValueError`` unless every row of ``A`` is a probability vector."""
    tol = TOLERANCES.row_sum if tol is None else tol
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise DimensionError(f"{name} must be two-dimensional")
    if np.any(A < 0):
        raise ValueError(f"{name} has negative entries")
    dev = np.max(np.abs(A.sum(axis=1) - 1.0))
    if dev > tol:
        raise ValueError(f"{name} rows deviate from 1 by {dev:.3g}")
    return A


def row_normalize(M):
    M = np.asarray(M, dtype=float)
    return M / M.sum(axis=1, keepdims=True)


def stationary_distribution(M, tol=None):
    """Solve ``pi M = pi`` with ``sum(pi) = 1``.

    One step of iterative refinement is applied; the result must satisfy
    ``max|pi M - pi| <= tol``.
    """
    tol = TOLERANCES.stationary_residual if tol is None else tol
    M = _as_square(M)
    n = M.shape[0]
    if n == 1:
        return np.ones(1)
    # (M^T - I) pi = 0 with the last equation swapped for the normalisation.
    lhs = M.T - np.eye(n)
    lhs[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    cond = np.linalg.cond(lhs)
    if not np.isfinite(cond) or cond > 1e14:
        raise NonErgodicError(f"stationary system is singular (cond={cond:.3g})")
    pi = np.linalg.solve(lhs, rhs)
    pi = pi + np.linalg.solve(lhs, rhs - lhs @ pi)
    if np.any(pi < -tol):
        raise NonErgodicError("stationary solution has negative mass")
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    resid = np.max(np.abs(pi @ M - pi))
    if resid > tol:
        raise NonErgodicError(f"stationary residual {resid:.3g} exceeds {tol:g}")
    return pi


def detailed_balance_residual(M, pi):
    """``max_ij |pi_i M_ij - pi_j M_ji|``."""
    M = _as_square(M)
    pi = np.asarray(pi, dtype=float)
    if pi.shape != (M.shape[0],):
        raise DimensionError(f"distribution of length {pi.size} for {M.shape[0]} states")
    flow = pi[:, None] * M
    return float(np.max(np.abs(flow - flow.T)))


def compose_da(A, B):
    """DA kernel and its conjugate from the two conditionals.

    ``A`` is ``f(x | y)`` with shape ``(|Y|, |X|)`` and ``B`` is ``f(y | x)``
    with shape ``(|X|, |Y|)``. Returns ``(k, k_hat) = (B @ A, A @ B)``.
    """
    A = check_conditional(A, "f(x|y)")
    B = check_conditional(B, "f(y|x)")
    if A.shape[1] != B.shape[0] or A.shape[0] != B.shape[1]:
        raise DimensionError(f"incompatible conditionals {A.shape} and {B.shape}")
    return B @ A, A @ B


def conditionals_from_joint(F):
    """Split a joint mass ``F[x, y]`` into ``(f(x|y), f(y|x))`` for :func:`compose_da`."""
    F = np.asarray(F, dtype=float)
    if F.ndim != 2 or np.any(F < 0) or F.sum() <= 0:
        raise ValueError("joint mass must be a nonnegative 2-d array")
    F = F / F.sum()
    A = (F / F.sum(axis=0, keepdims=True)).T
    B = F / F.sum(axis=1, keepdims=True)
    return A, B


def sandwich_compose(A, R, B):
    """Sandwich kernel ``B R A`` on X and the y-chain ``R (A B) R`` on Y."""
    A = check_conditional(A, "f(x|y)")
    B = check_conditional(B, "f(y|x)")
    R = check_conditional(R, "r(y'|y)")
    ny = A.shape[0]
    if R.shape != (ny, ny) or B.shape != (A.shape[1], ny):
        raise DimensionError(
            f"incompatible shapes A{A.shape}, R{R.shape}, B{B.shape}"
        )
    return B @ R @ A, R @ (A @ B) @ R


def _drop_trivial(w, v, weights, tol):
    """Remove the eigenpair of the constant function.

    ``v`` holds right eigenvectors. The candidate is the eigenvalue nearest 1;
    if its eigenvector is not constant (near-degenerate top of spectrum) the
    eigenvector most aligned with the constants is tried instead.
    """
    def is_constant(vec):
        vec = np.real(vec)
        mean = np.sum(weights * vec)
        if mean == 0.0:
            return False
        return np.max(np.abs(vec / mean - 1.0)) <= tol

    idx = int(np.argmin(np.abs(w - 1.0)))
    if not is_constant(v[:, idx]):
        vn = np.real(v) / np.linalg.norm(np.real(v), axis=0)
        align = np.abs(vn.sum(axis=0)) / np.sqrt(len(w))
        idx = int(np.argmax(align))
        if not is_constant(v[:, idx]):
            raise NonErgodicError("no eigenvector is constant; chain may be reducible")
    keep = np.arange(len(w)) != idx
    return w[idx], w[keep], v[:, keep]


def spectrum(M, pi=None, tol=None):
    """Spectrum of ``M`` on the mean-zero functions.

    With ``pi`` the chain is treated as reversible: ``D^1/2 M D^-1/2`` is
    symmetrised and handed to the cyclic Jacobi solver (LAPACK ``eigh`` once
    ``n`` exceeds ``TOLERANCES.jacobi_max_n``). Without ``pi`` a general real
    eigensolve is used and the real parts are reported, flagging any
    imaginary part above ``TOLERANCES.imaginary``.
    """
    tols = TOLERANCES
    M = _as_square(M)
    n = M.shape[0]
    if n == 1:
        return SpectrumReport(np.zeros(0), np.zeros((1, 0)), "symmetric-exact")

    if pi is not None:
        pi = np.asarray(pi, dtype=float)
        if np.any(pi <= 0):
            raise ValueError("symmetric route needs a strictly positive distribution")
        resid = detailed_balance_residual(M, pi)
        if resid > (tols.reversibility if tol is None else tol):
            raise ValueError(f"matrix is not reversible w.r.t. pi (residual {resid:.3g})")
        root = np.sqrt(pi)
        S = root[:, None] * M / root[None, :]
        S = 0.5 * (S + S.T)
        if n <= tols.jacobi_max_n:
            w, u = jacobi_eigh(S)
            solver = "jacobi"
        else:
            w, u = np.linalg.eigh(S)
            solver = "lapack-eigh"
        v = u / root[:, None]
        trivial, w, v = _drop_trivial(w, v, pi, tols.constant_eigvec)
        order = np.argsort(w)[::-1]
        return SpectrumReport(w[order], v[:, order], "symmetric-exact", False, float(trivial), solver)

    w, v = np.linalg.eig(M)
    complex_flag = bool(np.any(np.abs(w.imag) > tols.imaginary))
    if complex_flag:
        warnings.warn("estimated spectrum has non-negligible imaginary parts", ComplexSpectrumWarning)
    weights = np.full(n, 1.0 / n)
    trivial, w, v = _drop_trivial(w, v, weights, tols.constant_eigvec)
    w = w.real
    v = v.real
    order = np.argsort(w)[::-1]
    return SpectrumReport(w[order], v[:, order], "general-numeric", complex_flag, float(np.real(trivial)), "lapack-geev")


def spectra_distance(a, b):
    """Max gap between two descending eigenvalue lists, zero-padding the shorter."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = max(len(a), len(b))
    a = np.sort(np.pad(a, (0, n - len(a))))[::-1]
    b = np.sort(np.pad(b, (0, n - len(b))))[::-1]
    return float(np.max(np.abs(a - b))) if n else 0.0


def dominant_eigenvalue(M, tol=None, max_iter=None, seed=0):
    """Largest-magnitude eigenvalue of ``M`` on the mean-zero subspace.

    The stationary vector ``pi`` of ``M`` is computed, ``1 pi^T`` is
    deflated away and power iteration runs on the remainder. The magnitude
    comes from the iterate norm and the sign from the Rayleigh quotient.
    Works for estimated, only approximately reversible matrices.
    """
    tol = TOLERANCES.power if tol is None else tol
    max_iter = TOLERANCES.power_max_iter if max_iter is None else max_iter
    M = row_normalize(_as_square(M))
    n = M.shape[0]
    if n == 1:
        return 0.0
    pi = stationary_distribution(M, tol=max(TOLERANCES.stationary_residual, 1e-10))
    D = M - np.outer(np.ones(n), pi)

    v = np.random.default_rng(seed).standard_normal(n)
    v -= pi @ v
    v /= np.linalg.norm(v)
    norms = []
    lam = 0.0
    for _ in range(max_iter):
        w = D @ v
        size = np.linalg.norm(w)
        if size <= 1e-300:
            return 0.0
        lam = float(v @ w)
        if np.linalg.norm(w - lam * v) <= tol * max(size, 1e-300) or size < tol:
            return float(np.copysign(size, lam)) if size >= tol else 0.0
        norms.append(size)
        v = w / size

    recent = np.asarray(norms[-50:])
    if recent.size and np.ptp(recent) <= 1e-8 * max(recent.max(), 1.0):
        warnings.warn(
            "power iteration converged slowly; leading eigenvalues nearly degenerate",
            DegeneracyWarning,
        )
        return float(np.copysign(recent[-1], lam))
    raise ConvergenceError(f"power iteration did not converge in {max_iter} steps", partial=lam)


def _exact_stationary(P):
    """Stationary vector of a rational stochastic matrix by Gauss-Jordan."""
    n = len(P)
    rows = [[P[j][i] - (1 if i == j else 0) for j in range(n)] + [Fraction(0)] for i in range(n)]
    rows[-1] = [Fraction(1)] * n + [Fraction(1)]
    for col in range(n):
        piv = next((r for r in range(col, n) if rows[r][col] != 0), None)
        if piv is None:
            raise NonErgodicError("singular stationary system")
        rows[col], rows[piv] = rows[piv], rows[col]
        inv = 1 / rows[col][col]
        rows[col] = [x * inv for x in rows[col]]
        for r in range(n):
            if r != col and rows[r][col] != 0:
                f = rows[r][col]
                rows[r] = [a - f * b for a, b in zip(rows[r], rows[col])]
    return [rows[i][n] for i in range(n)]


def chi_square_profile(M, pi, x0, n_max, exact=False):
    """Chi-square distances from ``pi`` of the 1..n_max step laws started at ``x0``.

    With ``exact=True`` the matrix is converted to rationals, rows are
    renormalised exactly and the powering runs in exact arithmetic against
    the exact stationary law of that rational matrix (``pi`` must agree with
    it to 1e-10). This keeps geometrically small distances accurate far
    below float64 rounding.
    """
    M = _as_square(M)
    pi = np.asarray(pi, dtype=float)
    n_states = M.shape[0]
    if pi.shape != (n_states,):
        raise DimensionError("distribution length does not match matrix")
    if np.any(pi <= 0):
        raise ValueError("chi-square distance needs strictly positive stationary mass")
    if n_max < 1:
        raise ValueError("step count must be >= 1")
    if not 0 <= x0 < n_states:
        raise IndexError(f"start state {x0} out of range")

    out = np.empty(n_max)
    if not exact:
        row = np.zeros(n_states)
        row[x0] = 1.0
        for step in range(n_max):
            row = row @ M
            out[step] = np.sum((row - pi) ** 2 / pi)
        return out

    P = []
    for r in M:
        fr = [Fraction(float(x)) for x in r]
        total = sum(fr)
        P.append([x / total for x in fr])
    pi_exact = _exact_stationary(P)
    if max(abs(float(a) - b) for a, b in zip(pi_exact, pi)) > 1e-10:
        raise ValueError("pi is not the stationary distribution of M")
    row = [Fraction(0)] * n_states
    row[x0] = Fraction(1)
    for step in range(n_max):
        row = [sum(row[i] * P[i][j] for i in range(n_states)) for j in range(n_states)]
        out[step] = float(sum((row[j] - pi_exact[j]) ** 2 / pi_exact[j] for j in range(n_states)))
    return out


def chi_square_distance(M, pi, x0, n, exact=False):
    """``sum_x' (M^n[x0, x'] - pi[x'])^2 / pi[x']`` by direct powering."""
    return float(chi_square_profile(M, pi, x0, n, exact=exact)[-1])


def chi_square_spectral(eigenvalues, eigenvectors, pi, x0, n):
    """Spectral form ``sum_i lambda_i^(2n) g_i(x0)^2``.

    ``eigenvectors`` are rescaled to unit ``L2(pi)`` norm first, so any
    scaling of the columns is accepted.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    g = np.asarray(eigenvectors, dtype=float)
    pi = np.asarray(pi, dtype=float)
    norms = np.sqrt(np.sum(pi[:, None] * g * g, axis=0))
    g = g / norms
    return float(np.sum(lam ** (2 * n) * g[x0] ** 2))


def domination_check(spec_sandwich, spec_da, tol=1e-10):
    """True iff the sorted sandwich eigenvalues never exceed the DA ones by more than ``tol``."""
    a = getattr(spec_sandwich, "eigenvalues", spec_sandwich)
    b = getattr(spec_da, "eigenvalues", spec_da)
    a = np.sort(np.asarray(a, dtype=float))[::-1]
    b = np.sort(np.asarray(b, dtype=float))[::-1]
    if len(a) != len(b):
        raise DimensionError(f"spectra of different lengths {len(a)} and {len(b)}")
    excess = a - b
    bad = np.flatnonzero(excess > tol)
    if bad.size:
        return DominationResult(False, int(bad[0]) + 1, float(excess.max()))
    return DominationResult(True, None, float(excess.max()) if len(a) else 0.0)
