"""Cyclic Jacobi eigensolver for dense real symmetric matrices."""

from __future__ import annotations

import numpy as np

from .config import TOLERANCES
from .errors import ConvergenceError


def _off_norm(a):
    off = a - np.diag(np.diag(a))
    return np.sqrt(np.sum(off * off))


def jacobi_eigh(a, tol=None, max_sweeps=None):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps over the strict upper triangle row by row, annihilating each
    off-diagonal entry with a plane rotation, until the off-diagonal
    Frobenius norm falls below ``max(tol, n * eps) * ||a||_F``.

    Parameters
    ----------
    a : (n, n) array_like
        Symmetric input. Only the symmetric part is used.
    tol : float, optional
        Relative stopping threshold on the off-diagonal norm.
    max_sweeps : int, optional
        Sweep cap; exceeding it raises :class:`ConvergenceError` whose
        ``partial`` attribute is the ``(eigenvalues, eigenvectors)`` pair
        reached so far.

    Returns
    -------
    w : (n,) ndarray
        Eigenvalues in ascending order.
    v : (n, n) ndarray
        Orthonormal eigenvectors, ``v[:, i]`` belonging to ``w[i]``.
    """
    tol = TOLERANCES.jacobi if tol is None else tol
    max_sweeps = TOLERANCES.jacobi_max_sweeps if max_sweeps is None else max_sweeps
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("jacobi_eigh needs a square matrix")
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    v = np.eye(n)
    scale = np.linalg.norm(a)
    if n == 1 or scale == 0.0:
        return np.diag(a).copy(), v

    # Below roughly n * eps the rotations only shuffle rounding noise.
    threshold = max(tol, n * np.finfo(float).eps) * scale
    for _ in range(max_sweeps):
        if _off_norm(a) <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.copysign(1.0, theta) / (abs(theta) + np.hypot(theta, 1.0))
                c = 1.0 / np.hypot(t, 1.0)
                s = t * c

                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0

                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        if _off_norm(a) > threshold:
            w = np.diag(a).copy()
            order = np.argsort(w)
            raise ConvergenceError(
                f"Jacobi did not converge in {max_sweeps} sweeps",
                partial=(w[order], v[:, order]),
            )

    w = np.diag(a).copy()
    order = np.argsort(w)
    return w[order], v[:, order]
