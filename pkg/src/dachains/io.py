"""Plain-text matrix/distribution files and CSV writers."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np


def _tokens(text):
    lines = [ln.split("#", 1)[0] for ln in text.splitlines()]
    return " ".join(lines).split()


def format_matrix(M):
    M = np.asarray(M, dtype=float)
    lines = [str(M.shape[0])]
    lines += [" ".join(repr(float(x)) for x in row) for row in M]
    return "\n".join(lines) + "\n"


def parse_matrix(text):
    """Inverse of :func:`format_matrix`: a count ``n`` then ``n*n`` numbers."""
    tok = _tokens(text)
    if not tok:
        raise ValueError("empty matrix file")
    n = int(tok[0])
    vals = [float(t) for t in tok[1:]]
    if len(vals) != n * n:
        raise ValueError(f"expected {n * n} entries, found {len(vals)}")
    return np.array(vals).reshape(n, n)


def format_distribution(pi):
    pi = np.asarray(pi, dtype=float)
    return f"{pi.size}\n" + " ".join(repr(float(x)) for x in pi) + "\n"


def parse_distribution(text):
    tok = _tokens(text)
    if not tok:
        raise ValueError("empty distribution file")
    n = int(tok[0])
    vals = [float(t) for t in tok[1:]]
    if len(vals) != n:
        raise ValueError(f"expected {n} weights, found {len(vals)}")
    return np.array(vals)


def write_matrix(path, M):
    Path(path).write_text(format_matrix(M))


def read_matrix(path):
    return parse_matrix(Path(path).read_text())


def write_distribution(path, pi):
    Path(path).write_text(format_distribution(pi))


def read_distribution(path):
    return parse_distribution(Path(path).read_text())


def parse_data(text, source="<data>"):
    """Whitespace-separated reals; ``#`` starts a comment."""
    tok = _tokens(text)
    if not tok:
        raise ValueError(f"{source}: no data values")
    try:
        return np.array([float(t) for t in tok])
    except ValueError as exc:
        raise ValueError(f"{source}: {exc}") from None


def read_data(path):
    return parse_data(Path(path).read_text(), str(path))


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def spectrum_rows(report):
    return [(i + 1, repr(float(v))) for i, v in enumerate(report.eigenvalues)]


def write_spectrum_csv(path, report):
    write_csv(path, ("index", "eigenvalue"), spectrum_rows(report))
