"""Exact rational linear algebra for the rigidity computations.

Forward elimination is fraction-free (Bareiss) on integer-scaled rows;
the reduced row echelon form and nullspace bases are then normalized
over exact rationals.  Pivoting is deterministic, so bases are
reproducible across runs.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd


def _integerize(row):
    denom = 1
    for x in row:
        f = Fraction(x)
        denom = denom * f.denominator // gcd(denom, f.denominator)
    return [int(Fraction(x) * denom) for x in row]


def rref(rows, ncols):
    """Reduced row echelon form; returns (rows, pivot_columns)."""
    m = [_integerize(r) for r in rows if any(r)]
    pivots = []
    rank = 0
    prev = 1
    for col in range(ncols):
        pivot = next((r for r in range(rank, len(m)) if m[r][col]), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        pv = m[rank][col]
        for r in range(len(m)):
            if r == rank or not m[r][col]:
                continue
            fr = m[r][col]
            m[r] = [(pv * a - fr * b) // prev for a, b in zip(m[r], m[rank])]
        prev = pv
        pivots.append(col)
        rank += 1
    reduced = []
    for r in range(rank):
        pv = m[r][pivots[r]]
        reduced.append([Fraction(a, pv) for a in m[r]])
    return reduced, pivots


def nullspace(rows, ncols):
    """Basis of the solution space of rows . x = 0, RREF-normalized.

    Each basis vector sets one free variable to 1 and the other free
    variables to 0; vectors are ordered by free column index.
    """
    reduced, pivots = rref(rows, ncols)
    pivot_set = set(pivots)
    free = [c for c in range(ncols) if c not in pivot_set]
    basis = []
    for fc in free:
        vec = [Fraction(0)] * ncols
        vec[fc] = Fraction(1)
        for r, pc in enumerate(pivots):
            vec[pc] = -reduced[r][fc]
        basis.append(vec)
    return basis


def rank(rows, ncols):
    return len(rref(rows, ncols)[1])
