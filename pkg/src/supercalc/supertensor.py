"""Supermatrices and rank-2 tensor fields over the superfunction ring.

Covers graded symmetry classification, the parity-shift map on
contravariant tensors, inversion over a ring with nilpotents, and the
Berezinian (superdeterminant).
"""

from __future__ import annotations

from .superalgebra import EVEN, ODD, SuperFunction

GRADED_SYMMETRIC = "graded_symmetric"
GRADED_ANTISYMMETRIC = "graded_antisymmetric"
NEITHER = "neither"

UPPER = "upper"
LOWER = "lower"


class SingularBodyError(ValueError):
    """The body of a supermatrix is not invertible."""

    def __init__(self, message, body_rank=None):
        super().__init__(message)
        self.body_rank = body_rank


class SingularOddBlockError(ValueError):
    """The odd-odd block of a supermatrix has a singular body."""


def _as_grid(entries):
    grid = tuple(tuple(row) for row in entries)
    n = len(grid)
    if any(len(row) != n for row in grid):
        raise ValueError("square array of entries required")
    return grid


class SuperMatrix:
    """Square array of superfunctions with a block parity structure.

    Entry (i, j) must be homogeneous of parity p(i)+p(j)+parity or zero,
    where p refers to the chart coordinate at that row/column position.
    """

    __slots__ = ("chart", "entries", "parity")

    def __init__(self, chart, entries, parity=EVEN):
        self.chart = chart
        self.entries = _as_grid(entries)
        self.parity = parity
        if len(self.entries) != chart.dim:
            raise ValueError("entry grid must match chart dimension")
        for i, row in enumerate(self.entries):
            for j, e in enumerate(row):
                if e.chart != chart:
                    raise ValueError("entries must live on the matrix chart")
                want = (chart.parities[i] + chart.parities[j] + parity) % 2
                if not e.has_parity(want):
                    raise ValueError(f"entry ({i},{j}) breaks the parity pattern")

    @classmethod
    def identity(cls, chart):
        one = SuperFunction.one(chart)
        zero = SuperFunction.zero(chart)
        n = chart.dim
        return cls(chart, [[one if i == j else zero for j in range(n)] for i in range(n)])

    @property
    def dim(self):
        return len(self.entries)

    def __eq__(self, other):
        if not isinstance(other, SuperMatrix):
            return NotImplemented
        return self.chart == other.chart and self.entries == other.entries

    __hash__ = None

    def __mul__(self, other):
        if not isinstance(other, SuperMatrix):
            return NotImplemented
        n = self.dim
        zero = SuperFunction.zero(self.chart)
        prod = [
            [sum((self.entries[i][k] * other.entries[k][j] for k in range(n)), zero) for j in range(n)]
            for i in range(n)
        ]
        return SuperMatrix(self.chart, prod, (self.parity + other.parity) % 2)

    def body_grid(self):
        return [[e.body() for e in row] for row in self.entries]

    def is_zero(self):
        return all(e.is_zero for row in self.entries for e in row)

    def invert(self):
        """Two-sided inverse: invert the body exactly, then correct the
        nilpotent part with a finite Neumann series."""
        n = self.dim
        chart = self.chart
        body_inv, rank = _invert_over_fractions(self.body_grid())
        if body_inv is None:
            raise SingularBodyError(f"body has rank {rank} < {n}", body_rank=rank)
        binv = SuperMatrix(
            chart,
            [[SuperFunction.from_coefficient(chart, c) for c in row] for row in body_inv],
            self.parity,
        )
        nil = SuperMatrix(
            chart, [[e.soul() for e in row] for row in self.entries], self.parity
        )
        k = binv * nil
        # (1 + K)^{-1} = sum (-K)^m, truncated by Grassmann nilpotency
        acc = SuperMatrix.identity(chart)
        power = SuperMatrix.identity(chart)
        for _ in range(chart.n_odd):
            power = _scale(power * k, -1)
            if power.is_zero():
                break
            acc = _add(acc, power)
        inv = acc * binv
        assert (self * inv) == SuperMatrix.identity(chart), "inversion lost exactness"
        return SuperMatrix(chart, inv.entries, self.parity)

    def berezinian(self):
        """det(A - B D^{-1} C) / det(D) over the even/odd block split."""
        if self.parity != EVEN:
            raise ValueError("Berezinian needs an even supermatrix")
        chart = self.chart
        p, q = chart.n_even, chart.n_odd
        a = [[self.entries[i][j] for j in range(p)] for i in range(p)]
        b = [[self.entries[i][p + j] for j in range(q)] for i in range(p)]
        c = [[self.entries[p + i][j] for j in range(p)] for i in range(q)]
        d = [[self.entries[p + i][p + j] for j in range(q)] for i in range(q)]
        if q == 0:
            return _det(a, chart)
        d_inv = _grid_inverse(d, chart)
        if d_inv is None:
            raise SingularOddBlockError("odd-odd block body is singular")
        zero = SuperFunction.zero(chart)
        schur = [
            [
                a[i][j]
                - sum(
                    (b[i][k] * d_inv[k][l] * c[l][j] for k in range(q) for l in range(q)),
                    zero,
                )
                for j in range(p)
            ]
            for i in range(p)
        ]
        return _det(schur, chart) * _det(d, chart).inverse()


def _add(m1, m2):
    n = m1.dim
    return SuperMatrix(
        m1.chart,
        [[m1.entries[i][j] + m2.entries[i][j] for j in range(n)] for i in range(n)],
        m1.parity,
    )


def _scale(m, c):
    return SuperMatrix(m.chart, [[e * c for e in row] for row in m.entries], m.parity)


def _invert_over_fractions(grid):
    """Gauss-Jordan over the rational-function field.

    Returns (inverse, n) or (None, rank) if singular.
    """
    n = len(grid)
    if n == 0:
        return [], 0
    m = [list(row) for row in grid]
    aug = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    rank = 0
    for col in range(n):
        pivot = next((r for r in range(rank, n) if m[r][col]), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        aug[rank], aug[pivot] = aug[pivot], aug[rank]
        inv = 1 / m[rank][col]
        m[rank] = [e * inv for e in m[rank]]
        aug[rank] = [e * inv for e in aug[rank]]
        for r in range(n):
            if r == rank:
                continue
            f = m[r][col]
            if not f:
                continue
            m[r] = [e - f * g for e, g in zip(m[r], m[rank])]
            aug[r] = [e - f * g for e, g in zip(aug[r], aug[rank])]
        rank += 1
    if rank < n:
        return None, rank
    return aug, n


def _grid_inverse(grid, chart):
    """Inverse of a square grid of superfunctions, or None if the body is
    singular.  Body inversion plus Neumann correction, as in SuperMatrix."""
    n = len(grid)
    body_inv, _ = _invert_over_fractions([[e.body() for e in row] for row in grid])
    if body_inv is None:
        return None
    zero = SuperFunction.zero(chart)
    binv = [[SuperFunction.from_coefficient(chart, c) for c in row] for row in body_inv]
    nil = [[e.soul() for e in row] for row in grid]
    k = _grid_mul(binv, nil, zero)
    acc = _grid_identity(chart, n)
    power = _grid_identity(chart, n)
    for _ in range(chart.n_odd):
        power = [[-e for e in row] for row in _grid_mul(power, k, zero)]
        if all(e.is_zero for row in power for e in row):
            break
        acc = [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(acc, power)]
    return _grid_mul(acc, binv, zero)


def _grid_mul(g1, g2, zero):
    n = len(g1)
    return [
        [sum((g1[i][k] * g2[k][j] for k in range(n)), zero) for j in range(n)]
        for i in range(n)
    ]


def _grid_identity(chart, n):
    one = SuperFunction.one(chart)
    zero = SuperFunction.zero(chart)
    return [[one if i == j else zero for j in range(n)] for i in range(n)]


def _det(grid, chart):
    """Determinant of a grid of even (hence commuting) superfunctions."""
    n = len(grid)
    if n == 0:
        return SuperFunction.one(chart)
    if n == 1:
        return grid[0][0]
    total = SuperFunction.zero(chart)
    for j in range(n):
        if grid[0][j].is_zero:
            continue
        minor = [[grid[i][k] for k in range(n) if k != j] for i in range(1, n)]
        term = grid[0][j] * _det(minor, chart)
        total = total + term if j % 2 == 0 else total - term
    return total


class Tensor2:
    """Rank-2 tensor field with superfunction components.

    `components[A][B]` holds T^{AB} (upper variance) or T_{AB} (lower).
    Component (A, B) must be homogeneous of parity p(A)+p(B)+parity.
    """

    __slots__ = ("chart", "variance", "components", "parity")

    def __init__(self, chart, components, parity, variance=UPPER):
        if variance not in (UPPER, LOWER):
            raise ValueError("variance must be 'upper' or 'lower'")
        self.chart = chart
        self.components = _as_grid(components)
        self.parity = parity
        self.variance = variance
        if len(self.components) != chart.dim:
            raise ValueError("component grid must match chart dimension")
        for i, row in enumerate(self.components):
            for j, e in enumerate(row):
                if e.chart != chart:
                    raise ValueError("components must live on the tensor chart")
                want = (chart.parities[i] + chart.parities[j] + parity) % 2
                if not e.has_parity(want):
                    raise ValueError(f"component ({i},{j}) breaks the parity pattern")

    @classmethod
    def from_dict(cls, chart, entries, parity, variance=UPPER):
        """Build from a {(name_a, name_b): SuperFunction} mapping."""
        n = chart.dim
        zero = SuperFunction.zero(chart)
        grid = [[zero for _ in range(n)] for _ in range(n)]
        for (na, nb), value in entries.items():
            grid[chart.index(na)][chart.index(nb)] = value
        return cls(chart, grid, parity, variance)

    def component(self, name_a, name_b):
        return self.components[self.chart.index(name_a)][self.chart.index(name_b)]

    def __eq__(self, other):
        if not isinstance(other, Tensor2):
            return NotImplemented
        return (
            self.chart == other.chart
            and self.variance == other.variance
            and self.parity == other.parity
            and self.components == other.components
        )

    __hash__ = None

    def is_zero(self):
        return all(e.is_zero for row in self.components for e in row)

    def map_components(self, fn):
        return Tensor2(
            self.chart,
            [[fn(e, i, j) for j, e in enumerate(row)] for i, row in enumerate(self.components)],
            self.parity,
            self.variance,
        )

    def body_rank(self):
        _, rank = _invert_over_fractions([[e.body() for e in row] for row in self.components])
        return rank if rank is not None else self.chart.dim


def symmetry_type(t):
    """Classify an upper tensor against T^{BA} = +/- (-1)^{p(A)p(B)} T^{AB}."""
    if t.variance != UPPER:
        raise ValueError("symmetry classification applies to upper tensors")
    par = t.chart.parities
    sym = anti = True
    for i in range(t.chart.dim):
        for j in range(t.chart.dim):
            flipped = t.components[j][i]
            if par[i] * par[j]:
                flipped = -flipped
            if flipped != t.components[i][j]:
                sym = False
            if flipped != -t.components[i][j]:
                anti = False
    if sym:
        return GRADED_SYMMETRIC
    if anti:
        return GRADED_ANTISYMMETRIC
    return NEITHER


def parity_shift(t):
    """Row-sign map X^{AB} -> (-1)^{p(A)} X^{AB} on upper tensors."""
    if t.variance != UPPER:
        raise ValueError("parity shift applies to upper tensors")
    par = t.chart.parities
    return t.map_components(lambda e, i, j: -e if par[i] else e)


def shifted_symmetry_type(t):
    """Classify against T^{BA} = +/- (-1)^{(p(A)+1)(p(B)+1)} T^{AB}."""
    if t.variance != UPPER:
        raise ValueError("symmetry classification applies to upper tensors")
    par = t.chart.parities
    sym = anti = True
    for i in range(t.chart.dim):
        for j in range(t.chart.dim):
            flipped = t.components[j][i]
            if (par[i] + 1) * (par[j] + 1) % 2:
                flipped = -flipped
            if flipped != t.components[i][j]:
                sym = False
            if flipped != -t.components[i][j]:
                anti = False
    if sym:
        return GRADED_SYMMETRIC
    if anti:
        return GRADED_ANTISYMMETRIC
    return NEITHER


def invert(t):
    """Inverse tensor with sum_B T^{AB} (T^{-1})_{BC} = delta^A_C exactly."""
    if t.variance != UPPER:
        raise ValueError("invert expects an upper tensor")
    matrix = SuperMatrix(t.chart, t.components, t.parity)
    inv = matrix.invert()
    return Tensor2(t.chart, inv.entries, t.parity, LOWER)


def berezinian(m):
    return m.berezinian()
