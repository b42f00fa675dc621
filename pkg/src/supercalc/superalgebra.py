"""Exact arithmetic for functions on a superspace R^{p|q}.

A function is a finite sum of Grassmann monomials in the odd coordinates
with coefficients that are rational functions (exact rationals) in the even
coordinates.  Everything is kept in a canonical normal form, so equality of
values is equality of representations.  All derivatives are left
derivatives: d/d(th) acts on the leftmost factor and picks up a minus sign
for every odd factor it jumps over.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from sympy import QQ
from sympy.polys.fields import field as _fraction_field

EVEN = 0
ODD = 1


class ChartMismatchError(ValueError):
    """Operands live on different coordinate systems."""


class UnknownCoordinateError(ValueError):
    """A coordinate name is not declared on the chart."""


class NonHomogeneousError(ValueError):
    """The value mixes even and odd parts where a single parity is needed."""


class ZeroParityError(ValueError):
    """Zero has no parity; the caller must treat it as either."""


class ParityViolationError(ValueError):
    """A substitution or construction does not preserve parities."""


class NotInvertibleError(ZeroDivisionError):
    """Division by a superfunction whose body vanishes."""


@lru_cache(maxsize=None)
def _coefficient_field(even_names):
    # one field object per tuple of even names; sympy fields with equal
    # generators interoperate, the cache just avoids rebuilding
    return _fraction_field(list(even_names), QQ)[0]


@dataclass(frozen=True)
class CoordSystem:
    """Ordered coordinates with parities; even coordinates come first."""

    names: tuple
    parities: tuple

    def __post_init__(self):
        if not isinstance(self.names, tuple):
            object.__setattr__(self, "names", tuple(self.names))
        if not isinstance(self.parities, tuple):
            object.__setattr__(self, "parities", tuple(self.parities))
        if len(self.names) == 0:
            raise ValueError("a chart needs at least one coordinate")
        if len(self.names) != len(self.parities):
            raise ValueError("one parity per coordinate required")
        if len(set(self.names)) != len(self.names):
            raise ValueError("coordinate names must be distinct")
        if any(p not in (EVEN, ODD) for p in self.parities):
            raise ValueError("parities must be 0 or 1")
        seen_odd = False
        for p in self.parities:
            if p == ODD:
                seen_odd = True
            elif seen_odd:
                raise ValueError("even coordinates must be listed first")

    @classmethod
    def build(cls, even=(), odd=()):
        even = tuple(even)
        odd = tuple(odd)
        return cls(even + odd, (EVEN,) * len(even) + (ODD,) * len(odd))

    @property
    def n_even(self):
        return self.parities.count(EVEN)

    @property
    def n_odd(self):
        return self.parities.count(ODD)

    @property
    def dim(self):
        return len(self.names)

    @property
    def even_names(self):
        return self.names[: self.n_even]

    @property
    def odd_names(self):
        return self.names[self.n_even :]

    def index(self, name):
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownCoordinateError(f"coordinate {name!r} not on chart {self.names}") from None

    def parity(self, name):
        return self.parities[self.index(name)]

    def odd_index(self, name):
        """Position of an odd coordinate among the odd block."""
        i = self.index(name)
        if self.parities[i] != ODD:
            raise UnknownCoordinateError(f"{name!r} is not an odd coordinate")
        return i - self.n_even

    @property
    def field(self):
        return _coefficient_field(self.even_names)

    def even_gen(self, name):
        i = self.index(name)
        if self.parities[i] != EVEN:
            raise UnknownCoordinateError(f"{name!r} is not an even coordinate")
        return self.field.gens[i]

    def __repr__(self):
        ev = ",".join(self.even_names)
        od = ",".join(self.odd_names)
        return f"CoordSystem({ev}|{od})"


def _merge_sign(m1, m2):
    """Koszul sign for th^{m1} * th^{m2} with disjoint sorted bitmasks."""
    sign = 1
    m = m2
    while m:
        low = m & -m
        b = low.bit_length() - 1
        if (m1 >> (b + 1)).bit_count() & 1:
            sign = -sign
        m ^= low
    return sign


def _coeff_from_scalar(field, value):
    if isinstance(value, Fraction):
        return field.ground_new(QQ(value.numerator, value.denominator))
    if isinstance(value, int):
        return field.ground_new(QQ(value))
    return field.ground_new(value)


class SuperFunction:
    """Element of the function ring on a chart, in canonical normal form.

    The term map sends a Grassmann monomial, encoded as a bitmask over the
    odd coordinates in declaration order, to a nonzero rational-function
    coefficient in the even coordinates.
    """

    __slots__ = ("chart", "terms")

    def __init__(self, chart, terms):
        self.chart = chart
        self.terms = {m: c for m, c in terms.items() if c}

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, chart):
        return cls(chart, {})

    @classmethod
    def one(cls, chart):
        return cls(chart, {0: chart.field.one})

    @classmethod
    def scalar(cls, chart, value):
        return cls(chart, {0: _coeff_from_scalar(chart.field, value)})

    @classmethod
    def from_coefficient(cls, chart, frac):
        return cls(chart, {0: frac})

    @classmethod
    def coordinate(cls, chart, name):
        i = chart.index(name)
        if chart.parities[i] == EVEN:
            return cls(chart, {0: chart.field.gens[i]})
        return cls(chart, {1 << (i - chart.n_even): chart.field.one})

    # -- predicates and parts -----------------------------------------

    @property
    def is_zero(self):
        return not self.terms

    def body(self):
        """Grassmann-degree-zero coefficient (a rational function)."""
        return self.terms.get(0, self.chart.field.zero)

    def soul(self):
        """The nilpotent remainder after removing the body."""
        return SuperFunction(self.chart, {m: c for m, c in self.terms.items() if m})

    def even_part(self):
        return SuperFunction(self.chart, {m: c for m, c in self.terms.items() if m.bit_count() % 2 == 0})

    def odd_part(self):
        return SuperFunction(self.chart, {m: c for m, c in self.terms.items() if m.bit_count() % 2 == 1})

    def has_parity(self, p):
        """True if every stored term has parity p (zero passes both)."""
        return all(m.bit_count() % 2 == p for m in self.terms)

    def parity(self):
        if self.is_zero:
            raise ZeroParityError("zero superfunction has no parity")
        ps = {m.bit_count() % 2 for m in self.terms}
        if len(ps) > 1:
            raise NonHomogeneousError(f"mixed parity: {self}")
        return ps.pop()

    def homogeneous_parts(self):
        """Nonzero (parity, part) pairs."""
        out = []
        for p, part in ((EVEN, self.even_part()), (ODD, self.odd_part())):
            if not part.is_zero:
                out.append((p, part))
        return out

    # -- ring operations ----------------------------------------------

    def _check_chart(self, other):
        if self.chart != other.chart:
            raise ChartMismatchError(f"{self.chart} vs {other.chart}")

    def __add__(self, other):
        if not isinstance(other, SuperFunction):
            return NotImplemented
        self._check_chart(other)
        terms = dict(self.terms)
        for m, c in other.terms.items():
            s = terms.get(m)
            terms[m] = c if s is None else s + c
        return SuperFunction(self.chart, terms)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return SuperFunction(self.chart, {m: -c for m, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            c = _coeff_from_scalar(self.chart.field, other)
            return SuperFunction(self.chart, {m: v * c for m, v in self.terms.items()})
        if not isinstance(other, SuperFunction):
            return NotImplemented
        self._check_chart(other)
        terms = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                if m1 & m2:
                    continue
                m = m1 | m2
                c = c1 * c2
                if _merge_sign(m1, m2) < 0:
                    c = -c
                s = terms.get(m)
                terms[m] = c if s is None else s + c
        return SuperFunction(self.chart, terms)

    __rmul__ = __mul__

    def __pow__(self, n):
        if n < 0:
            return self.inverse() ** (-n)
        out = SuperFunction.one(self.chart)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def inverse(self):
        b = self.body()
        if not b:
            raise NotInvertibleError("superfunction has zero body")
        binv = SuperFunction.from_coefficient(self.chart, 1 / b)
        nil = self.soul() * binv
        # finite Neumann series; nil is nilpotent of order <= n_odd + 1
        out = SuperFunction.one(self.chart)
        power = SuperFunction.one(self.chart)
        for _ in range(self.chart.n_odd):
            power = -(power * nil)
            if power.is_zero:
                break
            out = out + power
        return binv * out

    def __truediv__(self, other):
        if isinstance(other, int):
            return self * Fraction(1, other)
        if isinstance(other, Fraction):
            return self * (Fraction(1) / other)
        if not isinstance(other, SuperFunction):
            return NotImplemented
        return self * other.inverse()

    def __eq__(self, other):
        if not isinstance(other, SuperFunction):
            return NotImplemented
        return self.chart == other.chart and self.terms == other.terms

    def __ne__(self, other):
        eq = self.__eq__(other)
        return NotImplemented if eq is NotImplemented else not eq

    __hash__ = None

    # -- calculus -------------------------------------------------------

    def partial(self, name):
        """Left partial derivative along a chart coordinate."""
        i = self.chart.index(name)
        if self.chart.parities[i] == EVEN:
            gen = self.chart.field.gens[i]
            return SuperFunction(self.chart, {m: c.diff(gen) for m, c in self.terms.items()})
        bit = 1 << (i - self.chart.n_even)
        terms = {}
        for m, c in self.terms.items():
            if not (m & bit):
                continue
            # jump over the odd factors that precede th_i in the monomial
            if (m & (bit - 1)).bit_count() & 1:
                c = -c
            terms[m ^ bit] = c
        return SuperFunction(self.chart, terms)

    def compose(self, images):
        """Evaluate at superfunction images of the coordinates.

        `images` maps every coordinate name of this chart to a
        SuperFunction on a common chart of matching parity.  This is the
        ring homomorphism underlying coordinate substitution.
        """
        missing = [n for n in self.chart.names if n not in images]
        if missing:
            raise ChartMismatchError(f"no image for coordinates {missing}")
        charts = {img.chart for img in images.values()}
        if len(charts) != 1:
            raise ChartMismatchError("images live on different charts")
        target = charts.pop()
        for n in self.chart.names:
            if not images[n].has_parity(self.chart.parity(n)):
                raise ParityViolationError(f"image of {n!r} has wrong parity")

        one = SuperFunction.one(target)
        even_imgs = [images[n] for n in self.chart.even_names]
        odd_imgs = [images[n] for n in self.chart.odd_names]

        def eval_poly(p):
            total = SuperFunction.zero(target)
            for exps, coeff in p.terms():
                term = SuperFunction.scalar(target, coeff)
                for g, e in zip(even_imgs, exps):
                    for _ in range(e):
                        term = term * g
                total = total + term
            return total

        result = SuperFunction.zero(target)
        for m, c in self.terms.items():
            num = eval_poly(c.numer)
            den = eval_poly(c.denom)
            piece = num * den.inverse() if den != one else num
            mm = m
            while mm:
                low = mm & -mm
                piece = piece * odd_imgs[low.bit_length() - 1]
                mm ^= low
            result = result + piece
        return result

    # -- printing --------------------------------------------------------

    def __str__(self):
        return to_text(self)

    def __repr__(self):
        return f"SuperFunction({self})"


def mul(f, g):
    return f * g


def partial(f, name):
    return f.partial(name)


def parity(f):
    return f.parity()


def _format_rational(q):
    return str(q) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _poly_text(p):
    if not p:
        return "0"
    gens = [str(g) for g in p.ring.gens]
    pieces = []
    for exps, coeff in sorted(p.terms(), key=lambda t: t[0], reverse=True):
        factors = []
        q = Fraction(int(coeff.numerator), int(coeff.denominator))
        for g, e in zip(gens, exps):
            if e == 1:
                factors.append(g)
            elif e > 1:
                factors.append(f"{g}^{e}")
        if not factors:
            pieces.append(_format_rational(q))
        elif q == 1:
            pieces.append("*".join(factors))
        elif q == -1:
            pieces.append("-" + "*".join(factors))
        else:
            pieces.append(_format_rational(q) + "*" + "*".join(factors))
    text = pieces[0]
    for piece in pieces[1:]:
        text += " - " + piece[1:] if piece.startswith("-") else " + " + piece
    return text


def _is_atom(p):
    """Single number, generator, or generator power (safe denominator)."""
    if len(p) != 1:
        return False
    [(exps, coeff)] = p.terms()
    nonzero = [e for e in exps if e]
    if not nonzero:
        return True
    return len(nonzero) == 1 and coeff == p.ring.domain.one


def _coeff_text(c, bare):
    """Render a rational-function coefficient.

    With bare=False the string must bind tighter than a following
    `*th...` factor under the left-associative `*`/`/` grammar.
    """
    num = _poly_text(c.numer)
    if c.denom == c.denom.ring.one:
        if len(c.numer) > 1 and not bare:
            return f"({num})"
        return num
    if len(c.numer) > 1:
        num = f"({num})"
    den = _poly_text(c.denom)
    if not _is_atom(c.denom):
        den = f"({den})"
    return f"{num}/{den}"


def to_text(f):
    """Canonical text form; parses back to the same value."""
    if f.is_zero:
        return "0"
    odd_names = f.chart.odd_names
    pieces = []
    for m in sorted(f.terms, key=lambda m: (m.bit_count(), _mask_bits(m))):
        c = f.terms[m]
        if m == 0:
            pieces.append(_coeff_text(c, bare=True))
            continue
        mono = "*".join(odd_names[b] for b in _mask_bits(m))
        one = f.chart.field.one
        if c == one:
            pieces.append(mono)
        elif c == -one:
            pieces.append("-" + mono)
        else:
            pieces.append(_coeff_text(c, bare=False) + "*" + mono)
    text = pieces[0]
    for piece in pieces[1:]:
        text += " - " + piece[1:] if piece.startswith("-") else " + " + piece
    return text


def _mask_bits(m):
    bits = []
    while m:
        low = m & -m
        bits.append(low.bit_length() - 1)
        m ^= low
    return tuple(bits)
