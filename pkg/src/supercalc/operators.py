"""Differential operators on half-density coefficients.

Operators are finite sums of terms (coefficient x derivative monomial) in
normal order: all derivatives stand to the right of their coefficient and
derivative factors are sorted by coordinate position, with reordering
signs absorbed into the coefficients.  A derivative monomial is an
exponent tuple over the chart coordinates; odd exponents are 0 or 1.

The second-order odd operators built from an odd graded-symmetric tensor
E and an odd potential U act on a half-density coefficient s as

    Delta s = 1/2 ( d_B (E^{BA} d_A s) + U s ).
"""

from __future__ import annotations

import math
from fractions import Fraction

from .superalgebra import (
    EVEN,
    ODD,
    ChartMismatchError,
    NonHomogeneousError,
    SuperFunction,
)
from .supertensor import GRADED_SYMMETRIC, Tensor2, invert, symmetry_type
from .oddpoisson import JacobiError, VectorField, right_hamiltonian_vf

NEG_INF = -math.inf


def _monomial_parity(chart, exps):
    return sum(e * p for e, p in zip(exps, chart.parities)) % 2


def _merge_monomials(chart, m1, m2):
    """Normal order of d^{m1} d^{m2}; returns (sign, exponents) or None.

    Odd derivative factors anticommute among themselves, even ones are
    free; a repeated odd factor kills the term.
    """
    par = chart.parities
    merged = []
    sign = 1
    for i, (a, b) in enumerate(zip(m1, m2)):
        if par[i] == ODD and a + b > 1:
            return None
        merged.append(a + b)
    # count odd factor pairs (i in m1, j in m2) with i > j
    for i in range(chart.dim):
        if par[i] != ODD or not m1[i]:
            continue
        for j in range(i):
            if par[j] == ODD and m2[j]:
                sign = -sign
    return sign, tuple(merged)


class DiffOperator:
    """Normal-ordered differential operator with superfunction coefficients."""

    __slots__ = ("chart", "terms")

    def __init__(self, chart, terms):
        self.chart = chart
        self.terms = {m: c for m, c in terms.items() if not c.is_zero}

    # -- constructors ---------------------------------------------------

    @classmethod
    def zero(cls, chart):
        return cls(chart, {})

    @classmethod
    def multiplication(cls, f):
        return cls(f.chart, {(0,) * f.chart.dim: f})

    @classmethod
    def partial(cls, chart, name):
        exps = [0] * chart.dim
        exps[chart.index(name)] = 1
        return cls(chart, {tuple(exps): SuperFunction.one(chart)})

    @classmethod
    def from_vector_field(cls, x):
        terms = {}
        for i, c in enumerate(x.components):
            if c.is_zero:
                continue
            exps = [0] * x.chart.dim
            exps[i] = 1
            terms[tuple(exps)] = c
        return cls(x.chart, terms)

    # -- structure ------------------------------------------------------

    @property
    def is_zero(self):
        return not self.terms

    def order(self):
        if not self.terms:
            return NEG_INF
        return max(sum(m) for m in self.terms)

    def parity(self):
        if self.is_zero:
            raise NonHomogeneousError("zero operator has no parity")
        ps = set()
        for m, c in self.terms.items():
            pm = _monomial_parity(self.chart, m)
            for pc, _ in c.homogeneous_parts():
                ps.add((pc + pm) % 2)
        if len(ps) != 1:
            raise NonHomogeneousError("operator mixes parities")
        return ps.pop()

    def coefficient(self, exps):
        return self.terms.get(tuple(exps), SuperFunction.zero(self.chart))

    def graded_part(self, degree):
        return DiffOperator(
            self.chart, {m: c for m, c in self.terms.items() if sum(m) == degree}
        )

    def __eq__(self, other):
        if not isinstance(other, DiffOperator):
            return NotImplemented
        return self.chart == other.chart and self.terms == other.terms

    __hash__ = None

    # -- linear structure -------------------------------------------------

    def _check_chart(self, other):
        if self.chart != other.chart:
            raise ChartMismatchError("operators live on different charts")

    def __add__(self, other):
        if not isinstance(other, DiffOperator):
            return NotImplemented
        self._check_chart(other)
        terms = dict(self.terms)
        for m, c in other.terms.items():
            s = terms.get(m)
            terms[m] = c if s is None else s + c
        return DiffOperator(self.chart, terms)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return DiffOperator(self.chart, {m: -c for m, c in self.terms.items()})

    def __mul__(self, scalar):
        return DiffOperator(self.chart, {m: c * scalar for m, c in self.terms.items()})

    __rmul__ = __mul__

    # -- action and composition -------------------------------------------

    def apply(self, s):
        """Apply to a half-density coefficient function."""
        if s.chart != self.chart:
            raise ChartMismatchError("argument lives on a different chart")
        names = self.chart.names
        out = SuperFunction.zero(self.chart)
        for m, c in self.terms.items():
            val = s
            for i in range(self.chart.dim - 1, -1, -1):
                for _ in range(m[i]):
                    val = val.partial(names[i])
                if val.is_zero:
                    break
            if not val.is_zero:
                out = out + c * val
        return out

    def _single_factors(self, m):
        """Derivative factors of a monomial in reading order."""
        out = []
        for i, e in enumerate(m):
            out.extend([i] * e)
        return out

    def _push_through(self, m, coeff):
        """Normal form of d^{m} o (coeff .) as {monomial: coefficient}."""
        chart = self.chart
        names = chart.names
        par = chart.parities
        result = {(0,) * chart.dim: coeff}
        # feed factors from the right end of the monomial inward
        for i in reversed(self._single_factors(m)):
            new = {}
            for mm, c in result.items():
                # d_i o (c .) = (d_i c) . + (-1)^{p(i)p(c)} c d_i
                dc = c.partial(names[i])
                if not dc.is_zero:
                    _accumulate(new, mm, dc)
                for pc, part in c.homogeneous_parts():
                    sign_c = -1 if (par[i] * pc) % 2 else 1
                    unit = [0] * chart.dim
                    unit[i] = 1
                    merged = _merge_monomials(chart, tuple(unit), mm)
                    if merged is None:
                        continue
                    sign_m, mono = merged
                    _accumulate(new, mono, part * (sign_c * sign_m))
            result = new
        return result

    def compose(self, other):
        """Normal-ordered operator product self o other."""
        self._check_chart(other)
        chart = self.chart
        out = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                for ms, cs in self._push_through(m1, c2).items():
                    merged = _merge_monomials(chart, ms, m2)
                    if merged is None:
                        continue
                    sign, mono = merged
                    _accumulate(out, mono, (c1 * cs) * sign)
        return DiffOperator(chart, out)

    def __matmul__(self, other):
        return self.compose(other)

    # -- adjoint ---------------------------------------------------------

    def adjoint(self):
        """Formal adjoint for the pairing int s1 s2 Dz by integration by
        parts: c^dag = c, (d_A)^dag = -d_A, with graded reversal signs."""
        chart = self.chart
        out = DiffOperator.zero(chart)
        for m, c in self.terms.items():
            factors = self._single_factors(m)
            k = len(factors)
            for pc, part in c.homogeneous_parts():
                parities = [pc] + [chart.parities[i] for i in factors]
                # Koszul sign of fully reversing the factor sequence
                rev = sum(
                    parities[i] * parities[j]
                    for i in range(len(parities))
                    for j in range(i + 1, len(parities))
                )
                sign = -1 if (rev + k) % 2 else 1
                term = DiffOperator.multiplication(part * sign)
                for i in factors:
                    term = DiffOperator.partial(chart, chart.names[i]).compose(term)
                out = out + term
        return out

    def __repr__(self):
        if self.is_zero:
            return "DiffOperator(0)"
        names = self.chart.names
        bits = []
        for m in sorted(self.terms, key=lambda m: (sum(m), m)):
            mono = "*".join(
                f"d_{names[i]}" + (f"^{e}" if e > 1 else "")
                for i, e in enumerate(m)
                if e
            )
            bits.append(f"({self.terms[m]})" + (" " + mono if mono else ""))
        return "DiffOperator[" + " + ".join(bits) + "]"


def _accumulate(terms, mono, coeff):
    s = terms.get(mono)
    terms[mono] = coeff if s is None else s + coeff


def compose(d1, d2):
    return d1.compose(d2)


def order(d):
    return d.order()


def formal_adjoint(d):
    return d.adjoint()


def build_delta(e, u=None):
    """Second-order odd operator 1/2 (E^{AB} d_B d_A + (d_B E^{BA}) d_A + U)."""
    chart = e.chart
    if e.parity != ODD:
        raise ValueError("principal symbol tensor must be odd")
    if symmetry_type(e) != GRADED_SYMMETRIC:
        raise ValueError("principal symbol tensor must be graded symmetric")
    if u is None:
        u = SuperFunction.zero(chart)
    if not u.has_parity(ODD):
        raise ValueError("potential must be odd or zero")
    names = chart.names
    n = chart.dim
    terms = {}
    half = SuperFunction.scalar(chart, 1) / 2
    for a in range(n):
        for b in range(n):
            comp = e.components[a][b]
            if comp.is_zero:
                continue
            unit_b = [0] * n
            unit_b[b] = 1
            merged = _merge_monomials(chart, tuple(unit_b), _unit(n, a))
            if merged is not None:
                sign, mono = merged
                _accumulate(terms, mono, comp * half * sign)
        div = SuperFunction.zero(chart)
        for b in range(n):
            div = div + e.components[b][a].partial(names[b])
        if not div.is_zero:
            _accumulate(terms, _unit(n, a), div * half)
    if not u.is_zero:
        _accumulate(terms, (0,) * n, u * half)
    return DiffOperator(chart, terms)


def _unit(n, i):
    exps = [0] * n
    exps[i] = 1
    return tuple(exps)


def delta_squared(e, u=None):
    d = build_delta(e, u)
    return d.compose(d)


def is_jacobi(e):
    """Operator-order criterion: E is Poisson iff order(Delta^2) <= 1."""
    return delta_squared(e).order() <= 1


def superdivergence(x):
    """(-1)^{p(A)} d_A X^A."""
    chart = x.chart
    out = SuperFunction.zero(chart)
    for i, name in enumerate(chart.names):
        d = x.components[i].partial(name)
        out = out + (-d if chart.parities[i] else d)
    return out


def lie_derivative_halfdensity(x):
    """Lie derivative of half-densities along X as the anti-self-adjoint
    part (D - D^dag)/2 of D = X^A d_A; equals X^A d_A + sdiv(X)/2."""
    d = DiffOperator.from_vector_field(x)
    return (d - d.adjoint()) * Fraction(1, 2)


def modular_vf(e, u=None):
    """Even vector field X with Delta^2 = L_X, read off from Delta^2.

    The first-order coefficients of Delta^2 are the components of X; the
    zeroth-order part must then equal sdiv(X)/2, which re-verifies the
    half-density Lie-derivative identity on every call.
    """
    chart = e.chart
    if u is None:
        u = SuperFunction.zero(chart)
    d2 = delta_squared(e, u)
    if d2.order() > 1:
        raise JacobiError("Delta^2 has order > 1; the structure is not Poisson")
    comps = []
    for i in range(chart.dim):
        comps.append(d2.coefficient(_unit(chart.dim, i)))
    x = VectorField(chart, comps, EVEN)
    residual = d2 - lie_derivative_halfdensity(x)
    if not residual.is_zero:
        raise AssertionError("Delta^2 is not the Lie derivative of a field")
    return x


def modular_vf_formula(e, u=None):
    """Local expression (1/2) d_C (E^{CD} d_D d_B E^{BA}) d_A
    + (-1)^{p(A)} E^{AB} (d_B U) d_A, without any operator composition.

    Relative to the potential normalization used by build_delta (the
    potential enters the operator as U/2), the exact modular field is half
    of this expression; see modular_vf.
    """
    chart = e.chart
    names = chart.names
    n = chart.dim
    if u is None:
        u = SuperFunction.zero(chart)
    div = []
    for a in range(n):
        acc = SuperFunction.zero(chart)
        for b in range(n):
            acc = acc + e.components[b][a].partial(names[b])
        div.append(acc)
    comps = []
    for a in range(n):
        first = SuperFunction.zero(chart)
        for c in range(n):
            inner = SuperFunction.zero(chart)
            for d_ in range(n):
                comp = e.components[c][d_]
                if comp.is_zero:
                    continue
                inner = inner + comp * div[a].partial(names[d_])
            first = first + inner.partial(names[c])
        comps.append(first / 2)
    pot = right_hamiltonian_vf(u, _structure_view(e)) if not u.is_zero else None
    if pot is not None:
        comps = [c + p for c, p in zip(comps, pot.components)]
    return VectorField(chart, comps, EVEN)


def _structure_view(e):
    from .oddpoisson import OddPoissonStructure

    return OddPoissonStructure(e)


def canonical_potential(e):
    """Potential of the distinguished operator, in arbitrary coordinates:

        U = 1/4 d_B d_A E^{AB}
            - (-1)^{p(B)(p(D)+1)} 1/12 (d_A E^{BC}) E_{CD} (d_B E^{DA}) .

    Requires a non-degenerate Jacobi structure; the result vanishes in any
    coordinates where the components are the constant unit pairing.
    """
    chart = e.chart
    if symmetry_type(e) != GRADED_SYMMETRIC or e.parity != ODD:
        raise ValueError("needs an odd graded-symmetric tensor")
    if not is_jacobi(e):
        raise JacobiError("structure does not satisfy the Jacobi identity")
    lower = invert(e)  # raises SingularBodyError when degenerate
    names = chart.names
    par = chart.parities
    n = chart.dim
    first = SuperFunction.zero(chart)
    for a in range(n):
        for b in range(n):
            first = first + e.components[a][b].partial(names[a]).partial(names[b])
    total = first / 4
    second = SuperFunction.zero(chart)
    for a in range(n):
        for b in range(n):
            for c in range(n):
                dae = e.components[b][c].partial(names[a])
                if dae.is_zero:
                    continue
                for d_ in range(n):
                    ecd = lower.components[c][d_]
                    if ecd.is_zero:
                        continue
                    dbe = e.components[d_][a].partial(names[b])
                    if dbe.is_zero:
                        continue
                    term = dae * ecd * dbe
                    if (par[b] * (par[d_] + 1)) % 2:
                        term = -term
                    second = second + term
    return total - second / 12
