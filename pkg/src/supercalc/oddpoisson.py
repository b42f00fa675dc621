"""Odd brackets generated by odd graded-symmetric contravariant tensors.

The bracket of two functions is

    {f, g} = sum_{A,B} (-1)^{p(A) p(f)} (d_A f) E^{AB} (d_B g)

for homogeneous f, extended bilinearly.  On the standard constant
structure this reduces to the familiar antibracket

    {f, g} = df/dx^i dg/dth_i + (-1)^{p(f)} df/dth_i dg/dx^i ,

which is what pins the sign dressing.  Coordinate brackets come out as
{z^A, z^B} = (-1)^{p(A)} E^{AB}.
"""

from __future__ import annotations

from .superalgebra import (
    EVEN,
    ODD,
    ChartMismatchError,
    CoordSystem,
    NonHomogeneousError,
    SuperFunction,
)
from .supertensor import (
    GRADED_SYMMETRIC,
    LOWER,
    UPPER,
    SingularBodyError,
    Tensor2,
    invert,
    symmetry_type,
)


class JacobiError(ValueError):
    """The structure does not satisfy the Jacobi identity."""


JACOBI_UNKNOWN = "unknown"
JACOBI_HOLDS = "holds"
JACOBI_FAILS = "fails"


def darboux_chart(n, even_prefix="x", odd_prefix="th"):
    return CoordSystem.build(
        even=tuple(f"{even_prefix}{i+1}" for i in range(n)),
        odd=tuple(f"{odd_prefix}{i+1}" for i in range(n)),
    )


def standard_symplectic_tensor(chart):
    """The odd symmetric pairing with unit blocks: E^{x_i th_i} = E^{th_i x_i} = 1."""
    n = chart.n_even
    if chart.n_odd != n:
        raise ValueError("needs an n|n chart")
    one = SuperFunction.one(chart)
    entries = {}
    for i in range(n):
        entries[(chart.names[i], chart.names[n + i])] = one
        entries[(chart.names[n + i], chart.names[i])] = one
    return Tensor2.from_dict(chart, entries, ODD, UPPER)


def odd_riemannian_tensor(chart):
    """The odd antisymmetric pairing: E^{x_i th_i} = 1, E^{th_i x_i} = -1."""
    n = chart.n_even
    if chart.n_odd != n:
        raise ValueError("needs an n|n chart")
    one = SuperFunction.one(chart)
    entries = {}
    for i in range(n):
        entries[(chart.names[i], chart.names[n + i])] = one
        entries[(chart.names[n + i], chart.names[i])] = -one
    return Tensor2.from_dict(chart, entries, ODD, UPPER)


class VectorField:
    """First-order derivation X = sum X^A d_A with left coefficients."""

    __slots__ = ("chart", "components", "parity")

    def __init__(self, chart, components, parity):
        self.chart = chart
        self.components = tuple(components)
        self.parity = parity
        if len(self.components) != chart.dim:
            raise ValueError("one component per coordinate required")
        for i, c in enumerate(self.components):
            if c.chart != chart:
                raise ValueError("components must live on the field's chart")
            if not c.has_parity((parity + chart.parities[i]) % 2):
                raise NonHomogeneousError(f"component {chart.names[i]} has wrong parity")

    @classmethod
    def zero(cls, chart, parity=EVEN):
        z = SuperFunction.zero(chart)
        return cls(chart, [z] * chart.dim, parity)

    @classmethod
    def from_dict(cls, chart, comps, parity):
        z = SuperFunction.zero(chart)
        return cls(chart, [comps.get(n, z) for n in chart.names], parity)

    def component(self, name):
        return self.components[self.chart.index(name)]

    def apply(self, f):
        out = SuperFunction.zero(self.chart)
        for name, c in zip(self.chart.names, self.components):
            out = out + c * f.partial(name)
        return out

    def is_zero(self):
        return all(c.is_zero for c in self.components)

    def __add__(self, other):
        if self.parity != other.parity and not (self.is_zero() or other.is_zero()):
            raise NonHomogeneousError("cannot add fields of different parity")
        par = other.parity if self.is_zero() else self.parity
        return VectorField(
            self.chart, [a + b for a, b in zip(self.components, other.components)], par
        )

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return VectorField(self.chart, [-c for c in self.components], self.parity)

    def __eq__(self, other):
        if not isinstance(other, VectorField):
            return NotImplemented
        return self.chart == other.chart and self.components == other.components

    __hash__ = None

    def __repr__(self):
        inner = ", ".join(f"{n}: {c}" for n, c in zip(self.chart.names, self.components))
        return f"VectorField({inner})"


class OddPoissonStructure:
    """An odd graded-symmetric upper tensor with cached Jacobi status."""

    def __init__(self, tensor):
        if tensor.parity != ODD:
            raise ValueError("structure tensor must be odd")
        if tensor.variance != UPPER:
            raise ValueError("structure tensor must be contravariant")
        if symmetry_type(tensor) != GRADED_SYMMETRIC:
            raise ValueError("structure tensor must be graded symmetric")
        self.tensor = tensor
        self.chart = tensor.chart
        self._jacobi = JACOBI_UNKNOWN
        self._witness = None

    @property
    def jacobi_status(self):
        return self._jacobi

    def jacobi_holds(self):
        if self._jacobi == JACOBI_UNKNOWN:
            table = jacobiator(self)
            self._jacobi = JACOBI_HOLDS if not table else JACOBI_FAILS
            self._witness = table or None
        return self._jacobi == JACOBI_HOLDS

    @property
    def jacobi_witness(self):
        self.jacobi_holds()
        return self._witness


def bracket(f, g, structure):
    """Odd bracket of two superfunctions."""
    e = structure.tensor
    chart = e.chart
    if f.chart != chart or g.chart != chart:
        raise ChartMismatchError("bracket arguments must share the structure chart")
    out = SuperFunction.zero(chart)
    parts = f.homogeneous_parts()
    dg = [g.partial(name) for name in chart.names]
    for pf, fh in parts:
        for i, na in enumerate(chart.names):
            dfa = fh.partial(na)
            if dfa.is_zero:
                continue
            sign = -1 if (chart.parities[i] * pf) % 2 else 1
            for j in range(chart.dim):
                comp = e.components[i][j]
                if comp.is_zero or dg[j].is_zero:
                    continue
                term = dfa * comp * dg[j]
                out = out + (term if sign > 0 else -term)
    return out


def coordinate_bracket_tensor(structure):
    """Matrix of coordinate brackets {z^A, z^B} = (-1)^{p(A)} E^{AB}."""
    e = structure.tensor
    par = e.chart.parities
    return e.map_components(lambda c, i, j: -c if par[i] else c)


def jacobiator(structure):
    """Nonzero components of the graded Jacobi defect on coordinate triples.

    The defect used here is

        J(A,B,C) = (-1)^{(p(A)+1)(p(C)+1)} {z^A, {z^B, z^C}} + cyclic ,

    the shifted-parity cyclic identity.  An empty table certifies the
    Jacobi identity; agreement with the operator-order criterion is part
    of the test battery.
    """
    e = structure.tensor
    chart = e.chart
    names = chart.names
    par = chart.parities
    coords = [SuperFunction.coordinate(chart, n) for n in names]
    inner = {}
    for b in range(chart.dim):
        for c in range(chart.dim):
            inner[b, c] = bracket(coords[b], coords[c], structure)
    table = {}
    for a in range(chart.dim):
        for b in range(chart.dim):
            for c in range(chart.dim):
                total = SuperFunction.zero(chart)
                for (i, j, k) in ((a, b, c), (b, c, a), (c, a, b)):
                    term = bracket(coords[i], inner[j, k], structure)
                    if (par[i] + 1) * (par[k] + 1) % 2:
                        term = -term
                    total = total + term
                if not total.is_zero:
                    table[(names[a], names[b], names[c])] = total
    return table


def hamiltonian_vf(phi, structure):
    """Derivation {phi, .}; its parity is p(phi) + 1."""
    e = structure.tensor
    chart = e.chart
    if phi.chart != chart:
        raise ChartMismatchError("hamiltonian function must live on the structure chart")
    if phi.is_zero:
        return VectorField.zero(chart, parity=ODD)
    p_phi = phi.parity()
    zero = SuperFunction.zero(chart)
    comps = [zero] * chart.dim
    for i, na in enumerate(chart.names):
        dphi = phi.partial(na)
        if dphi.is_zero:
            continue
        sign = -1 if (chart.parities[i] * p_phi) % 2 else 1
        for j in range(chart.dim):
            comp = e.components[i][j]
            if comp.is_zero:
                continue
            term = dphi * comp
            comps[j] = comps[j] + (term if sign > 0 else -term)
    return VectorField(chart, comps, (p_phi + 1) % 2)


def right_hamiltonian_vf(f, structure):
    """Derivation {., F}; components (-1)^{p(A)} E^{AB} d_B F.

    For odd F this is minus hamiltonian_vf(F); it is the field that
    appears in the potential term of the modular field.
    """
    e = structure.tensor
    chart = e.chart
    zero = SuperFunction.zero(chart)
    comps = []
    for i in range(chart.dim):
        acc = zero
        for j, nb in enumerate(chart.names):
            comp = e.components[i][j]
            if comp.is_zero:
                continue
            acc = acc + comp * f.partial(nb)
        comps.append(-acc if chart.parities[i] else acc)
    par = (f.parity() + 1) % 2 if not f.is_zero else EVEN
    return VectorField(chart, comps, par)


def _pairing(f, pf, g, tensor):
    """(-1)^{p(A) p(f)} (d_A f) T^{AB} (d_B g) for homogeneous f."""
    chart = tensor.chart
    out = SuperFunction.zero(chart)
    for i, na in enumerate(chart.names):
        dfa = f.partial(na)
        if dfa.is_zero:
            continue
        sign = -1 if (chart.parities[i] * pf) % 2 else 1
        for j, nb in enumerate(chart.names):
            comp = tensor.components[i][j]
            if comp.is_zero:
                continue
            term = dfa * comp * g.partial(nb)
            out = out + (term if sign > 0 else -term)
    return out


def lie_derivative_tensor(x, t):
    """Graded Lie derivative of a rank-2 tensor along a homogeneous field.

    For an upper tensor the components are read off from the defect of the
    derivation property of the induced pairing:

        (L_X T)(f, g) = X(T(f,g)) - T(Xf, g)
                        - (-1)^{p(X)(p(T)+p(f))} T(f, Xg) .

    For odd T this is exactly the derivation law that the graded Jacobi
    identity grants to Hamiltonian fields; on purely even charts it is the
    textbook formula.  A lower tensor must be invertible; its defect is
    obtained from the upper defect of the inverse by sandwiching, which
    reproduces the classical covariant formula on purely even charts.
    """
    chart = t.chart
    if x.chart != chart:
        raise ChartMismatchError("field and tensor must share a chart")
    if t.variance == LOWER:
        upper = Tensor2(chart, _lower_inverse_components(t), t.parity, UPPER)
        upper_defect = lie_derivative_tensor(x, upper)
        low = t.components
        n = chart.dim
        zero = SuperFunction.zero(chart)
        sandwich = [
            [
                -sum(
                    (
                        low[i][k] * upper_defect.components[k][l] * low[l][j]
                        for k in range(n)
                        for l in range(n)
                    ),
                    zero,
                )
                for j in range(n)
            ]
            for i in range(n)
        ]
        return Tensor2(chart, sandwich, (t.parity + x.parity) % 2, LOWER)

    px, pt = x.parity, t.parity
    par = chart.parities
    coords = [SuperFunction.coordinate(chart, n) for n in chart.names]
    n = chart.dim
    comps = []
    for a in range(n):
        row = []
        for b in range(n):
            pair_ab = _pairing(coords[a], par[a], coords[b], t)
            term = x.apply(pair_ab)
            t1 = _pairing(x.components[a], (px + par[a]) % 2, coords[b], t)
            t2 = _pairing(coords[a], par[a], x.components[b], t)
            if (px * (pt + par[a])) % 2:
                t2 = -t2
            defect = term - t1 - t2
            if par[a]:
                defect = -defect
            row.append(defect)
        comps.append(row)
    return Tensor2(chart, comps, (pt + px) % 2, UPPER)


def _lower_inverse_components(t):
    """Components of the upper tensor inverse to a lower one."""
    from .supertensor import SuperMatrix

    matrix = SuperMatrix(t.chart, t.components, t.parity)
    inv = matrix.invert()
    return inv.entries


def lie_preserves(x, t):
    """Whether L_X T vanishes; returns (flag, defect tensor)."""
    defect = lie_derivative_tensor(x, t)
    return defect.is_zero(), defect
