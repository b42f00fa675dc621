"""Parity-preserving coordinate changes and transport of structures.

A SuperDiffeo stores the new coordinates as superfunctions of the old
ones.  Berezinians enter only through d(Ber)/Ber, and half-density
transport is realized by operator conjugation with the rewriting rule

    J^{-1/2} d_A (J^{1/2} f) = d_A f + 1/2 (d_A J / J) f ,

so neither log J nor any square root is ever materialized.
"""

from __future__ import annotations

from fractions import Fraction

from .superalgebra import (
    EVEN,
    ODD,
    ChartMismatchError,
    ParityViolationError,
    SuperFunction,
)
from .supertensor import SuperMatrix, Tensor2, SingularOddBlockError
from .oddpoisson import VectorField
from .operators import DiffOperator, build_delta


class NotInvertibleInRingError(ValueError):
    """The inverse map does not exist inside the rational coefficient ring."""


class SuperDiffeo:
    """Invertible parity-preserving map; `maps` sends each target
    coordinate name to its expression in the source coordinates."""

    __slots__ = ("source", "target", "maps", "_jacobian", "_ber", "_inverse")

    def __init__(self, source, target, maps, _inverse=None):
        self.source = source
        self.target = target
        self.maps = dict(maps)
        self._jacobian = None
        self._ber = None
        self._inverse = _inverse
        if source.parities != target.parities:
            raise ChartMismatchError("source and target must have equal signatures")
        missing = [n for n in target.names if n not in self.maps]
        if missing:
            raise ValueError(f"missing component maps for {missing}")
        for name in target.names:
            img = self.maps[name]
            if img.chart != source:
                raise ChartMismatchError(f"map for {name!r} not on the source chart")
            if not img.has_parity(target.parity(name)):
                raise ParityViolationError(f"map for {name!r} changes parity")

    @classmethod
    def identity(cls, chart):
        maps = {n: SuperFunction.coordinate(chart, n) for n in chart.names}
        out = cls(chart, chart, maps)
        out._inverse = out
        return out

    # -- basic calculus ----------------------------------------------------

    def jacobian(self):
        """Supermatrix of left partials, entry (B, A') = d(new^{A'})/d(old^B).

        Rows are indexed by the differentiation coordinate.  With left
        derivatives this is the layout that composes multiplicatively:
        J_{phi after psi} = J_psi * (J_phi o psi), entrywise in the ring,
        which makes the Berezinian a cocycle.
        """
        if self._jacobian is None:
            grid = [
                [self.maps[na].partial(nb) for na in self.target.names]
                for nb in self.source.names
            ]
            self._jacobian = SuperMatrix(self.source, grid, EVEN)
        return self._jacobian

    def ber_jacobian(self):
        """Berezinian of the Jacobian, as a function of the source coordinates."""
        if self._ber is None:
            self._ber = self.jacobian().berezinian()
        return self._ber

    def substitute(self, f):
        """Pull a function on the target chart back to the source chart."""
        if f.chart != self.target:
            raise ChartMismatchError("substitute expects a function on the target chart")
        return f.compose(self.maps)

    def compose(self, other):
        """self after other; other maps first."""
        if other.target != self.source:
            raise ChartMismatchError("charts do not chain")
        maps = {n: other.substitute(img) for n, img in self.maps.items()}
        return SuperDiffeo(other.source, self.target, maps)

    def __eq__(self, other):
        if not isinstance(other, SuperDiffeo):
            return NotImplemented
        return (
            self.source == other.source
            and self.target == other.target
            and all(self.maps[n] == other.maps[n] for n in self.target.names)
        )

    __hash__ = None

    # -- inversion ----------------------------------------------------------

    def inverse(self, max_iterations=40):
        """Newton iteration in the function ring; exact or an error.

        Affine bodies invert in one step, unipotent triangular bodies in
        finitely many; the nilpotent correction terminates by Grassmann
        nilpotency.  Maps whose body inverse leaves the rational ring are
        rejected.
        """
        if self._inverse is not None:
            return self._inverse
        src, tgt = self.source, self.target
        guess = {n_src: SuperFunction.coordinate(tgt, n_tgt)
                 for n_src, n_tgt in zip(src.names, tgt.names)}
        target_coords = {n: SuperFunction.coordinate(tgt, n) for n in tgt.names}
        for _ in range(max_iterations):
            residual = {
                na: self.maps[na].compose(guess) - target_coords[na]
                for na in tgt.names
            }
            if all(r.is_zero for r in residual.values()):
                inv = SuperDiffeo(tgt, src, guess, _inverse=self)
                self._inverse = inv
                # confirm the other composition as well
                for n in src.names:
                    if inv.maps[n].compose(self.maps) != SuperFunction.coordinate(src, n):
                        raise NotInvertibleInRingError("one-sided inverse only")
                return inv
            # linearization: delta^B (d_B phi^A)(guess) = -residual^A
            n_dim = src.dim
            grid = [
                [self.maps[na].partial(nb).compose(guess) for na in tgt.names]
                for nb in src.names
            ]
            try:
                n_inv = SuperMatrix(tgt, grid, EVEN).invert()
            except Exception as exc:
                raise NotInvertibleInRingError(f"Jacobian not invertible: {exc}") from exc
            new_guess = dict(guess)
            for bi, nb in enumerate(src.names):
                delta = SuperFunction.zero(tgt)
                for ai, na in enumerate(tgt.names):
                    delta = delta + residual[na] * n_inv.entries[ai][bi]
                new_guess[nb] = guess[nb] - delta
            guess = new_guess
        raise NotInvertibleInRingError("Newton iteration did not terminate; "
                                       "inverse not in the rational ring")


def pushforward_tensor(t, phi):
    """Transport a rank-2 contravariant tensor along a coordinate change.

    Components transform with two Jacobian factors and a Koszul sign from
    moving the first factor out of the tensor slot:

        T'^{A'B'} = (-1)^{p(B')(p(A)+p(A'))} T^{AB} (d_B phi^{B'}) (d_A phi^{A'})

    evaluated in the old coordinates and then expressed in the new ones.
    """
    if t.chart != phi.source:
        raise ChartMismatchError("tensor must live on the source chart")
    if t.variance != "upper":
        raise ValueError("pushforward implemented for upper tensors")
    src, tgt = phi.source, phi.target
    inv = phi.inverse()
    d_phi = {
        (na, nb): phi.maps[na].partial(nb) for na in tgt.names for nb in src.names
    }
    par_src = src.parities
    par_tgt = tgt.parities
    n = src.dim
    comps = []
    for ai, na in enumerate(tgt.names):
        row = []
        for bi, nb in enumerate(tgt.names):
            acc = SuperFunction.zero(src)
            for a in range(n):
                da = d_phi[(na, src.names[a])]
                if da.is_zero:
                    continue
                for b in range(n):
                    comp = t.components[a][b]
                    if comp.is_zero:
                        continue
                    db = d_phi[(nb, src.names[b])]
                    if db.is_zero:
                        continue
                    term = comp * db * da
                    if (par_tgt[bi] * (par_src[a] + par_tgt[ai])) % 2:
                        term = -term
                    acc = acc + term
            row.append(inv.substitute(acc))
        comps.append(row)
    return Tensor2(tgt, comps, t.parity, "upper")


def _log_derivatives(phi):
    """d_{A'} J / J on the target chart, for J the Berezinian of the
    Jacobian of phi re-expressed in the new coordinates."""
    ber = phi.inverse().substitute(phi.ber_jacobian())
    ber_inv = ber.inverse()
    return [ber.partial(n) * ber_inv for n in phi.target.names], ber


def transform_potential(u, e, phi):
    """Transport a potential along a coordinate change:

        U' = U + 1/2 d_{A'} (E^{A'B'} d_{B'} log J)
               - 1/4 (d_{A'} log J) E^{A'B'} (d_{B'} log J) ,

    with E^{A'B'} the transported tensor and every d log J computed as
    (d J)/J.  The sign of the quadratic term is pinned by two independent
    oracles: the closed-form canonical potential of transported
    structures, and direct operator conjugation; with left derivatives
    and this Jacobian orientation the term enters negatively.
    """
    if u.chart != phi.source or e.chart != phi.source:
        raise ChartMismatchError("potential and tensor must live on the source chart")
    tgt = phi.target
    inv = phi.inverse()
    e_new = pushforward_tensor(e, phi)
    dlog, _ = _log_derivatives(phi)
    n = tgt.dim
    u_new = inv.substitute(u)
    for ai, na in enumerate(tgt.names):
        inner = SuperFunction.zero(tgt)
        for bi in range(n):
            comp = e_new.components[ai][bi]
            if comp.is_zero or dlog[bi].is_zero:
                continue
            inner = inner + comp * dlog[bi]
        u_new = u_new + inner.partial(na) * Fraction(1, 2)
    for ai in range(n):
        if dlog[ai].is_zero:
            continue
        for bi in range(n):
            comp = e_new.components[ai][bi]
            if comp.is_zero or dlog[bi].is_zero:
                continue
            u_new = u_new - dlog[ai] * comp * dlog[bi] * Fraction(1, 4)
    return u_new


def conjugate_operator(d, phi):
    """Transport an operator on half-density coefficients.

    Every d_B is replaced through the chain rule by
    sum_{A'} (d_B phi^{A'}) (d_{A'} + (d_{A'} J / J)/2) and coefficients
    are rewritten in the new coordinates; the first-order correction is
    the half-density twist.
    """
    if d.chart != phi.source:
        raise ChartMismatchError("operator must live on the source chart")
    src, tgt = phi.source, phi.target
    inv = phi.inverse()
    dlog, _ = _log_derivatives(phi)
    half = Fraction(1, 2)
    nabla = []
    for ai, na in enumerate(tgt.names):
        op = DiffOperator.partial(tgt, na)
        if not dlog[ai].is_zero:
            op = op + DiffOperator.multiplication(dlog[ai] * half)
        nabla.append(op)
    chain = {}
    for bi, nb in enumerate(src.names):
        total = DiffOperator.zero(tgt)
        for ai, na in enumerate(tgt.names):
            coeff = inv.substitute(phi.maps[na].partial(nb))
            if coeff.is_zero:
                continue
            total = total + DiffOperator.multiplication(coeff).compose(nabla[ai])
        chain[bi] = total
    out = DiffOperator.zero(tgt)
    for mono, coeff in d.terms.items():
        term = DiffOperator.multiplication(inv.substitute(coeff))
        for i, e in enumerate(mono):
            for _ in range(e):
                term = term.compose(chain[i])
        out = out + term
    return out


def is_darboux(e):
    """Syntactic test for the constant unit-pairing component pattern."""
    chart = e.chart
    n = chart.n_even
    if chart.n_odd != n or e.variance != "upper" or e.parity != ODD:
        return False
    one = SuperFunction.one(chart)
    zero = SuperFunction.zero(chart)
    for i in range(chart.dim):
        for j in range(chart.dim):
            paired = (j == i + n) or (i == j + n)
            want = one if paired else zero
            if e.components[i][j] != want:
                return False
    return True


def transported_delta(e, u, phi):
    """Convenience: build_delta on the transported data."""
    return build_delta(pushforward_tensor(e, phi), transform_potential(u, e, phi))
