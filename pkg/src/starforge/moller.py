"""Classical and quantum Moller operators and their graph expansions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence


from . import graphs as gr
from .functionals import FieldPoint, PolyFunctional
from .model import (
    FreeTheory,
    Interaction,
    PreconditionError,
    interacting_advanced_symbolic,
    propagator,
)
from .numerics import I, ONE, Bounds, ConfigurationError, DomainError, GaussianRational, rational
from .operators import Dictionary, TableArg, exp_product, graph_sum, kernel

GR = GaussianRational


@dataclass(frozen=True, eq=False)
class MollerConfig:
    """A free theory, an interaction, the lambda mode and the truncation window.

    In numeric mode the coupling is a number and the window has lambda_max = 0.
    """

    theory: FreeTheory
    interaction: Interaction
    mode: object = "formal_lambda"
    bounds: Bounds = Bounds(3, 4)

    def __post_init__(self):
        if self.bounds.laurent:
            raise ConfigurationError("Moller configurations live in power-series mode")
        if self.interaction.V.n_points != self.theory.n_points:
            raise ConfigurationError("interaction and model have different point counts")
        if self.numeric:
            if not self.nilpotent:
                raise PreconditionError("numeric lambda needs the nilpotent regime (strict model, diagonal Hessian)")
            object.__setattr__(self, "bounds", Bounds(self.bounds.hbar_max, 0))

    @property
    def lam(self) -> GR | None:
        m = self.mode
        if m is None or m == "formal_lambda":
            return None
        if isinstance(m, tuple) and m[0] == "numeric_lambda":
            return GR.coerce(m[1] if not isinstance(m[1], str) else rational(m[1]))
        if isinstance(m, str):
            raise ConfigurationError(f"unknown lambda mode {m!r}")
        return GR.coerce(m)

    @property
    def numeric(self) -> bool:
        return self.lam is not None

    @property
    def nilpotent(self) -> bool:
        return self.theory.strict and self.interaction.diagonal_hessian

    @property
    def n_points(self) -> int:
        return self.theory.n_points

    @property
    def V(self) -> PolyFunctional:
        return self.interaction.with_bounds(self.bounds)

    def coupled(self, P: PolyFunctional, power: int = 1) -> PolyFunctional:
        """lambda^power * P in the current mode."""
        if self.numeric:
            return P * self.lam**power
        return P.shift(ONE, 0, power)

    def weight(self, sign: GR, v: int) -> tuple:
        """(scalar, lambda power) for (sign*lambda)^v."""
        if self.numeric:
            return (sign * self.lam) ** v, 0
        return sign**v, v

    def with_interaction(self, V: Interaction) -> "MollerConfig":
        return MollerConfig(self.theory, V, self.mode, self.bounds)

    def with_bounds(self, bounds: Bounds) -> "MollerConfig":
        return MollerConfig(self.theory, self.interaction, self.mode, bounds)

    def check(self, F: PolyFunctional):
        if F.n_points != self.n_points:
            raise ConfigurationError("functional and model have different point counts")
        if F.bounds != self.bounds:
            raise ConfigurationError(f"functional bounds {F.bounds} differ from configuration bounds {self.bounds}")

    def lam_max_vertices(self) -> int | None:
        return None if self.numeric else self.bounds.lambda_max

    def path_cap(self) -> int | None:
        return self.n_points - 1 if self.nilpotent else None


def _deg(F: PolyFunctional) -> int:
    return max(F.degree(), 0)


# -- classical Moller maps ---------------------------------------------------


def _variables(c: MollerConfig) -> list:
    return [PolyFunctional.variable(i, c.n_points, c.bounds) for i in range(c.n_points)]


def _gradient(c: MollerConfig) -> list:
    V = c.V
    return [V.diff(i) for i in range(c.n_points)]


def _retarded_apply(c: MollerConfig, vec: Sequence[PolyFunctional]) -> list:
    R = propagator(c.theory, "R")
    N = c.n_points
    out = []
    for x in range(N):
        acc = PolyFunctional.zero(N, c.bounds)
        for y in range(N):
            if not R[x, y].is_zero() and not vec[y].is_zero():
                acc = acc + vec[y] * R[x, y]
        out.append(acc)
    return out


def classical_moller_inverse(c: MollerConfig, phi=None):
    """r^-1(phi) = phi + lambda Delta^R V'(phi); symbolic when ``phi`` is None."""
    corr = _retarded_apply(c, _gradient(c))
    sym = [x + c.coupled(d) for x, d in zip(_variables(c), corr)]
    return sym if phi is None else [p.eval(FieldPoint(phi)) for p in sym]


def classical_moller(c: MollerConfig, phi=None):
    """Yang-Feldman fixed point r(phi) = phi - lambda Delta^R V'(r(phi))."""
    xs = _variables(c)
    grad = _gradient(c)
    m = list(xs)
    cap = c.bounds.lambda_max + 1 if not c.numeric else c.n_points + 1
    for it in range(cap + 1):
        pulled = [g.compose(m) for g in grad]
        nxt = [x - c.coupled(d) for x, d in zip(xs, _retarded_apply(c, pulled))]
        if nxt == m:
            break
        m = nxt
    else:
        if c.numeric:
            raise PreconditionError("Yang-Feldman iteration did not terminate")
    return m if phi is None else [p.eval(FieldPoint(phi)) for p in m]


def pullback(F: PolyFunctional, fieldmap: Sequence[PolyFunctional]) -> PolyFunctional:
    return F.compose(fieldmap)


def classical_inverse_pullback(c: MollerConfig, F: PolyFunctional) -> PolyFunctional:
    return F.compose(classical_moller_inverse(c))


def classical_pullback(c: MollerConfig, F: PolyFunctional) -> PolyFunctional:
    return F.compose(classical_moller(c))


# -- graph sums --------------------------------------------------------------


def free_dictionary(c: MollerConfig, vertex: PolyFunctional | None = None) -> Dictionary:
    A = propagator(c.theory, "A")
    return Dictionary(c.n_points, directed=A, undirected=propagator(c.theory, "feynman"),
                      vertex=c.V if vertex is None else vertex)


def interacting_dictionary(c: MollerConfig) -> Dictionary:
    """Edges are Delta^A_S, undirected edges Delta^F, vertices lambda V."""
    AS = interacting_advanced_symbolic(c.theory, c.interaction, c.bounds, c.lam)
    return Dictionary(c.n_points, directed=AS, undirected=propagator(c.theory, "feynman"), vertex=c.coupled(c.V))


def _minus_i_power(k: int) -> GR:
    return (-I) ** k


def corolla_terms(c: MollerConfig, F: PolyFunctional) -> list:
    out = []
    vmax = _deg(F) if c.numeric else min(_deg(F), c.bounds.lambda_max)
    for g in gr.enumerate_family("corollas", 1, max_unlabelled=vmax):
        s, l = c.weight(ONE, g.v)
        out.append((g, s / g.aut_order(), 0, l))
    return out


def corolla_sum(c: MollerConfig, F: PolyFunctional) -> PolyFunctional:
    """r^-1 as the corolla sum with weights lambda^v/|Aut|."""
    c.check(F)
    return graph_sum(corolla_terms(c, F), free_dictionary(c), [F], c.bounds)


def _tree_limits(c: MollerConfig, F: PolyFunctional) -> dict:
    lim = dict(label_valency=(_deg(F),), vertex_valency=max(c.interaction.degree, 1))
    if c.numeric:
        lim["max_path"] = c.path_cap()
        lim["max_unlabelled"] = _vertex_cap(c, _deg(F))
    else:
        lim["max_unlabelled"] = c.bounds.lambda_max
    return lim


def _vertex_cap(c: MollerConfig, top: int) -> int:
    """Unlabelled-vertex bound for rooted graphs of depth <= N-1 in the nilpotent regime."""
    branch = max(c.interaction.degree - 1, 1)
    return top * sum(branch**k for k in range(max(c.n_points - 1, 1)))


def tree_sum(c: MollerConfig, F: PolyFunctional) -> PolyFunctional:
    """r as the tree sum with weights (-lambda)^v/|Aut|."""
    c.check(F)
    terms = []
    for g in gr.enumerate_family("trees", 1, **_tree_limits(c, F)):
        s, l = c.weight(-ONE, g.v)
        terms.append((g, s / g.aut_order(), 0, l))
    return graph_sum(terms, free_dictionary(c), [F], c.bounds)


def g9_sum(c: MollerConfig, F: PolyFunctional) -> PolyFunctional:
    """r resummed: trees without single-child vertices, interacting edges, (-1)^v weights."""
    c.check(F)
    lim = _tree_limits(c, F)
    terms = [(g, (-ONE) ** g.v / g.aut_order(), 0, 0) for g in gr.enumerate_family("G9", 1, **lim)]
    return graph_sum(terms, interacting_dictionary(c), [F], c.bounds)


def g2_terms(c: MollerConfig, F: PolyFunctional, *, no_leaves: bool = False) -> list:
    """(-i hbar)^(e-v) lambda^v/|Aut| over G2(1)."""
    d = _deg(F)
    vmax = d if c.numeric else min(d, c.bounds.lambda_max)
    graphs = gr.enumerate_family(
        "G2", 1, max_edges=d, max_unlabelled=vmax, max_excess=c.bounds.hbar_max,
        vertex_valency=max(c.interaction.degree, 1),
    )
    out = []
    for g in graphs:
        if no_leaves and any(g.valency(x) == 1 for x in range(1, g.n_vertices)):
            continue
        s, l = c.weight(ONE, g.v)
        out.append((g, _minus_i_power(g.e - g.v) * s / g.aut_order(), g.e - g.v, l))
    return out


# -- quantum Moller operators ------------------------------------------------


def quantum_moller_inverse(c: MollerConfig, F: PolyFunctional, route: str = "graphs") -> PolyFunctional:
    """R_T^-1 by the G2(1) graph sum, or by Bogoliubov's formula in Laurent mode."""
    c.check(F)
    if route == "graphs":
        return graph_sum(g2_terms(c, F), free_dictionary(c), [F], c.bounds)
    if route == "bogoliubov":
        return smatrix_bogoliubov(c, F)
    raise ConfigurationError(f"unknown route {route!r}")


def _exp(A: PolyFunctional) -> PolyFunctional:
    out = PolyFunctional.constant(ONE, A.n_points, A.bounds)
    term = out
    k = 0
    while True:
        k += 1
        term = (term * A) * GR(rational(1) / k)
        if term.is_zero():
            return out
        out = out + term


def laurent_bounds(c: MollerConfig) -> Bounds:
    b = c.bounds
    return Bounds(b.hbar_max + b.lambda_max, b.lambda_max, -b.lambda_max)


def smatrix_bogoliubov(c: MollerConfig, F: PolyFunctional, *, keep_laurent: bool = False):
    """R_T^-1(F) = e^{-i lambda V/hbar} (e^{i lambda V/hbar} *_T F), in Laurent mode.

    The negative-hbar part must cancel; a residue raises DomainError naming it.
    """
    c.check(F)
    if c.numeric:
        raise ConfigurationError("the Laurent route needs a formal coupling")
    lb = laurent_bounds(c)
    V = c.interaction.V.retruncate(lb)
    Fl = F.retruncate(lb)
    A = V.shift(I, -1, 1)
    E, Einv = _exp(A), _exp(-A)
    K = kernel(c.theory, "starT")
    out = Einv * exp_product(K, E, Fl)
    neg = out.negative_hbar_part()
    if keep_laurent:
        return out
    if not neg.is_zero():
        raise DomainError(f"negative powers of hbar survive: {neg!r}")
    return out.retruncate(c.bounds)


def _series_inverse(c: MollerConfig, F: PolyFunctional, forward) -> PolyFunctional:
    """Inverse of id + E with E = forward - id of positive lambda order: sum (-E)^k."""
    out = F
    term = F
    for _ in range(c.bounds.lambda_max):
        term = -(forward(term) - term)
        if term.is_zero():
            break
        out = out + term
    return out


def g10_terms(c: MollerConfig, F: PolyFunctional) -> list:
    d = _deg(F)
    lim = dict(label_valency=(d,), max_excess=c.bounds.hbar_max, vertex_valency=max(c.interaction.degree, 1))
    if c.numeric:
        lim["max_path"] = c.path_cap()
        lim["max_unlabelled"] = _vertex_cap(c, d)
    else:
        lim["max_unlabelled"] = c.bounds.lambda_max
    out = []
    for g in gr.enumerate_family("G10", 1, **lim):
        s, l = c.weight(-ONE, g.v)
        out.append((g, _minus_i_power(g.e - g.v) * s / g.aut_order(), g.e - g.v, l))
    return out


def quantum_moller(c: MollerConfig, F: PolyFunctional, route: str = "graphs") -> PolyFunctional:
    """R_T by the G10(1) graph sum, or by inverting the G2(1) series."""
    c.check(F)
    if route == "graphs":
        return graph_sum(g10_terms(c, F), free_dictionary(c), [F], c.bounds)
    if route == "inversion":
        if c.numeric:
            raise ConfigurationError("series inversion needs a formal coupling")
        return _series_inverse(c, F, lambda G: quantum_moller_inverse(c, G))
    raise ConfigurationError(f"unknown route {route!r}")


def upsilon(c: MollerConfig, F: PolyFunctional, route: str = "compose") -> PolyFunctional:
    """Upsilon = R_T^-1 o r, the purely quantum factor of R_T^-1.

    ``compose`` applies R_T^-1 to F o r; ``graphs`` sums leafless G2(1) graphs
    whose argument tensors are the derivatives of F o r pulled back by r^-1.
    """
    c.check(F)
    r = classical_moller(c)
    Fr = F.compose(r)
    if route == "compose":
        return quantum_moller_inverse(c, Fr)
    if route != "graphs":
        raise ConfigurationError(f"unknown route {route!r}")
    rinv = classical_moller_inverse(c)

    def provider(k, bounds):
        G = Fr.retruncate(bounds)
        back = [p.retruncate(bounds) for p in rinv]
        if k == 0:
            P = G.compose(back)
            return {(): P.raw} if P.raw else {}
        out = {}
        for idx, P in G.derivative_tensor(k).items():
            Q = P.compose(back)
            if Q.raw:
                out[idx] = Q.raw
        return out

    terms = g2_terms(c, Fr, no_leaves=True)
    return graph_sum(terms, free_dictionary(c), [TableArg(c.n_points, provider)], c.bounds)


# -- the H identification ----------------------------------------------------


def local_interaction(c: MollerConfig) -> bool:
    """D_F V = 0: diagonal V and a Hadamard part with zero diagonal."""
    H = c.theory.H
    return c.interaction.diagonal_hessian and all(H[x, x].is_zero() for x in range(c.n_points))


def _require_local(c: MollerConfig):
    if not local_interaction(c):
        raise PreconditionError("loop-free H-graph sums need a local interaction (diagonal V, H zero on the diagonal)")


def g11_terms(c: MollerConfig, F: PolyFunctional) -> list:
    d = _deg(F)
    lim = dict(label_valency=(d,), max_excess=c.bounds.hbar_max, vertex_valency=max(c.interaction.degree, 1))
    if c.numeric:
        lim["max_path"] = c.path_cap()
        lim["max_unlabelled"] = _vertex_cap(c, d)
    else:
        lim["max_unlabelled"] = c.bounds.lambda_max
    out = []
    for g in gr.enumerate_family("G11", 1, **lim):
        s, l = c.weight(-ONE, g.v)
        coeff = _minus_i_power(g.d - g.v) * s / g.aut_order()
        out.append((g, coeff, g.e - g.v, l))
    return out


def g13_terms(c: MollerConfig, F: PolyFunctional, hbar_order: int | None = None) -> list:
    m = c.bounds.hbar_max if hbar_order is None else hbar_order
    d = _deg(F)
    graphs = gr.enumerate_family(
        "G13", 1, label_valency=(d,), max_excess=m, max_edges=5 * m, max_unlabelled=4 * m,
        vertex_valency=max(c.interaction.degree, 1),
    )
    return [(g, _minus_i_power(g.v + g.d) / g.aut_order(), g.e - g.v, 0) for g in graphs]


def omega(c: MollerConfig, F: PolyFunctional) -> PolyFunctional:
    c.check(F)
    _require_local(c)
    return graph_sum(g13_terms(c, F), interacting_dictionary(c), [F], c.bounds)


def moller_h(c: MollerConfig, F: PolyFunctional) -> PolyFunctional:
    """R_H by the G11(1) graph sum."""
    c.check(F)
    _require_local(c)
    return graph_sum(g11_terms(c, F), free_dictionary(c), [F], c.bounds)


def omega_and_RH(c: MollerConfig, F: PolyFunctional) -> tuple:
    """(Omega F, R_H F); R_H is checked against r o Omega."""
    W = omega(c, F)
    RH = moller_h(c, F)
    if RH != W.compose(classical_moller(c)):
        raise DomainError("R_H differs from r o Omega")
    return W, RH


__all__ = [
    "MollerConfig",
    "classical_moller_inverse",
    "classical_moller",
    "classical_inverse_pullback",
    "classical_pullback",
    "pullback",
    "corolla_sum",
    "tree_sum",
    "g9_sum",
    "quantum_moller_inverse",
    "quantum_moller",
    "smatrix_bogoliubov",
    "upsilon",
    "omega",
    "moller_h",
    "omega_and_RH",
    "local_interaction",
    "free_dictionary",
    "interacting_dictionary",
    "laurent_bounds",
]
