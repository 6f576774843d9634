"""Full cotranslations Z: G x G -> GL_d and their constructors.

A cotranslation satisfies ``Z(g, k h) = Z(h g, k) Z(g, h)``.  Evaluators are
lazy and memoized per ``(g, h)``; cached matrices are read-only.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .errors import DimensionError, SpecError, VerificationError
from .groups import FiniteGroup, Group, IntegerGroup, reduce_word, relations_law
from .linalg import as_mat, condition_number, fro, try_inverse
from .report import Law, VerificationReport, run_laws

DEFAULT_TOL = 1e-10
DEFAULT_MORPHISM_RADIUS = 3


def _frozen(m: np.ndarray) -> np.ndarray:
    m.setflags(write=False)
    return m


def scaled(diff: np.ndarray, *factors: float) -> float:
    """Frobenius norm of ``diff`` divided by ``max(1, prod(factors))``."""
    s = 1.0
    for f in factors:
        s *= f
    return fro(diff) / max(1.0, s)


class GroupoidMap:
    """Memoized evaluator ``(g, h) -> d x d`` matrix on the left translations groupoid."""

    def __init__(self, group: Group, dim: int, evaluator: Callable[[Any, Any], Any], kind: str, meta: dict | None = None):
        if dim < 1:
            raise DimensionError("dimension must be positive")
        self.group = group
        self.dim = dim
        self._evaluator = evaluator
        self.kind = kind
        self.meta = dict(meta or {})
        self._cache: dict = {}
        self._norms: dict = {}

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.kind}, {self.group}, d={self.dim})"

    def __call__(self, g, h) -> np.ndarray:
        key = (g, h)
        m = self._cache.get(key)
        if m is None:
            self.group.check(g)
            self.group.check(h)
            m = _frozen(as_mat(self._evaluator(g, h), self.dim))
            self._cache[key] = m
        return m

    def norm(self, g, h) -> float:
        """Frobenius norm of the value at ``(g, h)``, cached."""
        key = (g, h)
        n = self._norms.get(key)
        if n is None:
            n = fro(self(g, h))
            self._norms[key] = n
        return n

    def table(self, window: Sequence) -> dict:
        return {(g, h): self(g, h) for g in window for h in window}

    def units(self, g) -> np.ndarray:
        return self(g, self.group.identity())


class Cotranslation(GroupoidMap):
    """Invertible-valued groupoid morphism; ``inv(g, h)`` is cached."""

    def __init__(self, group, dim, evaluator, kind, meta=None, inverse_tol: float = 1e-12):
        super().__init__(group, dim, evaluator, kind, meta)
        self.inverse_tol = inverse_tol
        self._inv: dict = {}

    def inv(self, g, h) -> np.ndarray:
        key = (g, h)
        m = self._inv.get(key)
        if m is None:
            m = _frozen(try_inverse(self(g, h), self.inverse_tol))
            self._inv[key] = m
        return m


# ---------------------------------------------------------------------------
# laws


def triples(window: Sequence) -> list[tuple]:
    return list(itertools.product(window, repeat=3))


def pairs(window: Sequence) -> list[tuple]:
    return list(itertools.product(window, repeat=2))


def composition_law(W: GroupoidMap, window: Sequence, tol: float, name: str = "cocycle") -> Law:
    """``||W(g,kh) - W(hg,k) W(g,h)||_F / max(1, ||W(hg,k)||_F ||W(g,h)||_F)`` over all triples."""
    G = W.group

    def residual(loc) -> float:
        g, h, k = loc
        hg = G.compose(h, g)
        lhs = W(g, G.compose(k, h))
        return scaled(lhs - W(hg, k) @ W(g, h), W.norm(hg, k), W.norm(g, h))

    return Law(name, residual, triples(window), tol)


def unit_law(W: GroupoidMap, window: Sequence, tol: float) -> Law:
    e = W.group.identity()
    eye = np.eye(W.dim)
    return Law("unit", lambda g: fro(W(g, e) - eye), list(window), tol)


def involution_law(Z: GroupoidMap, window: Sequence, tol: float) -> Law:
    """``Z(hg, h^-1)`` inverts ``Z(g, h)``: residual of their product against Id.

    The product form avoids explicit inversion, so an ill-conditioned value does
    not inflate the residual by its condition number.
    """
    G = Z.group
    eye = np.eye(Z.dim)

    def residual(loc) -> float:
        g, h = loc
        hg = G.compose(h, g)
        back = Z(hg, G.inverse(h))
        return scaled(back @ Z(g, h) - eye, Z.norm(hg, G.inverse(h)), Z.norm(g, h))

    return Law("involution", residual, pairs(window), tol)


def invertibility_law(Z: GroupoidMap, window: Sequence, tol: float = 1e-12) -> Law:
    """Residual is the condition number; passes when ``cond < 1 / tol``."""
    return Law(
        "invertible",
        lambda loc: condition_number(Z(*loc)),
        pairs(window),
        tol,
        accept=lambda worst, t: worst < 1.0 / t,
    )


def cocycle_check(Z: GroupoidMap, window: Sequence, tol: float = DEFAULT_TOL) -> VerificationReport:
    return run_laws([composition_law(Z, window, tol)], {"window_size": len(window)})


def cot_inverse_law_check(Z: GroupoidMap, window: Sequence, tol: float = DEFAULT_TOL) -> VerificationReport:
    return run_laws([unit_law(Z, window, tol), involution_law(Z, window, tol)], {"window_size": len(window)})


def cotranslation_laws(Z: GroupoidMap, window: Sequence, tol: float = DEFAULT_TOL) -> list[Law]:
    return [
        composition_law(Z, window, tol),
        unit_law(Z, window, tol),
        involution_law(Z, window, tol),
        invertibility_law(Z, window),
    ]


def verify_cotranslation(Z: GroupoidMap, window: Sequence, tol: float = DEFAULT_TOL) -> VerificationReport:
    return run_laws(cotranslation_laws(Z, window, tol), {"window_size": len(window)})


# ---------------------------------------------------------------------------
# morphisms and autonomy


class Morphism:
    """Memoized map ``g -> gamma(g)`` into GL_d."""

    def __init__(self, group: Group, dim: int, fn: Callable[[Any], Any], name: str = "gamma"):
        self.group = group
        self.dim = dim
        self._fn = fn
        self.name = name
        self._cache: dict = {}

    def __call__(self, g) -> np.ndarray:
        m = self._cache.get(g)
        if m is None:
            self.group.check(g)
            m = _frozen(as_mat(self._fn(g), self.dim))
            self._cache[g] = m
        return m


def _infer_dim(fn, group: Group) -> int:
    return as_mat(fn(group.identity())).shape[0]


def morphism_laws(gamma: Morphism, window: Sequence, tol: float) -> list[Law]:
    G = gamma.group
    eye = np.eye(gamma.dim)

    def residual(loc) -> float:
        g, h = loc
        a, b = gamma(g), gamma(h)
        return scaled(gamma(G.compose(g, h)) - a @ b, fro(a), fro(b))

    return [
        Law("morphism_unit", lambda _: fro(gamma(G.identity()) - eye), [G.identity()], tol),
        Law("morphism", residual, pairs(window), tol),
    ]


def from_morphism(
    group: Group,
    gamma: Callable[[Any], Any],
    window: Sequence | None = None,
    tol: float = DEFAULT_TOL,
    dim: int | None = None,
) -> Cotranslation:
    """``Z(g, h) = gamma(h)`` after checking that ``gamma`` is a morphism on ``window``."""
    dim = dim or _infer_dim(gamma, group)
    gm = gamma if isinstance(gamma, Morphism) else Morphism(group, dim, gamma)
    window = list(window) if window is not None else group.sample_window(DEFAULT_MORPHISM_RADIUS)
    report = run_laws(morphism_laws(gm, window, tol))
    if not report.passed:
        worst = report.failing()[0]
        raise VerificationError(f"gamma is not a group morphism: worst pair {worst.argmax}, residual {worst.max_residual:.3e}", report)
    return Cotranslation(group, dim, lambda g, h: gm(h), "FromMorphism", {"gamma": gm})


def autonomy_law(Z: GroupoidMap, window: Sequence, tol: float) -> Law:
    """``||Z(g,h) - Z(e,h)|| / max(1, ||Z(e,h)||)``; the pairwise spread is at most twice this."""
    e = Z.group.identity()
    return Law(
        "autonomy",
        lambda loc: scaled(Z(*loc) - Z(e, loc[1]), Z.norm(e, loc[1])),
        pairs(window),
        tol,
    )


def is_autonomous(Z: GroupoidMap, window: Sequence, tol: float = DEFAULT_TOL) -> bool:
    return autonomy_law(Z, window, tol).sweep().passed


def extract_morphism(Z: GroupoidMap) -> Morphism:
    """``g -> Z(e, g)``; a morphism exactly when ``Z`` is autonomous."""
    e = Z.group.identity()
    return Morphism(Z.group, Z.dim, lambda g: Z(e, g), name="Z(e,.)")


def shift_by_morphism(Z: Cotranslation, gamma, window: Sequence | None = None, tol: float = DEFAULT_TOL) -> Cotranslation:
    """``W(g, h) = Z(g, h) gamma(h)``; requires gamma(k) to commute with every Z(g, h)."""
    G = Z.group
    gm = gamma if isinstance(gamma, Morphism) else Morphism(G, Z.dim, gamma)
    if gm.dim != Z.dim:
        raise DimensionError(f"gamma has dimension {gm.dim}, cotranslation {Z.dim}")
    window = list(window) if window is not None else G.sample_window(DEFAULT_MORPHISM_RADIUS)

    def commutation(loc) -> float:
        g, h, k = loc
        c, z = gm(k), Z(g, h)
        return scaled(c @ z - z @ c, fro(c), Z.norm(g, h))

    pre = run_laws(morphism_laws(gm, window, tol) + [Law("commutation", commutation, triples(window), tol)])
    if not pre.passed:
        worst = pre.failing()[0]
        raise VerificationError(f"shift precondition {worst.law} fails at {worst.argmax} (residual {worst.max_residual:.3e})", pre)
    W = Cotranslation(G, Z.dim, lambda g, h: Z(g, h) @ gm(h), "ShiftedByMorphism", {"base": Z, "gamma": gm})
    post = cocycle_check(W, window, tol)
    if not post.passed:
        raise VerificationError(f"shifted map violates the cocycle law at {post.entries[0].argmax}", post)
    return W


# ---------------------------------------------------------------------------
# difference equations x(n+1) = A(n) x(n)


def zigzag(n: int) -> int:
    """Bijection Z -> N used to derive per-index seeds."""
    return 2 * n if n >= 0 else -2 * n - 1


class DifferenceSeq:
    """Coefficient sequence ``n -> A(n)`` with memoized values and inverses."""

    def __init__(self, fn: Callable[[int], Any], dim: int, kind: str = "function", meta: dict | None = None, inverse_tol: float = 1e-12):
        self._fn = fn
        self.dim = dim
        self.kind = kind
        self.meta = dict(meta or {})
        self.inverse_tol = inverse_tol
        self._cache: dict[int, np.ndarray] = {}
        self._inv: dict[int, np.ndarray] = {}

    def __call__(self, n: int) -> np.ndarray:
        m = self._cache.get(n)
        if m is None:
            m = _frozen(as_mat(self._fn(int(n)), self.dim))
            self._cache[n] = m
        return m

    def inv(self, n: int) -> np.ndarray:
        m = self._inv.get(n)
        if m is None:
            m = _frozen(try_inverse(self(n), self.inverse_tol))
            self._inv[n] = m
        return m

    @classmethod
    def periodic(cls, mats: Sequence) -> "DifferenceSeq":
        table = [as_mat(m) for m in mats]
        if not table:
            raise SpecError("periodic table must contain at least one matrix")
        d = table[0].shape[0]
        for m in table:
            as_mat(m, d)
        p = len(table)
        return cls(lambda n: table[n % p], d, "periodic", {"period": [m.tolist() for m in table]})

    @classmethod
    def constant(cls, a) -> "DifferenceSeq":
        a = as_mat(a)
        return cls(lambda n: a, a.shape[0], "constant", {"matrix": a.tolist()})

    @classmethod
    def random(cls, dim: int, seed: int, cond_max: float = 1e3, low: float = -1.0, high: float = 1.0) -> "DifferenceSeq":
        """Entries uniform in ``[low, high]``, redrawn until ``cond(A(n)) <= cond_max``.

        Each index has its own generator seeded by ``(seed, zigzag(n))``, so values
        do not depend on evaluation order.
        """

        def draw(n: int) -> np.ndarray:
            rng = np.random.default_rng([seed, zigzag(n)])
            while True:
                a = rng.uniform(low, high, size=(dim, dim))
                if condition_number(a) <= cond_max:
                    return a

        return cls(draw, dim, "random", {"seed": seed, "cond_max": cond_max})


def _suffix_chain(Z: GroupoidMap, g, h, step: Callable):
    """Evaluate ``Z(g, h)`` along the normal-form word of ``h``.

    ``step(g, rest, letter)`` returns ``(point, factor)`` so that
    ``Z(g, letter * rest) = factor @ Z(g, rest)``.  Suffixes of a normal form
    are normal forms, so every intermediate value lands in the memo cache.
    """
    G = Z.group
    chain = []
    cur = h
    word = G.word_of(h)
    i = 0
    while (g, cur) not in Z._cache and i < len(word):
        a = word[i]
        rest = G._compose(G.letter(-a), cur)
        chain.append((a, cur, rest))
        cur = rest
        i += 1
    acc = Z._cache.get((g, cur))
    if acc is None:
        # reached the identity without a cached value
        acc = _frozen(np.eye(Z.dim))
        Z._cache[(g, cur)] = acc
    for a, elem, rest in reversed(chain):
        acc = _frozen(step(g, rest, a) @ acc)
        Z._cache[(g, elem)] = acc
    return acc


def from_difference_seq(A: DifferenceSeq) -> Cotranslation:
    """``Z(n, m) = A(n+m-1)...A(n)`` for m > 0, Id for m = 0, ``A(n+m)^-1...A(n-1)^-1`` for m < 0."""
    G = IntegerGroup()
    Z: Cotranslation

    def step(n, rest, a):
        # letter +1 at point rest+n contributes A(n+rest); letter -1 contributes A(n+rest-1)^-1
        return A(n + rest) if a > 0 else A.inv(n + rest - 1)

    Z = Cotranslation(G, A.dim, lambda n, m: _suffix_chain(Z, n, m, step), "FromDifferenceSeq", {"A": A})
    return Z


def difference_seq_of(Z: GroupoidMap) -> DifferenceSeq:
    """Recover ``A(n) = Z(n, 1)``."""
    if not isinstance(Z.group, IntegerGroup):
        raise SpecError("difference sequences need a cotranslation over Z")
    return DifferenceSeq(lambda n: Z(n, 1), Z.dim, "extracted")


# ---------------------------------------------------------------------------
# generator maps on finitely generated groups


class GeneratorMaps:
    """``A_i(eta) = Z(eta, xi_i)`` for each generator, with cached inverses."""

    def __init__(self, group: Group, maps: Sequence[Callable[[Any], Any]], dim: int | None = None, inverse_tol: float = 1e-12):
        if len(maps) != group.ngens:
            raise SpecError(f"{group} has {group.ngens} generators but {len(maps)} maps were given")
        self.group = group
        self.inverse_tol = inverse_tol
        self.dim = dim or as_mat(maps[0](group.identity())).shape[0]
        self._maps = list(maps)
        self._cache: dict = {}
        self._inv: dict = {}
        self.fns = [self._bind(i) for i in range(len(maps))]

    def _bind(self, i: int):
        return lambda eta: self.value(i + 1, eta)

    def value(self, i: int, eta) -> np.ndarray:
        key = (i, eta)
        m = self._cache.get(key)
        if m is None:
            m = _frozen(as_mat(self._maps[i - 1](eta), self.dim))
            self._cache[key] = m
        return m

    def inverse(self, i: int, eta) -> np.ndarray:
        key = (i, eta)
        m = self._inv.get(key)
        if m is None:
            m = _frozen(try_inverse(self.value(i, eta), self.inverse_tol))
            self._inv[key] = m
        return m

    def letter(self, a: int, point) -> np.ndarray:
        """Matrix carrying x(point) to x(letter * point)."""
        if a > 0:
            return self.value(a, point)
        back = self.group._compose(self.group.letter(a), point)
        return self.inverse(-a, back)


def cayley_relations(group: FiniteGroup) -> tuple[tuple[int, ...], ...]:
    """Relations ``w(a g)^-1 a w(g)`` for every letter and element: a complete presentation."""
    out = []
    for g in range(group.order):
        for i in range(1, group.ngens + 1):
            for a in (i, -i):
                ag = group._compose(group.letter(a), g)
                lhs = tuple(-x for x in reversed(group.word_of(ag)))
                word = lhs + (a,) + group.word_of(g)
                # drop trivial relations, which reduce to the empty word
                if reduce_word(word) == ():
                    continue
                out.append(word)
    return tuple(out)


def from_generator_maps(
    group: Group,
    maps,
    window: Sequence | None = None,
    tol: float = DEFAULT_TOL,
    check_relations: bool = True,
) -> Cotranslation:
    """Cotranslation with ``Z(eta, xi_i) = A_i(eta)``, extended along normal-form words."""
    gm = maps if isinstance(maps, GeneratorMaps) else GeneratorMaps(group, maps)
    G = group
    window = list(window) if window is not None else G.sample_window(DEFAULT_MORPHISM_RADIUS)
    if check_relations:
        relations = G.relations
        if isinstance(G, FiniteGroup) and not relations:
            relations = cayley_relations(G)
        if relations:
            report = run_laws([relations_law(G, gm.fns, window, tol, relations)])
            if not report.passed:
                e = report.entries[0]
                raise VerificationError(
                    f"generator maps do not preserve relations: worst (relation, base) {e.argmax}, residual {e.max_residual:.3e}",
                    report,
                )
    Z: Cotranslation

    def step(eta, rest, a):
        return gm.letter(a, G._compose(rest, eta))

    Z = Cotranslation(G, gm.dim, lambda eta, h: _suffix_chain(Z, eta, h, step), "FromGeneratorMaps", {"maps": gm})
    return Z


def explicit(group: Group, dim: int, fn: Callable[[Any, Any], Any]) -> Cotranslation:
    return Cotranslation(group, dim, fn, "Explicit")


# ---------------------------------------------------------------------------
# skew products


@dataclass
class Hull:
    """Family ``g -> psi_g`` with ``psi_g(h, .)`` a matrix; ``sigma(h, psi_g) = psi_{hg}``."""

    group: Group
    dim: int
    psi: Callable[[Any, Any], Any]
    meta: dict = field(default_factory=dict)

    def slice(self, g, h) -> np.ndarray:
        return as_mat(self.psi(g, h), self.dim)

    def sigma(self, h, g):
        """Index of ``sigma(h, psi_g)``."""
        return self.group.compose(h, g)

    def replaced(self, g0, fn: Callable[[Any], Any]) -> "Hull":
        """Copy with ``psi_{g0}`` replaced by ``fn``."""
        base = self.psi
        return Hull(self.group, self.dim, lambda g, h: fn(h) if g == g0 else base(g, h), dict(self.meta))


def to_hull(Z: GroupoidMap) -> Hull:
    return Hull(Z.group, Z.dim, lambda g, h: Z(g, h), {"source": Z.kind})


def hull_laws(H: Hull, window: Sequence, tol: float) -> list[Law]:
    G = H.group
    e = G.identity()
    eye = np.eye(H.dim)

    def axiom(loc) -> float:
        g, h, k = loc
        a = H.slice(H.sigma(h, g), k)
        b = H.slice(g, h)
        return scaled(a @ b - H.slice(g, G.compose(k, h)), fro(a), fro(b))

    return [
        Law("hull_admissible", lambda g: fro(H.slice(g, e) - eye), list(window), tol),
        Law("hull_composition", axiom, triples(window), tol),
    ]


def hull_axiom_check(H: Hull, window: Sequence, tol: float = DEFAULT_TOL) -> VerificationReport:
    return run_laws(hull_laws(H, window, tol))


def from_hull(H: Hull, window: Sequence | None = None, tol: float = DEFAULT_TOL) -> Cotranslation:
    """``Z(g, h) = psi_g(h, .)`` after verifying admissibility and the composition axiom."""
    window = list(window) if window is not None else H.group.sample_window(DEFAULT_MORPHISM_RADIUS)
    report = hull_axiom_check(H, window, tol)
    if not report.passed:
        worst = report.failing()[0]
        raise VerificationError(f"hull fails {worst.law} at {worst.argmax}", report)
    return Cotranslation(H.group, H.dim, lambda g, h: H.slice(g, h), "FromHull", {"hull": H})


def hull_roundtrip_law(Z: GroupoidMap, window: Sequence, tol: float = 0.0) -> Law:
    back = from_hull(to_hull(Z), window)
    return Law("hull_roundtrip", lambda loc: float(np.max(np.abs(back(*loc) - Z(*loc)))), pairs(window), tol)


def solution_hull(A: DifferenceSeq) -> Hull:
    """Hull of the solution family: ``psi_m(n, xi) = x(n + m, m, xi)``.

    Columns are propagated one vector step at a time, independently of the
    product formula, so this doubles as an oracle for it.
    """

    def psi(m: int, n: int) -> np.ndarray:
        x = np.eye(A.dim)
        if n >= 0:
            for t in range(m, m + n):
                x = A(t) @ x
        else:
            for t in range(m - 1, m + n - 1, -1):
                x = np.linalg.solve(A(t), x)
        return x

    return Hull(IntegerGroup(), A.dim, psi, {"source": "solution_family"})
