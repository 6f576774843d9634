"""Partial cotranslations: the composition law with possibly singular values.

Covers units projectors, rank and kernel constancy, invariant projectors,
restriction, orthogonal sums, conjugation, normalization of the units
projector to a constant orthogonal block, and completion to a full
cotranslation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .cotranslation import (
    Cotranslation,
    GroupoidMap,
    _frozen,
    composition_law,
    invertibility_law,
    pairs,
    scaled,
    triples,
)
from .errors import DimensionError, VerificationError
from .groups import Group, IntegerGroup
from .linalg import (
    DEFAULT_RANK_TOL,
    as_mat,
    fro,
    image_basis,
    is_idempotent,
    kernel_basis,
    kernel_mismatch,
    op_norm,
    rank_info,
    try_inverse,
)
from .report import Law, VerificationReport, run_laws

DEFAULT_TOL = 1e-9
BLOCK_TOL = 1e-8
BOUND_SLACK = 1e-9


class PartialCotranslation(GroupoidMap):
    """Groupoid morphism into M_d; kinds: Explicit, Restricted, Sum, Conjugated, ConstantBlock."""

    def __init__(self, group, dim, evaluator, kind="Explicit", meta=None):
        super().__init__(group, dim, evaluator, kind, meta)
        self._rank: dict = {}
        self._kernel: dict = {}

    def rank_info(self, g, h, tol_rel: float = DEFAULT_RANK_TOL):
        key = (g, h, tol_rel)
        r = self._rank.get(key)
        if r is None:
            r = rank_info(self(g, h), tol_rel)
            self._rank[key] = r
        return r


def as_partial(Z: GroupoidMap) -> PartialCotranslation:
    """View any groupoid map (a full cotranslation in particular) as a partial one."""
    if isinstance(Z, PartialCotranslation):
        return Z
    return PartialCotranslation(Z.group, Z.dim, Z, Z.kind, {"source": Z})


class ProjectorMap:
    """``g -> P(g)``, idempotent-valued."""

    def __init__(self, group: Group, dim: int, fn: Callable[[Any], Any], kind: str = "explicit", meta: dict | None = None):
        self.group = group
        self.dim = dim
        self._fn = fn
        self.kind = kind
        self.meta = dict(meta or {})
        self._cache: dict = {}

    def __call__(self, g) -> np.ndarray:
        m = self._cache.get(g)
        if m is None:
            self.group.check(g)
            m = _frozen(as_mat(self._fn(g), self.dim))
            self._cache[g] = m
        return m

    @classmethod
    def constant(cls, group: Group, p) -> "ProjectorMap":
        p = as_mat(p)
        return cls(group, p.shape[0], lambda g: p, "constant", {"p": p.tolist()})

    def complement(self) -> "ProjectorMap":
        eye = np.eye(self.dim)
        return ProjectorMap(self.group, self.dim, lambda g: eye - self(g), "complement", {"of": self.kind})

    def rank_profile(self, window: Sequence, tol_rel: float = DEFAULT_RANK_TOL) -> dict:
        return {g: rank_info(self(g), tol_rel).rank for g in window}


class ConjugationMap:
    """``g -> T(g)`` invertible, with cached inverses and window sup norms."""

    def __init__(self, group: Group, dim: int, fn: Callable[[Any], Any], kind: str = "explicit", inverse_tol: float = 1e-12):
        self.group = group
        self.dim = dim
        self._fn = fn
        self.kind = kind
        self.inverse_tol = inverse_tol
        self._cache: dict = {}
        self._inv: dict = {}
        self.sup_norms: dict = {}

    def __call__(self, g) -> np.ndarray:
        m = self._cache.get(g)
        if m is None:
            self.group.check(g)
            m = _frozen(as_mat(self._fn(g), self.dim))
            self._cache[g] = m
        return m

    def inv(self, g) -> np.ndarray:
        m = self._inv.get(g)
        if m is None:
            m = _frozen(try_inverse(self(g), self.inverse_tol))
            self._inv[g] = m
        return m

    def inverted(self) -> "ConjugationMap":
        out = ConjugationMap(self.group, self.dim, self.inv, f"inverse({self.kind})", self.inverse_tol)
        out._inv = self._cache
        return out

    def measure(self, window: Sequence) -> tuple[float, float]:
        """Record and return ``(sup ||T(g)||, sup ||T(g)^-1||)`` over ``window``."""
        sup_t = max(op_norm(self(g)) for g in window)
        sup_inv = max(op_norm(self.inv(g)) for g in window)
        self.sup_norms = {"T": sup_t, "T_inv": sup_inv, "window_size": len(window)}
        return sup_t, sup_inv

    def inverse_law(self, window: Sequence, tol: float = DEFAULT_TOL) -> Law:
        eye = np.eye(self.dim)
        return Law("conjugation_inverse", lambda g: fro(self(g) @ self.inv(g) - eye), list(window), tol)


# ---------------------------------------------------------------------------
# laws


def law_check(W: GroupoidMap, window: Sequence, tol: float = DEFAULT_TOL) -> VerificationReport:
    return run_laws([composition_law(W, window, tol, name="law")], {"window_size": len(window)})


def units_projector(W: GroupoidMap) -> ProjectorMap:
    e = W.group.identity()
    return ProjectorMap(W.group, W.dim, lambda g: W(g, e), "units", {"source": W.kind})


def units_projector_laws(W: GroupoidMap, window: Sequence, tol: float = DEFAULT_TOL) -> list[Law]:
    P = units_projector(W)
    return [
        Law("units_idempotent", lambda g: is_idempotent(P(g))[1], list(window), tol),
        Law("units_invariant", _invariance_residual(W, P), pairs(window), tol),
    ]


def units_projector_check(W: GroupoidMap, window: Sequence, tol: float = DEFAULT_TOL) -> VerificationReport:
    return run_laws(units_projector_laws(W, window, tol))


def _invariance_residual(V: GroupoidMap, P) -> Callable:
    G = V.group

    def residual(loc) -> float:
        g, h = loc
        v = V(g, h)
        a, b = P(G.compose(h, g)), P(g)
        return scaled(a @ v - v @ b, V.norm(g, h), max(fro(a), fro(b)))

    return residual


def _as_partial_ranks(W: GroupoidMap) -> PartialCotranslation:
    return W if isinstance(W, PartialCotranslation) else as_partial(W)


def kernel_constancy_laws(W: GroupoidMap, window: Sequence, tol: float = DEFAULT_TOL, rank_tol: float = DEFAULT_RANK_TOL) -> list[Law]:
    """Shared-first-argument kernels agree, and the numeric rank is constant.

    The rank entry passes but is marked inconclusive when some singular value
    sits within one decade of the rank threshold.
    """
    Wp = _as_partial_ranks(W)
    window = list(window)
    kernels: dict = {}

    def kernel_pair(loc) -> float:
        h, g, k = loc
        key = (h, g, k) if repr(g) <= repr(k) else (h, k, g)
        r = kernels.get(key)
        if r is None:
            r = kernel_mismatch(Wp(h, g), Wp(h, k), rank_tol)
            kernels[key] = r
        return r

    locs = pairs(window)
    infos = [Wp.rank_info(g, h, rank_tol) for g, h in locs]
    ranks = [i.rank for i in infos]
    counts: dict[int, int] = {}
    for r in ranks:
        counts[r] = counts.get(r, 0) + 1
    ref = max(counts, key=lambda r: (counts[r], r)) if counts else 0
    min_gap = min((i.gap_decades for i in infos), default=math.inf)
    borderline = min_gap < 1.0
    rank_info_dict = {
        "rank": ref if len(counts) == 1 else None,
        "ranks_seen": sorted(counts),
        "min_gap_decades": min_gap if math.isfinite(min_gap) else "inf",
        "status": "inconclusive" if borderline else ("constant" if len(counts) == 1 else "non-constant"),
    }
    return [
        Law("kernel_constancy", kernel_pair, triples(window), tol),
        Law(
            "rank_constancy",
            lambda loc: float(abs(Wp.rank_info(*loc, rank_tol).rank - ref)),
            locs,
            0.0,
            accept=(lambda worst, t: True) if borderline else None,
            info=rank_info_dict,
        ),
    ]


def kernel_constancy_check(W: GroupoidMap, window: Sequence, tol: float = DEFAULT_TOL, rank_tol: float = DEFAULT_RANK_TOL) -> VerificationReport:
    return run_laws(kernel_constancy_laws(W, window, tol, rank_tol))


def rank_of(W: GroupoidMap, window: Sequence, rank_tol: float = DEFAULT_RANK_TOL) -> int | None:
    """Constant numeric rank over window pairs, or ``None`` if it varies."""
    Wp = _as_partial_ranks(W)
    ranks = {Wp.rank_info(g, h, rank_tol).rank for g, h in pairs(window)}
    return ranks.pop() if len(ranks) == 1 else None


def invariant_projector_laws(
    V: GroupoidMap, P: ProjectorMap, window: Sequence, tol: float = DEFAULT_TOL, Q: ProjectorMap | None = None
) -> list[Law]:
    if P.dim != V.dim or (Q is not None and Q.dim != V.dim):
        raise DimensionError("projector and partial cotranslation dimensions differ")
    window = list(window)
    profile = P.rank_profile(window)
    ranks = sorted(set(profile.values()))
    laws = [
        Law("projector_idempotent", lambda g: is_idempotent(P(g))[1], window, tol),
        Law(
            "projector_invariant",
            _invariance_residual(V, P),
            pairs(window),
            tol,
            info={"projector_ranks": ranks, "projector_rank_constant": len(ranks) == 1},
        ),
    ]
    if Q is not None:
        laws.append(
            Law(
                "projector_orthogonal",
                lambda g: max(fro(P(g) @ Q(g)), fro(Q(g) @ P(g))) / max(1.0, fro(P(g)) * fro(Q(g))),
                window,
                tol,
            )
        )
    return laws


def check_invariant_projector(
    V: GroupoidMap, P: ProjectorMap, window: Sequence, tol: float = DEFAULT_TOL, Q: ProjectorMap | None = None
) -> VerificationReport:
    return run_laws(invariant_projector_laws(V, P, window, tol, Q))


def conjugated_constant_projector(Z: GroupoidMap, p0) -> ProjectorMap:
    """``P(g) = Z(e, g) P0 Z(g, g^-1)``: invariant for Z whenever P0 is idempotent."""
    G = Z.group
    e = G.identity()
    p0 = as_mat(p0, Z.dim)
    return ProjectorMap(G, Z.dim, lambda g: Z(e, g) @ p0 @ Z(g, G.inverse(g)), "conjugated_constant", {"p0": p0.tolist()})


def projector_transport_law(Z: GroupoidMap, P: ProjectorMap, window: Sequence, tol: float = DEFAULT_TOL) -> Law:
    """For a full Z and invariant P: ``P(g) = Z(e, g) P(e) Z(g, g^-1)``, so rank P is constant."""
    G = Z.group
    e = G.identity()

    def residual(g) -> float:
        a, b = Z(e, g), Z(g, G.inverse(g))
        return scaled(P(g) - a @ P(e) @ b, fro(a) * fro(P(e)), fro(b))

    return Law("projector_transport", residual, list(window), tol)


# ---------------------------------------------------------------------------
# constructions


def restrict(V: GroupoidMap, P: ProjectorMap, window: Sequence | None = None, tol: float = DEFAULT_TOL) -> PartialCotranslation:
    """``W(g, h) = V(g, h) P(g)`` after checking that P is an invariant projector for V."""
    window = list(window) if window is not None else V.group.sample_window(3)
    report = check_invariant_projector(V, P, window, tol)
    if not report.passed:
        worst = report.failing()[0]
        raise VerificationError(f"restriction precondition {worst.law} fails at {worst.argmax} (residual {worst.max_residual:.3e})", report)
    return PartialCotranslation(V.group, V.dim, lambda g, h: V(g, h) @ P(g), "Restricted", {"base": V, "projector": P})


def orthogonality_law(W: GroupoidMap, V: GroupoidMap, window: Sequence, tol: float = DEFAULT_TOL) -> Law:
    G = W.group

    def residual(loc) -> float:
        g, h, k = loc
        hg = G.compose(h, g)
        return max(
            scaled(W(hg, k) @ V(g, h), W.norm(hg, k), V.norm(g, h)),
            scaled(V(hg, k) @ W(g, h), V.norm(hg, k), W.norm(g, h)),
        )

    return Law("orthogonality", residual, triples(window), tol)


def sum_laws(W: GroupoidMap, S: GroupoidMap, window: Sequence, tol: float = DEFAULT_TOL) -> list[Law]:
    """Law for ``S = W + V`` plus the two statements about W's units projector."""
    P = units_projector(W)

    def restricts(loc) -> float:
        g, h = loc
        return scaled(S(g, h) @ P(g) - W(g, h), S.norm(g, h), fro(P(g)))

    return [
        composition_law(S, window, tol, name="law"),
        Law("sum_units_invariant", _invariance_residual(S, P), pairs(window), tol),
        Law("sum_restrict", restricts, pairs(window), tol),
    ]


def orthogonal_sum(W: GroupoidMap, V: GroupoidMap, window: Sequence | None = None, tol: float = DEFAULT_TOL) -> PartialCotranslation:
    if W.dim != V.dim:
        raise DimensionError(f"cannot add partial cotranslations of dimensions {W.dim} and {V.dim}")
    window = list(window) if window is not None else W.group.sample_window(3)
    pre = run_laws([orthogonality_law(W, V, window, tol)])
    if not pre.passed:
        e = pre.entries[0]
        raise VerificationError(f"not mutually orthogonal: worst triple {e.argmax}, residual {e.max_residual:.3e}", pre)
    S = PartialCotranslation(W.group, W.dim, lambda g, h: W(g, h) + V(g, h), "Sum", {"parts": (W, V)})
    post = run_laws(sum_laws(W, S, window, tol))
    if not post.passed:
        e = post.failing()[0]
        raise VerificationError(f"orthogonal sum fails {e.law} at {e.argmax}", post)
    S.meta["report"] = pre.merge(post)
    return S


def conjugate(W: GroupoidMap, T: ConjugationMap) -> PartialCotranslation:
    """``W_T(g, h) = T(hg)^-1 W(g, h) T(g)``."""
    if T.dim != W.dim:
        raise DimensionError("conjugation map dimension differs")
    G = W.group
    return PartialCotranslation(
        G, W.dim, lambda g, h: T.inv(G.compose(h, g)) @ W(g, h) @ T(g), "Conjugated", {"base": W, "T": T}
    )


def conjugation_law(W: GroupoidMap, V: GroupoidMap, T: ConjugationMap, window: Sequence, tol: float = DEFAULT_TOL) -> Law:
    """``T(hg) V(g, h) = W(g, h) T(g)``."""
    G = W.group

    def residual(loc) -> float:
        g, h = loc
        t_hg, t_g = T(G.compose(h, g)), T(g)
        return scaled(t_hg @ V(g, h) - W(g, h) @ t_g, fro(t_hg) * V.norm(g, h), W.norm(g, h) * fro(t_g))

    return Law("conjugation", residual, pairs(window), tol)


def constant_block(group: Group, dim: int, rank: int, upper: bool = True) -> PartialCotranslation:
    """``diag(Id_rank, 0)`` (``upper``) or ``diag(0, Id_{dim-rank})`` at every pair."""
    b = np.zeros((dim, dim))
    if upper:
        b[:rank, :rank] = np.eye(rank)
    else:
        b[rank:, rank:] = np.eye(dim - rank)
    b.setflags(write=False)
    return PartialCotranslation(group, dim, lambda g, h: b, "ConstantBlock", {"rank": rank, "upper": upper})


@dataclass
class NormalizedUnits:
    W_hat: PartialCotranslation
    T: ConjugationMap
    report: VerificationReport
    rank: int
    M: float
    laws: list[Law] = field(default_factory=list)


def units_normalizer(W: GroupoidMap, rank_tol: float = DEFAULT_RANK_TOL) -> ConjugationMap:
    """``T(g) = [image basis of P(g) | kernel basis of P(g)]`` with ``P = W(., e)``."""
    P = units_projector(W)

    def fn(g):
        p = P(g)
        return np.hstack([image_basis(p, rank_tol).columns, kernel_basis(p, rank_tol).columns])

    return ConjugationMap(W.group, W.dim, fn, "units_normalizer")


def normalize_units(W: GroupoidMap, window: Sequence, tol: float = BLOCK_TOL, rank_tol: float = DEFAULT_RANK_TOL) -> NormalizedUnits:
    window = list(window)
    d = W.dim
    P = units_projector(W)
    e = W.group.identity()
    r = rank_info(P(e), rank_tol).rank
    T = units_normalizer(W, rank_tol)
    W_hat = conjugate(W, T)
    eye = np.eye(d)
    M = max(max(op_norm(P(g)), op_norm(eye - P(g))) for g in window)
    block = np.zeros((d, d))
    block[:r, :r] = np.eye(r)
    T.measure(window)
    bound = lambda worst, t: worst <= 1.0 + t
    laws = [
        Law("normal_form_block", lambda g: fro(W_hat(g, e) - block), window, tol),
        Law("normalizer_bound", lambda g: op_norm(T(g)) / d, window, BOUND_SLACK, accept=bound, info={"d": d}),
        Law("normalizer_inverse_bound", lambda g: op_norm(T.inv(g)) / (d * M), window, BOUND_SLACK, accept=bound, info={"d": d, "M": M}),
    ]
    report = run_laws(laws, {"rank": r, "M": M, "sup_T": T.sup_norms["T"], "sup_T_inv": T.sup_norms["T_inv"]})
    return NormalizedUnits(W_hat, T, report, r, M, laws)


@dataclass
class Completion:
    V: PartialCotranslation
    Z_full: Cotranslation
    T: ConjugationMap | None
    rank: int
    report: VerificationReport
    normalization: NormalizedUnits | None = None
    meta: dict = field(default_factory=dict)


def full_rank_law(Z: GroupoidMap, window: Sequence, rank_tol: float = DEFAULT_RANK_TOL) -> Law:
    Zp = _as_partial_ranks(Z)
    d = Z.dim
    return Law(
        "full_rank",
        lambda loc: float(d - Zp.rank_info(*loc, rank_tol).rank),
        pairs(window),
        0.0,
        info=lambda: {"min_gap_decades": min(Zp.rank_info(g, h, rank_tol).gap_decades for g, h in pairs(window))},
    )


def completion_laws(W: GroupoidMap, V: GroupoidMap, Z_full: GroupoidMap, window: Sequence, tol: float, rank_tol: float) -> list[Law]:
    P = units_projector(W)

    def reconstruction(loc) -> float:
        g, h = loc
        return scaled(Z_full(g, h) @ P(g) - W(g, h), Z_full.norm(g, h), fro(P(g)))

    return [
        orthogonality_law(W, V, window, tol),
        composition_law(Z_full, window, tol, name="law"),
        full_rank_law(Z_full, window, rank_tol),
        invertibility_law(Z_full, window),
        Law("reconstruction", reconstruction, pairs(window), tol),
    ]


def complete(
    W: GroupoidMap,
    window: Sequence,
    tol: float = DEFAULT_TOL,
    block_tol: float = BLOCK_TOL,
    rank_tol: float = DEFAULT_RANK_TOL,
    raise_on_failure: bool = True,
) -> Completion:
    """Orthogonal complement ``V`` with ``W + V`` a full cotranslation.

    ``V(g, h) = T(hg) diag(0, Id_{d-r}) T(g)^-1`` where ``T`` normalizes the
    units projector of ``W``.
    """
    window = list(window)
    d = W.dim
    G = W.group
    norm = normalize_units(W, window, block_tol, rank_tol)
    r = norm.rank
    if r == d:
        zero = np.zeros((d, d))
        zero.setflags(write=False)
        V = PartialCotranslation(G, d, lambda g, h: zero, "ConstantBlock", {"rank": 0})
        Z_full = Cotranslation(G, d, lambda g, h: W(g, h), "Completed", {"W": W})
        T = None
    else:
        T = norm.T
        v_hat = constant_block(G, d, r, upper=False)
        V = conjugate(v_hat, T.inverted())
        V.kind = "Complement"
        Z_full = Cotranslation(G, d, lambda g, h: W(g, h) + V(g, h), "Completed", {"W": W, "V": V})
    report = norm.report.merge(run_laws(completion_laws(W, V, Z_full, window, tol, rank_tol), {"rank": r}))
    if raise_on_failure and not report.passed:
        e = report.failing()[0]
        raise VerificationError(f"completion check {e.law} fails at {e.argmax} (residual {e.max_residual:.3e})", report)
    return Completion(V, Z_full, T, r, report, norm)


# ---------------------------------------------------------------------------
# probes


def continuity_probe_T(T: ConjugationMap, path: Sequence, metric: Callable[[Any, Any], float] | None = None) -> dict:
    """Largest jump ``||T(g_{i+1}) - T(g_i)|| / dist`` along consecutive path elements.  Informational."""
    jumps = []
    for a, b in zip(path, path[1:]):
        dist = metric(a, b) if metric else 1.0
        jumps.append(op_norm(T(b) - T(a)) / dist if dist else 0.0)
    if not jumps:
        return {"probe": "continuity", "max_jump": 0.0, "argmax": None, "jumps": []}
    j = int(np.argmax(jumps))
    return {"probe": "continuity", "max_jump": float(jumps[j]), "argmax": (path[j], path[j + 1]), "jumps": jumps}


def kinematic_similarity_report(
    W: GroupoidMap,
    V: GroupoidMap,
    T: ConjugationMap,
    window: Sequence,
    outer_window: Sequence | None = None,
    tol: float = DEFAULT_TOL,
    growth: float = 1.5,
) -> VerificationReport:
    """Conjugation residual plus sup norms of T and T^-1.

    With ``outer_window`` the sup norms are measured again on the larger set;
    growth beyond ``growth`` times marks the conjugation as unbounded.
    """
    window = list(window)
    report = run_laws([conjugation_law(W, V, T, window, tol)])
    sup_t, sup_inv = T.measure(window)
    meta = {"sup_T": sup_t, "sup_T_inv": sup_inv, "bounded": "unknown"}
    if outer_window is not None:
        out_t, out_inv = T.measure(list(outer_window))
        meta.update({"sup_T_outer": out_t, "sup_T_inv_outer": out_inv})
        meta["bounded"] = "unbounded" if max(out_t / sup_t, out_inv / sup_inv) > growth else "bounded"
    path = _adjacent_path(W.group, window)
    if path is not None:
        meta["continuity"] = continuity_probe_T(T, path)["max_jump"]
    report.meta.update(meta)
    return report


def _adjacent_path(G: Group, window: Sequence):
    if isinstance(G, IntegerGroup):
        return sorted(window)
    return None
