"""Verification reports: per-law residual maxima with replayable argmax locations."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

SCHEMA_VERSION = 1

LAW_DESCRIPTIONS: dict[str, str] = {
    "cocycle": "Z(g,kh) = Z(hg,k) Z(g,h), scale-normalized",
    "unit": "Z(g,e) = Id",
    "involution": "Z(g,h)^-1 = Z(hg,h^-1)",
    "invertible": "every Z(g,h) invertible at the inverse tolerance",
    "morphism": "gamma(gh) = gamma(g) gamma(h) and gamma(e) = Id",
    "commutation": "gamma(k) Z(g,h) = Z(g,h) gamma(k)",
    "autonomy": "Z(g,h) = Z(e,h) for all g",
    "relations": "generator maps preserve every relation word",
    "hull_admissible": "psi_g(e,.) = Id",
    "hull_composition": "psi_{hg}(k,.) psi_g(h,.) = psi_g(kh,.)",
    "hull_roundtrip": "from_hull(to_hull(Z)) = Z",
    "difference_seq_roundtrip": "Z(n,1) = A(n)",
    "generator_vs_difference_seq": "generator-map construction equals product formula on Z",
    "evolution_unit": "Psi(t,t) = Id",
    "evolution_cocycle": "Psi(u,v) Psi(v,w) = Psi(u,w)",
    "closed_form": "Psi(t,s) agrees with the closed-form propagator",
    "generator": "central-difference generator d2 Z(t,0) agrees with A(t)",
    "generator_richardson": "generator error ratio at h_fd vs h_fd/2",
    "d1_split": "d1 Z(r,t) = d2 Z(r,t) - Z(r,t) d2 Z(r,0)",
    "d1_inverse": "d1 Zinv = -Zinv (d1 Z) Zinv",
    "d2_transport": "d2 Z(r,t) = d2 Z(r+t,0) Z(r,t)",
    "d2_inverse": "d2 Zinv = -Zinv (d2 Z) Zinv",
    "evolution_backward": "dPsi/dv = -Psi(u,v) A(v)",
    "law": "W(g,kh) = W(hg,k) W(g,h), scale-normalized",
    "units_idempotent": "W(g,e) idempotent",
    "units_invariant": "P(hg) W(g,h) = W(g,h) P(g) for P(g) = W(g,e)",
    "kernel_constancy": "ker W(h,g) = ker W(h,k)",
    "rank_constancy": "rank W(g,h) constant",
    "projector_idempotent": "P(g) idempotent",
    "projector_invariant": "P(hg) V(g,h) = V(g,h) P(g)",
    "projector_orthogonal": "P(g) Q(g) = Q(g) P(g) = 0",
    "projector_transport": "P(g) = Z(e,g) P(e) Z(g,g^-1) for full Z",
    "orthogonality": "W(hg,k) V(g,h) = V(hg,k) W(g,h) = 0",
    "sum_units_invariant": "W(.,e) invariant for W+V",
    "sum_restrict": "(W+V)(g,h) W(g,e) = W(g,h)",
    "normal_form_block": "T(g)^-1 W(g,e) T(g) = diag(Id_r, 0)",
    "normalizer_bound": "||T(g)|| / d <= 1",
    "normalizer_inverse_bound": "||T(g)^-1|| / (d M) <= 1",
    "conjugation": "T(hg) V(g,h) = W(g,h) T(g)",
    "full_rank": "rank (W+V)(g,h) = d",
    "reconstruction": "restrict(W+V, W(.,e)) = W",
    "rank_invariance": "rank W_T = rank W",
}


def to_jsonable(x: Any) -> Any:
    """Tuples become lists recursively; numpy scalars become floats/ints."""
    if isinstance(x, (tuple, list)):
        return [to_jsonable(y) for y in x]
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if hasattr(x, "item") and not isinstance(x, (str, bytes)):
        return x.item()
    return x


def from_jsonable(x: Any) -> Any:
    """Inverse of ``to_jsonable`` for locations: lists become tuples."""
    if isinstance(x, list):
        return tuple(from_jsonable(y) for y in x)
    return x


def _finite_or_inf(r: float) -> float:
    r = float(r)
    return math.inf if math.isnan(r) else r


@dataclass
class LawEntry:
    law: str
    max_residual: float
    argmax: Any
    passed: bool
    tol: float
    samples: int
    info: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        r = self.max_residual
        return {
            "law": self.law,
            "max_residual": r if math.isfinite(r) else str(r),
            "argmax": to_jsonable(self.argmax),
            "pass": self.passed,
            "tol": self.tol,
            "samples": self.samples,
            "info": to_jsonable(self.info),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LawEntry":
        r = d["max_residual"]
        return cls(
            law=d["law"],
            max_residual=float(r),
            argmax=from_jsonable(d["argmax"]),
            passed=bool(d["pass"]),
            tol=float(d["tol"]),
            samples=int(d["samples"]),
            info=dict(d.get("info", {})),
        )


@dataclass(frozen=True)
class Law:
    """A residual function swept over a finite set of locations.

    ``accept(max_residual, tol)`` decides pass/fail; the default is
    ``max_residual <= tol``.  ``info`` may be a dict or a zero-argument
    callable evaluated after the sweep.
    """

    law: str
    residual: Callable[[Any], float]
    locations: Sequence[Any]
    tol: float
    accept: Callable[[float, float], bool] | None = None
    info: Any = None

    def sweep(self) -> LawEntry:
        worst = -math.inf
        where: Any = None
        n = 0
        for loc in self.locations:
            r = _finite_or_inf(self.residual(loc))
            n += 1
            if r > worst:
                worst, where = r, loc
        if n == 0:
            worst = 0.0
        ok = self.accept(worst, self.tol) if self.accept else worst <= self.tol
        info = self.info() if callable(self.info) else dict(self.info or {})
        return LawEntry(self.law, worst, where, bool(ok), self.tol, n, info)

    def replay(self, location: Any) -> float:
        return _finite_or_inf(self.residual(location))


@dataclass
class VerificationReport:
    entries: list[LawEntry] = field(default_factory=list)
    wall_time: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def entry(self, law: str) -> LawEntry:
        for e in self.entries:
            if e.law == law:
                return e
        raise KeyError(law)

    def __contains__(self, law: str) -> bool:
        return any(e.law == law for e in self.entries)

    def failing(self) -> list[LawEntry]:
        return [e for e in self.entries if not e.passed]

    def merge(self, other: "VerificationReport") -> "VerificationReport":
        """Concatenate entries; a law present in both keeps the larger residual."""
        merged = {e.law: e for e in self.entries}
        order = [e.law for e in self.entries]
        for e in other.entries:
            if e.law not in merged:
                merged[e.law] = e
                order.append(e.law)
            else:
                a = merged[e.law]
                winner = e if e.max_residual > a.max_residual else a
                merged[e.law] = LawEntry(
                    e.law, winner.max_residual, winner.argmax, a.passed and e.passed,
                    winner.tol, a.samples + e.samples, {**a.info, **e.info},
                )
        return VerificationReport(
            [merged[k] for k in order], self.wall_time + other.wall_time, {**self.meta, **other.meta}
        )

    def to_dict(self) -> dict:
        return {
            "pass": self.passed,
            "entries": [e.to_dict() for e in self.entries],
            "meta": to_jsonable(self.meta),
            "wall_time": self.wall_time,
        }

    def summary(self) -> str:
        lines = []
        for e in self.entries:
            flag = "PASS" if e.passed else "FAIL"
            lines.append(f"[{flag}] {e.law}: max_residual={e.max_residual:.3e} tol={e.tol:.1e} at {e.argmax}")
        return "\n".join(lines)


def run_laws(laws: Iterable[Law], meta: dict | None = None) -> VerificationReport:
    t0 = time.perf_counter()
    entries = [law.sweep() for law in laws]
    return VerificationReport(entries, time.perf_counter() - t0, dict(meta or {}))
