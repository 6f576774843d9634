"""Batch front end: JSON problem spec in, JSON verification report out.

Exit codes: 0 every law passes, 1 some law fails (or replay mismatch),
2 spec error, 3 numerical divergence.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Callable

import jsonschema
import numpy as np

from . import __version__
from .cotranslation import (
    Cotranslation,
    DifferenceSeq,
    GeneratorMaps,
    Morphism,
    autonomy_law,
    cayley_relations,
    cotranslation_laws,
    from_difference_seq,
    from_generator_maps,
    from_hull,
    from_morphism,
    hull_laws,
    pairs,
    shift_by_morphism,
    solution_hull,
    to_hull,
)
from .errors import CotransError, DimensionError, DivergenceError, ReplayError, SpecError, VerificationError
from .evolution import (
    DEFAULT_H,
    DEFAULT_H_FD,
    CoeffFn,
    closed_form_law,
    closed_form_oracle,
    cotranslation_of,
    derivative_identity_laws,
    generator_laws,
    integrate,
    psi_cocycle_law,
    psi_unit_law,
    sample_pairs,
    two_variable_differentiability_probe,
    write_csv,
)
from .groups import FiniteGroup, Group, IntegerGroup, LatticeGroup, group_from_json, relations_law
from .linalg import as_mat, fro
from .partial import (
    PartialCotranslation,
    ProjectorMap,
    as_partial,
    completion_laws,
    complete,
    composition_law,
    conjugated_constant_projector,
    invariant_projector_laws,
    kernel_constancy_laws,
    restrict,
    units_projector_laws,
)
from .report import LAW_DESCRIPTIONS, SCHEMA_VERSION, Law, LawEntry, VerificationReport, from_jsonable, to_jsonable

DEFAULT_RADIUS = 3
DEFAULT_MAX_DIM = 16
REPLAY_RTOL = 1e-12

EXIT_PASS, EXIT_FAIL, EXIT_SPEC, EXIT_DIVERGENCE = 0, 1, 2, 3


def load_schema() -> dict:
    return json.loads(resources.files("cotrans").joinpath("schema.json").read_text())


def max_dim() -> int:
    raw = os.environ.get("COTRANS_MAX_DIM", str(DEFAULT_MAX_DIM))
    try:
        cap = int(raw)
    except ValueError as exc:
        raise SpecError(f"COTRANS_MAX_DIM must be an integer, got {raw!r}") from exc
    if cap < 1:
        raise SpecError("COTRANS_MAX_DIM must be positive")
    return cap


def validate(spec: dict) -> None:
    try:
        jsonschema.validate(spec, load_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SpecError(f"spec field {where}: {exc.message}") from None


# ---------------------------------------------------------------------------
# building objects from spec fragments


class Builder:
    def __init__(self, group: Group, seed: int):
        self.group = group
        self.seed = seed
        self.cap = max_dim()

    def mat(self, m, dim: int | None = None) -> np.ndarray:
        try:
            a = as_mat(m, dim)
        except SpecError:
            raise
        except ValueError as exc:
            raise SpecError(str(exc)) from None
        if a.shape[0] > self.cap:
            raise SpecError(f"dimension {a.shape[0]} exceeds COTRANS_MAX_DIM={self.cap}")
        return a

    def dim(self, d: int) -> int:
        if d > self.cap:
            raise SpecError(f"dimension {d} exceeds COTRANS_MAX_DIM={self.cap}")
        return d

    def require_z(self, what: str) -> None:
        if not isinstance(self.group, IntegerGroup):
            raise SpecError(f"{what} needs group kind Z, got {self.group}")

    def sequence(self, s: dict) -> DifferenceSeq:
        if "period" in s:
            mats = [self.mat(m) for m in s["period"]]
            return DifferenceSeq.periodic(mats)
        family = s.get("family")
        if family == "random":
            return DifferenceSeq.random(self.dim(int(s.get("dim", 2))), int(s.get("seed", self.seed)), float(s.get("cond_max", 1e3)))
        if family == "constant":
            return DifferenceSeq.constant(self.mat(s["matrix"]))
        raise SpecError(f"unknown difference sequence family {family!r}")

    def gamma(self, s: dict, dim: int | None = None) -> Morphism:
        G = self.group
        family = s["family"]
        if family == "identity":
            d = self.dim(int(s.get("dim", dim or 2)))
            eye = np.eye(d)
            return Morphism(G, d, lambda g: eye, "identity")
        if family == "scalar_pow":
            self.require_z("scalar_pow")
            d = self.dim(int(s.get("dim", dim or 2)))
            b = float(s["base"])
            return Morphism(G, d, lambda n: (b**n) * np.eye(d), "scalar_pow")
        if family == "diag_pow":
            return self._diag_pow(s["base"])
        if family == "generator_images":
            images = [self.mat(m) for m in s["images"]]
            if len(images) != G.ngens:
                raise SpecError(f"generator_images needs {G.ngens} matrices, got {len(images)}")
            d = images[0].shape[0]
            for m in images:
                self.mat(m, d)
            inv = [np.linalg.inv(m) for m in images]

            def fn(g):
                out = np.eye(d)
                for a in G.word_of(g):
                    out = out @ (images[a - 1] if a > 0 else inv[-a - 1])
                return out

            return Morphism(G, d, fn, "generator_images")
        raise SpecError(f"unknown morphism family {family!r}")

    def _diag_pow(self, base) -> Morphism:
        G = self.group
        if isinstance(G, IntegerGroup):
            b = np.asarray(base, dtype=float)
            if b.ndim != 1:
                raise SpecError("diag_pow base on Z must be a list of numbers")
            self.dim(len(b))
            return Morphism(G, len(b), lambda n: np.diag(b**n), "diag_pow")
        if isinstance(G, LatticeGroup):
            b = np.asarray(base, dtype=float)
            if b.ndim != 2 or b.shape[0] != G.k:
                raise SpecError(f"diag_pow base on Z^{G.k} must be {G.k} lists, one per generator")
            self.dim(b.shape[1])
            return Morphism(G, b.shape[1], lambda v: np.diag(np.prod(b ** np.asarray(v)[:, None], axis=0)), "diag_pow")
        raise SpecError("diag_pow needs group kind Z or Zk")

    def cotranslation(self, s: dict, window) -> Cotranslation:
        kind = s["kind"]
        if kind == "difference_seq":
            self.require_z("difference_seq")
            Z = from_difference_seq(self.sequence(s))
        elif kind == "morphism":
            gm = self.gamma(s if "family" in s else s["gamma"])
            Z = from_morphism(self.group, gm, window, dim=gm.dim)
        elif kind == "generator_maps":
            maps = self.generator_maps(s["maps"])
            Z = from_generator_maps(self.group, maps, window)
        elif kind == "shifted":
            base = self.cotranslation(s["base"], window)
            Z = shift_by_morphism(base, self.gamma(s["gamma"], base.dim), window)
        else:
            raise SpecError(f"unknown cotranslation kind {kind!r}")
        if "corrupt" in s:
            Z = self._corrupted(Z, s["corrupt"])
        return Z

    def _corrupted(self, Z: Cotranslation, c: dict) -> Cotranslation:
        g, h = from_jsonable(c["g"]), from_jsonable(c["h"])
        self.group.check(g)
        self.group.check(h)
        bad = self.mat(c["value"], Z.dim)
        return Cotranslation(Z.group, Z.dim, lambda a, b: bad if (a, b) == (g, h) else Z(a, b), "Explicit", {"corrupted": (g, h)})

    def generator_maps(self, specs: list) -> GeneratorMaps:
        G = self.group
        fns = []
        for m in specs:
            if "constant" in m:
                a = self.mat(m["constant"])
                fns.append(lambda eta, a=a: a)
            elif "period" in m or "sequence" in m:
                if not isinstance(G, (IntegerGroup, LatticeGroup)):
                    raise SpecError("periodic generator maps need group kind Z or Zk")
                seq = self.sequence(m if "period" in m else m["sequence"])
                if isinstance(G, IntegerGroup):
                    fns.append(seq)
                else:
                    fns.append(lambda eta, seq=seq: seq(sum(eta)))
            else:
                raise SpecError("generator map needs one of constant, period, sequence")
        dims = {as_mat(f(G.identity())).shape[0] for f in fns}
        if len(dims) != 1:
            raise DimensionError(f"generator maps have mixed dimensions {sorted(dims)}")
        return GeneratorMaps(G, fns)

    def projector(self, s: dict, base) -> ProjectorMap:
        G = self.group
        kind = s["kind"]
        if kind == "conjugated_constant":
            return conjugated_constant_projector(base, self.mat(s["p0"], base.dim))
        if kind == "constant":
            return ProjectorMap.constant(G, self.mat(s["p"], base.dim))
        if kind == "complement_of_constant":
            return ProjectorMap.constant(G, self.mat(s["p"], base.dim)).complement()
        if kind == "alternating":
            self.require_z("alternating projector")
            if base.dim != 2:
                raise DimensionError("the alternating projector is 2x2")
            even, odd = np.diag([0.0, 1.0]), np.eye(2)
            return ProjectorMap(G, 2, lambda n: even if n % 2 == 0 else odd, "alternating")
        raise SpecError(f"unknown projector kind {kind!r}")

    def partial(self, s: dict, window) -> PartialCotranslation:
        kind = s["kind"]
        G = self.group
        if kind == "diag_pow":
            self.require_z("diag_pow partial")
            base = np.asarray(s["base"], dtype=float)
            mask = np.asarray(s["mask"], dtype=float)
            if base.ndim != 1 or base.shape != mask.shape:
                raise DimensionError("diag_pow base and mask must be lists of equal length")
            self.dim(len(base))
            return PartialCotranslation(G, len(base), lambda m, n: np.diag(mask * base**n), "Explicit", {"family": "diag_pow"})
        if kind == "restrict":
            base = self._partial_base(s["base"], window)
            P = self.projector(s["projector"], base)
            return restrict(base, P, window)
        if kind == "cotranslation":
            return as_partial(self.cotranslation(s["base"], window))
        if kind == "explicit_table":
            if not isinstance(G, FiniteGroup):
                raise SpecError("explicit_table partials need a finite group (the table must be total)")
            vals = s["values"]
            if len(vals) != G.order or any(len(row) != G.order for row in vals):
                raise SpecError(f"explicit_table needs an {G.order}x{G.order} grid of matrices")
            table = [[self.mat(m) for m in row] for row in vals]
            d = table[0][0].shape[0]
            for row in table:
                for m in row:
                    self.mat(m, d)
            return PartialCotranslation(G, d, lambda g, h: table[g][h], "Explicit", {"family": "table"})
        raise SpecError(f"unknown partial kind {kind!r}")

    def _partial_base(self, s: dict, window):
        if s.get("kind") in ("difference_seq", "morphism", "generator_maps", "shifted"):
            return self.cotranslation(s, window)
        return self.partial(s, window)

    def coeff(self, s: dict) -> CoeffFn:
        family = s["family"]
        if family == "rotation":
            return CoeffFn.rotation(float(s.get("omega", 1.0)))
        if family == "table":
            return CoeffFn.periodic_table(float(s["step"]), [self.mat(m) for m in s["mats"]], s.get("interp", "linear"))
        if family == "constant":
            return CoeffFn.constant(self.mat(s["matrix"]))
        if family == "zero":
            return CoeffFn.zero(self.dim(int(s.get("dim", 2))))
        if family == "diagonal_poly":
            self.dim(len(s["coeffs"]))
            return CoeffFn.diagonal_poly(s["coeffs"])
        if family == "periodic_sine":
            return CoeffFn.periodic_sine(float(s.get("amp", 0.5)), float(s.get("omega", 1.0)))
        if family == "shifted":
            return CoeffFn.shifted_by_scalar(self.coeff(s["base"]), float(s["lambda"]))
        raise SpecError(f"unknown coefficient family {family!r}")


# ---------------------------------------------------------------------------
# problems: a deterministic list of laws plus command-specific output


@dataclass
class Problem:
    laws: list[Law]
    output: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)
    csv: Callable[[str], None] | None = None


def _tol(spec: dict, overrides: dict, name: str, default: float) -> float:
    if name in overrides:
        return overrides[name]
    return float(spec.get("tolerances", {}).get(name, default))


def _table_rows(Z, window) -> list:
    return [[g, h, Z(g, h).tolist()] for g, h in pairs(window)]


def build_problem(spec: dict, radius: int | None = None, seed: int | None = None, tol_overrides: dict | None = None) -> Problem:
    validate(spec)
    tol_overrides = tol_overrides or {}
    seed = int(spec.get("seed", 0) if seed is None else seed)
    radius = int(spec.get("radius", DEFAULT_RADIUS) if radius is None else radius)
    if radius < 1:
        raise SpecError("radius must be >= 1")
    group = group_from_json(spec.get("group", {"kind": "Z"}))
    B = Builder(group, seed)
    window = group.sample_window(radius, seed)
    command = spec["command"]
    t = lambda name, default: _tol(spec, tol_overrides, name, default)
    meta = {"command": command, "group": group.to_json(), "radius": radius, "seed": seed, "window_size": len(window)}

    if "ode" in spec:
        if command not in ("evolve", "verify"):
            raise SpecError(f"command {command!r} does not apply to an ode spec")
        return _ode_problem(spec["ode"], B, seed, t, meta)

    if "hull" in spec:
        if command not in ("skew-roundtrip", "verify"):
            raise SpecError(f"command {command!r} does not apply to a hull spec")
        return _hull_problem(spec["hull"], B, window, t, meta)

    if "cotranslation" in spec:
        cs = spec["cotranslation"]
        if command == "generator":
            return _generator_problem(cs, B, window, t, meta)
        if command == "skew-roundtrip":
            Z = B.cotranslation(cs, window)
            H = to_hull(Z)
            back = from_hull(H, window, t("hull_composition", 1e-10))
            laws = hull_laws(H, window, t("hull_composition", 1e-10)) + [
                Law("hull_roundtrip", lambda loc: float(np.max(np.abs(back(*loc) - Z(*loc)))), pairs(window), t("hull_roundtrip", 0.0))
            ]
            return Problem(laws, meta=meta)
        if command != "verify":
            raise SpecError(f"command {command!r} does not apply to a cotranslation spec")
        Z = B.cotranslation(cs, window)
        laws = _cotranslation_laws(Z, window, t)
        laws.append(autonomy_law(Z, window, t("autonomy", 1e-10)))
        # autonomy is descriptive here: report it, never fail on it
        laws[-1] = Law("autonomy", laws[-1].residual, laws[-1].locations, laws[-1].tol, accept=lambda w, tt: True)
        if cs["kind"] == "difference_seq":
            A = Z.meta["A"]
            laws.append(Law("difference_seq_roundtrip", lambda n: fro(Z(n, 1) - A(n)), list(window), t("difference_seq_roundtrip", 0.0)))
        return Problem(laws, meta=meta)

    ps = spec["partial"]
    W = B.partial(ps, window)
    if command == "verify":
        laws = _partial_laws(W, window, t)
        opt = spec.get("options", {})
        if "projector" in opt:
            P = B.projector(opt["projector"], W)
            laws += invariant_projector_laws(W, P, window, t("projector_invariant", 1e-9))
        return Problem(laws, meta=meta)
    if command == "complete":
        tol = t("law", 1e-9)
        comp = complete(W, window, tol, t("normal_form_block", 1e-8), raise_on_failure=False)
        norm = comp.normalization
        laws = norm.laws + completion_laws(W, comp.V, comp.Z_full, window, tol, 1e-8)
        e = group.identity()
        output = {
            "rank": comp.rank,
            "T": [[g, comp.T(g).tolist()] for g in window] if comp.T is not None else None,
            "V": {"kind": comp.V.kind, "block": "diag(0, Id_%d)" % (W.dim - comp.rank), "units": [[g, comp.V(g, e).tolist()] for g in window]},
            "Z_full": _table_rows(comp.Z_full, window),
            "M": norm.M,
        }
        return Problem(laws, output=output, meta=meta)
    raise SpecError(f"command {command!r} does not apply to a partial spec")


def _cotranslation_laws(Z, window, t) -> list[Law]:
    laws = cotranslation_laws(Z, window, t("cocycle", 1e-10))
    names = {"unit": t("unit", 1e-10), "involution": t("involution", 1e-10), "invertible": t("invertible", 1e-12)}
    return [Law(l.law, l.residual, l.locations, names.get(l.law, l.tol), l.accept, l.info) for l in laws]


def _partial_laws(W, window, t) -> list[Law]:
    return (
        [composition_law(W, window, t("law", 1e-9), name="law")]
        + units_projector_laws(W, window, t("units_invariant", 1e-9))
        + kernel_constancy_laws(W, window, t("kernel_constancy", 1e-9))
    )


def _generator_problem(cs: dict, B: Builder, window, t, meta) -> Problem:
    if cs["kind"] != "generator_maps":
        raise SpecError("the generator command needs a generator_maps cotranslation")
    G = B.group
    maps = B.generator_maps(cs["maps"])
    laws = []
    relations = G.relations
    if isinstance(G, FiniteGroup) and not relations:
        relations = cayley_relations(G)
    if relations:
        laws.append(relations_law(G, maps.fns, window, t("relations", 1e-10), relations))
        if not laws[0].sweep().passed:
            return Problem(laws, meta={**meta, "constructed": False})
    Z = from_generator_maps(G, maps, window, t("relations", 1e-10), check_relations=False)
    laws += _cotranslation_laws(Z, window, t)
    if isinstance(G, IntegerGroup) and isinstance(maps._maps[0], DifferenceSeq):
        Zd = from_difference_seq(maps._maps[0])
        laws.append(
            Law(
                "generator_vs_difference_seq",
                lambda loc: float(np.max(np.abs(Z(*loc) - Zd(*loc)))),
                pairs(window),
                t("generator_vs_difference_seq", 0.0),
            )
        )
    return Problem(laws, meta={**meta, "constructed": True})


def _hull_problem(hs: dict, B: Builder, window, t, meta) -> Problem:
    tol = t("hull_composition", 1e-10)
    if hs["kind"] == "solution_family":
        B.require_z("solution_family hull")
        seq = B.sequence(hs["sequence"])
        H = solution_hull(seq)
        laws = hull_laws(H, window, tol)
        Zd = from_difference_seq(seq)
        # the vector-propagated family must agree with the product formula
        laws.append(
            Law(
                "hull_vs_product_formula",
                lambda loc: fro(H.slice(*loc) - Zd(*loc)) / max(1.0, Zd.norm(*loc)),
                pairs(window),
                t("hull_vs_product_formula", 1e-10),
            )
        )
        return Problem(laws, meta=meta)
    Z = B.cotranslation(hs["base"], window)
    H = to_hull(Z)
    back = from_hull(H, window, tol)
    laws = hull_laws(H, window, tol) + [
        Law("hull_roundtrip", lambda loc: float(np.max(np.abs(back(*loc) - Z(*loc)))), pairs(window), t("hull_roundtrip", 0.0))
    ]
    return Problem(laws, meta=meta)


def _ode_problem(os_: dict, B: Builder, seed: int, t, meta) -> Problem:
    A = B.coeff(os_["coeff"])
    h = float(os_.get("h", DEFAULT_H))
    h_fd = float(os_.get("h_fd", DEFAULT_H_FD))
    samples = int(os_.get("samples", 20))
    E = integrate(A, float(os_["t0"]), float(os_["t1"]), h)
    Z = cotranslation_of(E)
    laws = [psi_unit_law(E, t("evolution_unit", 0.0)), psi_cocycle_law(E, 200, seed, t("evolution_cocycle", 1e-9))]
    oracle = closed_form_oracle(A)
    if oracle is not None:
        laws.append(closed_form_law(E, oracle, 200, seed, t("closed_form", 1e-6)))
    s = Z.steps_of(h_fd)
    pts = sample_pairs(Z, s, samples, seed)
    idx = sorted({i for i, _ in pts})
    laws += generator_laws(Z, idx, h_fd, t("generator", 5e-4))
    laws += derivative_identity_laws(Z, pts, h_fd)
    probe = two_variable_differentiability_probe(Z, pts[:5], h_fd)
    meta = {**meta, "steps": E.n, "h": h, "h_fd": h_fd, "t0": E.t0, "t1_grid": E.t1, "probe": probe}
    meta.pop("window_size", None)
    meta.pop("radius", None)
    return Problem(laws, meta=meta, csv=lambda path: write_csv(E, path))


# ---------------------------------------------------------------------------
# running, serializing, replaying


def run_problem(problem: Problem) -> VerificationReport:
    t0 = time.perf_counter()
    entries = [law.sweep() for law in problem.laws]
    return VerificationReport(entries, time.perf_counter() - t0, problem.meta)


def report_document(report: VerificationReport, problem: Problem | None = None) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "version": __version__,
        **report.to_dict(),
    }
    for e in doc["entries"]:
        e["argmax_triple"] = e["argmax"]
    if problem is not None and problem.output:
        doc["output"] = to_jsonable(problem.output)
    return doc


def error_document(kind: str, message: str, **extra) -> dict:
    return {"schema_version": SCHEMA_VERSION, "version": __version__, "pass": False, "error": {"type": kind, "message": message, **extra}}


def dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def run(spec: dict, radius=None, seed=None, tol_overrides=None) -> tuple[dict, int, Problem | None]:
    """Build, verify and serialize.  Returns ``(document, exit_code, problem)``."""
    try:
        problem = build_problem(spec, radius, seed, tol_overrides)
        report = run_problem(problem)
    except DivergenceError as exc:
        return error_document("divergence", str(exc), step=exc.step), EXIT_DIVERGENCE, None
    except VerificationError as exc:
        doc = report_document(exc.report) if exc.report is not None else error_document("verification", str(exc))
        doc["error"] = {"type": "verification", "message": str(exc)}
        doc["pass"] = False
        return doc, EXIT_FAIL, None
    doc = report_document(report, problem)
    return doc, (EXIT_PASS if report.passed else EXIT_FAIL), problem


def replay(doc: dict, spec: dict, radius=None, seed=None, tol_overrides=None) -> tuple[bool, list[str]]:
    """Re-evaluate every argmax location; true iff all residuals reproduce."""
    if doc.get("schema_version") != SCHEMA_VERSION or doc.get("version") != __version__:
        raise ReplayError(
            f"report from schema {doc.get('schema_version')} / version {doc.get('version')}, "
            f"this is schema {SCHEMA_VERSION} / version {__version__}"
        )
    if "error" in doc:
        err = doc["error"]
        fresh, _, _ = run(spec, radius, seed, tol_overrides)
        same = fresh.get("error") == err
        return same, [] if same else [f"error changed: {err} -> {fresh.get('error')}"]
    meta = doc.get("meta", {})
    if radius is None and "radius" in meta:
        radius = meta["radius"]
    try:
        problem = build_problem(spec, radius, seed if seed is not None else meta.get("seed"), tol_overrides)
    except DivergenceError as exc:
        return False, [f"replay diverged: {exc}"]
    laws = {law.law: law for law in problem.laws}
    problems = []
    for raw in doc.get("entries", []):
        entry = LawEntry.from_dict(raw)
        law = laws.get(entry.law)
        if law is None:
            problems.append(f"{entry.law}: not produced by this spec")
            continue
        if entry.argmax is None:
            if entry.samples != 0:
                problems.append(f"{entry.law}: no argmax recorded")
            continue
        got = law.replay(entry.argmax)
        want = entry.max_residual
        if math.isinf(want) and math.isinf(got):
            continue
        if not abs(got - want) <= REPLAY_RTOL * max(1.0, abs(want)):
            problems.append(f"{entry.law}: residual {got!r} at {entry.argmax} differs from recorded {want!r}")
    return not problems, problems


def _parse_tols(items: list[str]) -> dict:
    out = {}
    for item in items or []:
        key, sep, val = item.partition("=")
        if not sep or not key:
            raise SpecError(f"--tol expects KEY=VAL, got {item!r}")
        try:
            out[key] = float(val)
        except ValueError:
            raise SpecError(f"--tol {key}: {val!r} is not a number") from None
        if not out[key] >= 0:
            raise SpecError(f"--tol {key} must be non-negative")
    return out


def _read_json(path: str) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise SpecError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path} is not valid JSON: {exc.msg} at line {exc.lineno}") from None


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cotrans", description="Verify cotranslation laws for a JSON problem spec.")
    p.add_argument("--spec", help="problem spec (JSON)")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--csv", help="dump Psi(t, t0) rows for evolve problems")
    p.add_argument("--radius", type=int, help="window radius override")
    p.add_argument("--seed", type=int, help="seed override")
    p.add_argument("--tol", action="append", default=[], metavar="KEY=VAL", help="tolerance override per law (repeatable)")
    p.add_argument("--list-laws", action="store_true", help="print known law ids and exit")
    p.add_argument("--replay", metavar="REPORT", help="re-evaluate the argmax locations of a saved report")
    p.add_argument("--version", action="version", version=f"cotrans {__version__}")
    return p


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    if args.list_laws:
        for name in sorted(LAW_DESCRIPTIONS):
            print(f"{name}\t{LAW_DESCRIPTIONS[name]}")
        return EXIT_PASS
    try:
        if not args.spec:
            raise SpecError("--spec is required")
        if args.seed is not None and args.seed < 0:
            raise SpecError("--seed must be non-negative")
        spec = _read_json(args.spec)
        if not isinstance(spec, dict):
            raise SpecError("spec must be a JSON object")
        tols = _parse_tols(args.tol)
        if args.replay:
            ok, problems = replay(_read_json(args.replay), spec, args.radius, args.seed, tols)
            for line in problems:
                print(line, file=sys.stderr)
            print("replay: ok" if ok else "replay: MISMATCH")
            return EXIT_PASS if ok else EXIT_FAIL
        doc, code, problem = run(spec, args.radius, args.seed, tols)
        text = dumps(doc)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        if args.csv:
            if problem is None or problem.csv is None:
                raise SpecError("--csv applies only to evolve problems that ran to completion")
            problem.csv(args.csv)
        return code
    except ReplayError as exc:
        print(f"replay error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except SpecError as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except CotransError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
