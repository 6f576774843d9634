"""Evolution operators of x' = A(t) x on a uniform grid and their cotranslations.

Grid positions ``i = 0..n`` stand for times ``t0 + i*h``.  The associated
cotranslation lives on the integers: the element ``i`` is the time
``t0 + i*h`` when used as a base point and the duration ``i*h`` when used as a
displacement, so ``Z(i, k) = Psi(t0 + (i+k) h, t0 + i h)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .cotranslation import Cotranslation, scaled
from .errors import DivergenceError, GridRangeError, SpecError
from .groups import IntegerGroup
from .linalg import as_mat, fro, try_inverse
from .report import Law, VerificationReport, run_laws

MAX_STEPS = 10**6
DEFAULT_H = 1e-3
DEFAULT_H_FD = 1e-2
ROUNDOFF_FLOOR = 1e-8
RICHARDSON_BAND = (3.5, 4.5)


@dataclass
class CoeffFn:
    """Coefficient ``t -> A(t)``."""

    fn: Callable[[float], np.ndarray]
    dim: int
    kind: str
    meta: dict = field(default_factory=dict)

    def __call__(self, t: float) -> np.ndarray:
        a = np.asarray(self.fn(float(t)), dtype=float)
        if a.shape != (self.dim, self.dim):
            raise SpecError(f"coefficient returned shape {a.shape}, expected {(self.dim, self.dim)}")
        return a

    @classmethod
    def constant(cls, a) -> "CoeffFn":
        a = as_mat(a)
        return cls(lambda t: a, a.shape[0], "constant", {"matrix": a.tolist()})

    @classmethod
    def zero(cls, dim: int) -> "CoeffFn":
        return cls.constant(np.zeros((dim, dim)))

    @classmethod
    def rotation(cls, omega: float = 1.0) -> "CoeffFn":
        a = np.array([[0.0, omega], [-omega, 0.0]])
        return cls(lambda t: a, 2, "rotation", {"omega": omega})

    @classmethod
    def periodic_table(cls, step: float, mats: Sequence, interp: str = "linear") -> "CoeffFn":
        """Nodes at ``j*step`` repeating with period ``len(mats)*step``.

        ``interp="linear"`` interpolates between neighbouring nodes;
        ``interp="step"`` holds each node value, giving a discontinuous coefficient.
        """
        if step <= 0:
            raise SpecError("table step must be positive")
        table = [as_mat(m) for m in mats]
        if not table:
            raise SpecError("coefficient table is empty")
        d = table[0].shape[0]
        for m in table:
            as_mat(m, d)
        p = len(table)
        if interp not in ("linear", "step"):
            raise SpecError(f"unknown interpolation {interp!r}")

        def fn(t: float) -> np.ndarray:
            x = t / step
            j = math.floor(x)
            a = table[j % p]
            if interp == "step":
                return a
            w = x - j
            return (1.0 - w) * a + w * table[(j + 1) % p]

        return cls(fn, d, "table", {"step": step, "mats": [m.tolist() for m in table], "interp": interp})

    @classmethod
    def diagonal_poly(cls, coeffs: Sequence[Sequence[float]]) -> "CoeffFn":
        """``A(t) = diag(p_1(t), ..., p_d(t))`` with ascending coefficient lists."""
        polys = [np.polynomial.Polynomial(np.asarray(c, dtype=float)) for c in coeffs]
        if not polys:
            raise SpecError("diagonal_poly needs at least one polynomial")
        return cls(lambda t: np.diag([p(t) for p in polys]), len(polys), "diagonal_poly", {"coeffs": [list(map(float, c)) for c in coeffs]})

    @classmethod
    def periodic_sine(cls, amp: float = 0.5, omega: float = 1.0) -> "CoeffFn":
        """``[[0, 1 + amp sin(omega t)], [-1, 0]]``: smooth, periodic, non-commuting in t."""
        return cls(
            lambda t: np.array([[0.0, 1.0 + amp * math.sin(omega * t)], [-1.0, 0.0]]),
            2,
            "periodic_sine",
            {"amp": amp, "omega": omega},
        )

    @classmethod
    def shifted_by_scalar(cls, base: "CoeffFn", lam: float) -> "CoeffFn":
        """``A(t) - lam * Id``."""
        eye = np.eye(base.dim)
        return cls(lambda t: base(t) - lam * eye, base.dim, "shifted", {"base": base.kind, "lambda": lam})


def rotation_propagator(omega: float, delta: float) -> np.ndarray:
    c, s = math.cos(omega * delta), math.sin(omega * delta)
    return np.array([[c, s], [-s, c]])


def diagonal_poly_propagator(coeffs: Sequence[Sequence[float]], t: float, s: float) -> np.ndarray:
    out = []
    for c in coeffs:
        integral = np.polynomial.Polynomial(np.asarray(c, dtype=float)).integ()
        out.append(math.exp(integral(t) - integral(s)))
    return np.diag(out)


class EvolutionGrid:
    """Stored one-step propagators and prefix products.

    ``Phi[i]`` is the product ``U_{i-1} ... U_0`` and ``Phi_inv[i]`` its inverse
    assembled from inverted steps, so ``Psi(t_i, t_j) = Phi[i] @ Phi_inv[j]``.
    """

    def __init__(self, coeff: CoeffFn, t0: float, h: float, steps: list[np.ndarray], phi: np.ndarray, phi_inv: np.ndarray):
        self.coeff = coeff
        self.t0 = float(t0)
        self.h = float(h)
        self.steps = steps
        self.phi = phi
        self.phi_inv = phi_inv
        self.n = len(steps)
        self.dim = coeff.dim
        self.eye = np.eye(self.dim)
        self.eye.setflags(write=False)

    @property
    def t1(self) -> float:
        return self.t0 + self.n * self.h

    def time_of(self, i: int) -> float:
        return self.t0 + i * self.h

    def times(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(self.n + 1)

    def index_of(self, t: float) -> int:
        x = (float(t) - self.t0) / self.h
        i = round(x)
        if abs(x - i) > 1e-6:
            raise GridRangeError(f"time {t} is not a grid point (step {self.h})")
        self._check_index(i)
        return int(i)

    def _check_index(self, i: int) -> None:
        if not 0 <= i <= self.n:
            raise GridRangeError(f"grid index {i} outside [0, {self.n}]")

    def psi_index(self, i: int, j: int) -> np.ndarray:
        self._check_index(i)
        self._check_index(j)
        if i == j:
            return self.eye
        return self.phi[i] @ self.phi_inv[j]

    def psi(self, u: float, v: float) -> np.ndarray:
        """``Psi(u, v)`` for grid times ``u, v``."""
        return self.psi_index(self.index_of(u), self.index_of(v))


def _rk4_step(A: CoeffFn, t: float, h: float) -> np.ndarray:
    """One classical RK4 step of U' = A(t) U from U = Id."""
    a1 = A(t)
    a2 = A(t + 0.5 * h)
    a4 = A(t + h)
    eye = np.eye(A.dim)
    k1 = a1
    k2 = a2 @ (eye + 0.5 * h * k1)
    k3 = a2 @ (eye + 0.5 * h * k2)
    k4 = a4 @ (eye + h * k3)
    return eye + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(A: CoeffFn, t0: float, t1: float, h: float = DEFAULT_H) -> EvolutionGrid:
    """Integrate ``U' = A(t) U`` with fixed-step RK4.

    The grid has ``ceil((t1 - t0)/h)`` steps, so its last point may sit slightly
    past ``t1`` when ``h`` does not divide the interval.
    """
    if not (h > 0 and math.isfinite(h)):
        raise SpecError("step h must be positive and finite")
    if not (t1 > t0):
        raise SpecError("need t1 > t0")
    ratio = (t1 - t0) / h
    if ratio > MAX_STEPS:
        raise SpecError(f"(t1 - t0)/h = {ratio:.3g} exceeds {MAX_STEPS}")
    n = max(1, math.ceil(ratio - 1e-9))
    d = A.dim
    steps: list[np.ndarray] = []
    phi = np.empty((n + 1, d, d))
    phi_inv = np.empty((n + 1, d, d))
    phi[0] = np.eye(d)
    phi_inv[0] = np.eye(d)
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n):
            u = _rk4_step(A, t0 + i * h, h)
            phi[i + 1] = u @ phi[i]
            if not (np.all(np.isfinite(u)) and np.all(np.isfinite(phi[i + 1]))):
                raise DivergenceError(f"non-finite propagator at step {i} (t = {t0 + i * h:g})", step=i)
            try:
                u_inv = try_inverse(u)
            except Exception as exc:
                raise DivergenceError(f"step propagator {i} is not invertible: {exc}", step=i) from exc
            phi_inv[i + 1] = phi_inv[i] @ u_inv
            if not np.all(np.isfinite(phi_inv[i + 1])):
                raise DivergenceError(f"non-finite inverse propagator at step {i}", step=i)
            steps.append(u)
    return EvolutionGrid(A, t0, h, steps, phi, phi_inv)


class Evolution:
    """``Psi(u, v) = Z(v, u - v)`` read back from a grid cotranslation."""

    def __init__(self, Z: "GridCotranslation"):
        self.Z = Z
        self.grid = Z.grid
        self.n = Z.grid.n
        self.dim = Z.dim

    def psi_index(self, i: int, j: int) -> np.ndarray:
        return self.Z(j, i - j)

    def psi(self, u: float, v: float) -> np.ndarray:
        return self.psi_index(self.grid.index_of(u), self.grid.index_of(v))


class GridCotranslation(Cotranslation):
    """Cotranslation ``Z(i, k) = Psi(t_{i+k}, t_i)`` over grid indices."""

    def __init__(self, source, grid: EvolutionGrid, kind: str = "FromEvolution"):
        self.source = source
        self.grid = grid

        def evaluate(i, k):
            if not (0 <= i <= grid.n and 0 <= i + k <= grid.n):
                raise GridRangeError(f"Z({i}, {k}) needs grid indices {i} and {i + k} inside [0, {grid.n}]")
            return source.psi_index(i + k, i)

        super().__init__(IntegerGroup(), grid.dim, evaluate, kind, {"t0": grid.t0, "h": grid.h, "n": grid.n})

    def at(self, r: float, t: float) -> np.ndarray:
        """``Z(r, t)`` for a grid time ``r`` and a duration ``t`` (multiple of h)."""
        i = self.grid.index_of(r)
        k = self.steps_of(t)
        return self(i, k)

    def steps_of(self, duration: float) -> int:
        x = duration / self.grid.h
        k = round(x)
        if abs(x - k) > 1e-6:
            raise GridRangeError(f"duration {duration} is not a multiple of the grid step {self.grid.h}")
        return int(k)


def cotranslation_of(E: EvolutionGrid) -> GridCotranslation:
    return GridCotranslation(E, E)


def evolution_of(Z: GridCotranslation) -> Evolution:
    return Evolution(Z)


# ---------------------------------------------------------------------------
# derivative checks


def _fd_steps(Z: GridCotranslation, h_fd: float) -> int:
    k = Z.steps_of(h_fd)
    if k < 1:
        raise GridRangeError(f"h_fd = {h_fd} is shorter than one grid step")
    return k


def infinitesimal_generator(Z: GridCotranslation, t: float, h_fd: float = DEFAULT_H_FD) -> np.ndarray:
    """Central difference ``(Z(t, h_fd) - Z(t, -h_fd)) / (2 h_fd)``."""
    i = Z.grid.index_of(t)
    k = _fd_steps(Z, h_fd)
    return (Z(i, k) - Z(i, -k)) / (2.0 * k * Z.grid.h)


class _Diffs:
    """Central differences of Z and Z^-1 at grid pairs ``(i, k)`` with offset ``s`` steps."""

    def __init__(self, Z: GridCotranslation, s: int):
        self.Z = Z
        self.s = s
        self.delta = 2.0 * s * Z.grid.h

    def d1(self, i, k):
        return (self.Z(i + self.s, k) - self.Z(i - self.s, k)) / self.delta

    def d2(self, i, k):
        return (self.Z(i, k + self.s) - self.Z(i, k - self.s)) / self.delta

    def d1_inv(self, i, k):
        return (self.Z.inv(i + self.s, k) - self.Z.inv(i - self.s, k)) / self.delta

    def d2_inv(self, i, k):
        return (self.Z.inv(i, k + self.s) - self.Z.inv(i, k - self.s)) / self.delta


def _identity_residuals(Z: GridCotranslation, s: int) -> dict[str, Callable]:
    D = _Diffs(Z, s)
    A = Z.grid.coeff

    def d1_split(loc):
        i, k = loc
        rhs = D.d2(i, k) - Z(i, k) @ D.d2(i, 0)
        return scaled(D.d1(i, k) - rhs, Z.norm(i, k))

    def d1_inverse(loc):
        i, k = loc
        zi = Z.inv(i, k)
        return scaled(D.d1_inv(i, k) + zi @ D.d1(i, k) @ zi, fro(zi), fro(zi))

    def d2_transport(loc):
        i, k = loc
        return scaled(D.d2(i, k) - D.d2(i + k, 0) @ Z(i, k), Z.norm(i, k))

    def d2_inverse(loc):
        i, k = loc
        zi = Z.inv(i, k)
        return scaled(D.d2_inv(i, k) + zi @ D.d2(i, k) @ zi, fro(zi), fro(zi))

    def evolution_backward(loc):
        # Psi(u, v) with v = t_i, u = t_{i+k}; Psi(u, v +- ds) = Z(i +- s, k -+ s)
        i, k = loc
        dpsi = (Z(i + s, k - s) - Z(i - s, k + s)) / D.delta
        return scaled(dpsi + Z(i, k) @ A(Z.grid.time_of(i)), Z.norm(i, k))

    return {
        "d1_split": d1_split,
        "d1_inverse": d1_inverse,
        "d2_transport": d2_transport,
        "d2_inverse": d2_inverse,
        "evolution_backward": evolution_backward,
    }


def _richardson_accept(floor: float, e_half: float) -> Callable[[float, float], bool]:
    lo, hi = RICHARDSON_BAND

    def accept(worst: float, tol: float) -> bool:
        if worst <= floor:
            return True
        if e_half == 0.0 or not math.isfinite(worst):
            return False
        return lo <= worst / e_half <= hi

    return accept


def _richardson_info(worst: float, e_half: float, floor: float, h_fd: float) -> dict:
    ratio = worst / e_half if e_half > 0 else math.inf
    mode = "roundoff" if worst <= floor else "richardson"
    return {"h_fd": h_fd, "residual_half": e_half, "ratio": ratio if math.isfinite(ratio) else "inf", "mode": mode}


def sample_pairs(Z: GridCotranslation, margin: int, count: int, seed: int = 0) -> list[tuple[int, int]]:
    """Seeded grid pairs ``(i, k)`` with ``i - margin``, ``i + k +- margin`` on the grid."""
    n = Z.grid.n
    if n < 4 * margin + 1:
        raise GridRangeError(f"grid with {n} steps too short for a finite-difference margin of {margin}")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        i = int(rng.integers(2 * margin, n - 2 * margin + 1))
        j = int(rng.integers(2 * margin, n - 2 * margin + 1))
        out.append((i, j - i))
    return out


def derivative_identity_laws(
    Z: GridCotranslation,
    points: Sequence[tuple[int, int]],
    h_fd: float = DEFAULT_H_FD,
    floor: float = ROUNDOFF_FLOOR,
) -> list[Law]:
    """One law per identity, swept at ``h_fd`` and judged against ``h_fd / 2``.

    An identity passes when its residual is already at the roundoff ``floor``
    (the discrete identity is then exact) or when halving the difference step
    shrinks the residual by a factor inside the second-order band.
    """
    s = _fd_steps(Z, h_fd)
    if s % 2:
        raise GridRangeError("h_fd must span an even number of grid steps so that h_fd/2 is on the grid")
    full = _identity_residuals(Z, s)
    half = _identity_residuals(Z, s // 2)
    points = list(points)
    laws = []
    for name, fn in full.items():
        e_half = Law(name, half[name], points, floor).sweep().max_residual
        worst = Law(name, fn, points, floor).sweep().max_residual
        laws.append(
            Law(
                name,
                fn,
                points,
                floor,
                accept=_richardson_accept(floor, e_half),
                info=_richardson_info(worst, e_half, floor, h_fd),
            )
        )
    return laws


def check_derivative_identities(
    Z: GridCotranslation,
    points: Sequence[tuple[int, int]] | None = None,
    h_fd: float = DEFAULT_H_FD,
    floor: float = ROUNDOFF_FLOOR,
    count: int = 20,
    seed: int = 0,
) -> VerificationReport:
    if points is None:
        points = sample_pairs(Z, _fd_steps(Z, h_fd), count, seed)
    return run_laws(derivative_identity_laws(Z, points, h_fd, floor), {"h_fd": h_fd})


def generator_laws(
    Z: GridCotranslation,
    indices: Sequence[int],
    h_fd: float = DEFAULT_H_FD,
    tol: float = 5e-4,
    floor: float = ROUNDOFF_FLOOR,
) -> list[Law]:
    """Recovered generator against the coefficient, plus its Richardson ratio."""
    s = _fd_steps(Z, h_fd)
    A = Z.grid.coeff
    h = Z.grid.h

    def err(step: int):
        return lambda i: fro((Z(i, step) - Z(i, -step)) / (2.0 * step * h) - A(Z.grid.time_of(i)))

    indices = list(indices)
    main = Law("generator", err(s), indices, tol)
    laws = [main]
    if s % 2 == 0:
        worst = main.sweep().max_residual
        e_half = Law("generator", err(s // 2), indices, tol).sweep().max_residual
        laws.append(
            Law(
                "generator_richardson",
                err(s),
                indices,
                floor,
                accept=_richardson_accept(floor, e_half),
                info=_richardson_info(worst, e_half, floor, h_fd),
            )
        )
    return laws


def psi_cocycle_law(E, count: int = 200, seed: int = 0, tol: float = 1e-9) -> Law:
    """``||Psi(u,v) Psi(v,w) - Psi(u,w)||_F / max(1, ||Psi(u,v)|| ||Psi(v,w)||)`` on seeded grid triples."""
    rng = np.random.default_rng(seed)
    locs = [tuple(int(x) for x in rng.integers(0, E.n + 1, size=3)) for _ in range(count)]

    def residual(loc):
        u, v, w = loc
        a, b = E.psi_index(u, v), E.psi_index(v, w)
        return scaled(a @ b - E.psi_index(u, w), fro(a), fro(b))

    return Law("evolution_cocycle", residual, locs, tol)


def psi_unit_law(E, tol: float = 0.0) -> Law:
    eye = np.eye(E.dim)
    return Law("evolution_unit", lambda i: fro(E.psi_index(i, i) - eye), list(range(E.n + 1)), tol)


def closed_form_law(E: EvolutionGrid, oracle: Callable[[float, float], np.ndarray], count: int = 200, seed: int = 0, tol: float = 1e-6) -> Law:
    """Max entry deviation of ``Psi(t, s)`` from ``oracle(t, s)`` on seeded grid pairs."""
    rng = np.random.default_rng(seed)
    locs = [tuple(int(x) for x in rng.integers(0, E.n + 1, size=2)) for _ in range(count)]

    def residual(loc):
        i, j = loc
        return float(np.max(np.abs(E.psi_index(i, j) - oracle(E.time_of(i), E.time_of(j)))))

    return Law("closed_form", residual, locs, tol)


def closed_form_oracle(A: CoeffFn) -> Callable[[float, float], np.ndarray] | None:
    if A.kind == "rotation":
        omega = A.meta["omega"]
        return lambda t, s: rotation_propagator(omega, t - s)
    if A.kind == "diagonal_poly":
        coeffs = A.meta["coeffs"]
        return lambda t, s: diagonal_poly_propagator(coeffs, t, s)
    if A.kind == "constant":
        a = np.asarray(A.meta["matrix"])
        if np.count_nonzero(a - np.diag(np.diag(a))) == 0:
            diag = np.diag(a)
            return lambda t, s: np.diag(np.exp(diag * (t - s)))
        if not a.any():
            return lambda t, s: np.eye(A.dim)
    return None


def two_variable_differentiability_probe(
    Z: GridCotranslation,
    points: Sequence[tuple[int, int]],
    h_fd: float = DEFAULT_H_FD,
    directions: int = 4,
) -> dict:
    """Linearization error of ``Z`` along diagonal rays, at ``h_fd`` and ``h_fd/2``.

    For a jointly differentiable Z the error is second order, so halving the
    step divides it by about 4.  A ratio below 3 is flagged.  Informational only.
    """
    s = _fd_steps(Z, h_fd)
    h = Z.grid.h
    rays = [(1, 0), (0, 1), (1, 1), (1, -1)][:directions]

    def lin_error(step: int) -> tuple[float, tuple]:
        D = _Diffs(Z, step)
        worst, where = 0.0, None
        for i, k in points:
            base = Z(i, k)
            d1, d2 = D.d1(i, k), D.d2(i, k)
            for a, b in rays:
                # Z(r + a*dr, t + b*dr), expressed in grid indices
                moved = Z(i + a * step, k + b * step)
                err = fro(moved - base - (a * step * h) * d1 - (b * step * h) * d2) / max(1.0, fro(base))
                if err > worst:
                    worst, where = err, (i, k, a, b)
        return worst, where

    e1, where = lin_error(s)
    e2, _ = lin_error(max(1, s // 2))
    ratio = e1 / e2 if e2 > 0 else math.inf
    flagged = e1 > ROUNDOFF_FLOOR and ratio < 3.0
    return {
        "probe": "two_variable_differentiability",
        "max_residual": e1,
        "residual_half": e2,
        "ratio": ratio if math.isfinite(ratio) else "inf",
        "argmax": where,
        "flagged": bool(flagged),
    }


def write_csv(E: EvolutionGrid, path, every: int = 1) -> None:
    """Rows ``t, Psi(t, t0)`` flattened row-major."""
    d = E.dim
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"psi_{a}{b}" for a in range(d) for b in range(d)])
        for i in range(0, E.n + 1, max(1, every)):
            m = E.psi_index(i, 0)
            w.writerow([repr(E.time_of(i))] + [repr(float(x)) for x in m.ravel()])


def solution_ode_residual(E: EvolutionGrid, v_index: int, xi, h_fd: float = DEFAULT_H_FD, indices: Iterable[int] | None = None) -> tuple[float, float]:
    """``(max ||dpsi/du - A(u) psi||, ||psi(v) - xi||)`` for ``psi(u) = Psi(u, v) xi``."""
    s = round(h_fd / E.h)
    xi = np.asarray(xi, dtype=float)
    if indices is None:
        indices = range(s, E.n - s + 1, max(1, (E.n - 2 * s) // 50))
    worst = 0.0
    for i in indices:
        dpsi = (E.psi_index(i + s, v_index) @ xi - E.psi_index(i - s, v_index) @ xi) / (2 * s * E.h)
        worst = max(worst, float(np.linalg.norm(dpsi - E.coeff(E.time_of(i)) @ (E.psi_index(i, v_index) @ xi))))
    return worst, float(np.linalg.norm(E.psi_index(v_index, v_index) @ xi - xi))
