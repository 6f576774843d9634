"""Seeded instances shared by the tests, the acceptance suite and the CLI."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cotranslation import Cotranslation, DifferenceSeq, from_difference_seq, from_morphism
from .groups import IntegerGroup, LatticeGroup
from .linalg import condition_number
from .partial import PartialCotranslation, ProjectorMap, conjugated_constant_projector, restrict

Z1 = IntegerGroup()


def diag_pow_morphism(base, group=Z1):
    """``n -> diag(base_i ** n)``; on Z^k the exponent is the first coordinate."""
    base = np.asarray(base, dtype=float)

    def gamma(n):
        m = n if isinstance(n, int) else n[0]
        return np.diag(base**m)

    return gamma


def counterexample() -> PartialCotranslation:
    """``W(m, n) = diag(0, 2^n)`` over Z."""
    return PartialCotranslation(Z1, 2, lambda m, n: np.diag([0.0, 2.0**n]), "Explicit", {"family": "counterexample"})


def alternating_projector() -> ProjectorMap:
    """``diag(0, 1)`` at even n and Id at odd n: invariant for the counterexample, rank 1 or 2."""
    even = np.diag([0.0, 1.0])
    odd = np.eye(2)
    return ProjectorMap(Z1, 2, lambda n: even if n % 2 == 0 else odd, "alternating")


def diag_partial(base, mask) -> PartialCotranslation:
    """``W(m, n) = diag(mask_i * base_i ** n)``."""
    base = np.asarray(base, dtype=float)
    mask = np.asarray(mask, dtype=float)
    return PartialCotranslation(Z1, len(base), lambda m, n: np.diag(mask * base**n), "Explicit", {"family": "diag_pow", "base": base.tolist(), "mask": mask.tolist()})


def commuting_maps():
    a1, a2 = np.diag([2.0, 1.0]), np.diag([1.0, 3.0])
    return [lambda eta: a1, lambda eta: a2]


def noncommuting_maps():
    a1 = np.array([[1.0, 1.0], [0.0, 1.0]])
    a2 = np.array([[1.0, 0.0], [1.0, 1.0]])
    return [lambda eta: a1, lambda eta: a2]


def random_well_conditioned(rng: np.random.Generator, dim: int, cond_max: float) -> np.ndarray:
    while True:
        s = rng.uniform(-1.0, 1.0, size=(dim, dim))
        if condition_number(s) <= cond_max:
            return s


def random_idempotent(rng: np.random.Generator, dim: int, rank: int, cond_max: float = 10.0) -> np.ndarray:
    """Oblique projector ``S diag(Id_rank, 0) S^-1``."""
    s = random_well_conditioned(rng, dim, cond_max)
    block = np.zeros((dim, dim))
    block[:rank, :rank] = np.eye(rank)
    return s @ block @ np.linalg.solve(s, np.eye(dim))


@dataclass
class RandomPartial:
    seed: int
    dim: int
    rank: int
    Z: Cotranslation
    p0: np.ndarray
    P: ProjectorMap
    W: PartialCotranslation


def random_partial(seed: int, dim: int | None = None, rank: int | None = None, cond_max: float = 10.0, window_radius: int = 3) -> RandomPartial:
    """``restrict(Z, P)`` with Z from a random difference sequence and ``P(g) = Z(e, g) P0 Z(g, g^-1)``."""
    rng = np.random.default_rng([seed, 7919])
    if dim is None:
        dim = int(rng.integers(2, 6))
    if rank is None:
        rank = int(rng.integers(1, dim))
    A = DifferenceSeq.random(dim, seed, cond_max=cond_max)
    Z = from_difference_seq(A)
    p0 = random_idempotent(rng, dim, rank, cond_max)
    P = conjugated_constant_projector(Z, p0)
    W = restrict(Z, P, Z1.sample_window(window_radius))
    return RandomPartial(seed, dim, rank, Z, p0, P, W)


def random_autonomous(seed: int, dim: int | None = None, group=Z1) -> Cotranslation:
    """``from_morphism`` of ``n -> A0^n`` with a random well-conditioned A0 (Z only)."""
    rng = np.random.default_rng([seed, 104729])
    if dim is None:
        dim = int(rng.integers(2, 5))
    a0 = random_well_conditioned(rng, dim, 10.0)
    a0 = a0 / max(abs(np.linalg.eigvals(a0)))
    A = DifferenceSeq.constant(a0)
    Zd = from_difference_seq(A)
    return from_morphism(group, lambda n: Zd(0, n), dim=dim)


def rotating_projector(theta_step: float = 0.05, offset: float = 0.1) -> ProjectorMap:
    """Orthogonal rank-1 projector onto ``(cos t, sin t)`` with ``t = offset + n*theta_step``."""

    def fn(n):
        t = offset + n * theta_step
        v = np.array([math.cos(t), math.sin(t)])
        return np.outer(v, v)

    return ProjectorMap(Z1, 2, fn, "rotating")


def lattice_diag(k: int = 2) -> LatticeGroup:
    return LatticeGroup(k)
