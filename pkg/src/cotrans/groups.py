"""Groups with an exactly computable normal form.

Elements are plain hashable Python values:

* ``IntegerGroup`` (Z): ``int``
* ``LatticeGroup`` (Z^k): ``tuple`` of ``k`` ints
* ``FreeGroup`` (F_n): freely reduced ``tuple`` of nonzero ints; ``i`` is the
  i-th generator and ``-i`` its inverse, read left to right
* ``FiniteGroup``: ``int`` index into the multiplication table

Words in generators (relations, ``word_of``) use the same signed-letter
encoding for every group.  A word ``(l1, l2, ..., lm)`` denotes the product
``l1 l2 ... lm``, so ``lm`` acts first on a base point.
"""

from __future__ import annotations

import itertools
from abc import ABC, abstractmethod
from collections import deque
from typing import Callable, Hashable, Sequence

import numpy as np

from .errors import GroupError, SpecError
from .linalg import fro, try_inverse
from .report import Law, VerificationReport, run_laws

Element = Hashable
Word = tuple[int, ...]

# composition refuses results beyond this magnitude instead of silently growing
MAX_ABS = 2**60


def reduce_word(letters: Sequence[int]) -> Word:
    """Cancel adjacent ``x x^-1`` pairs until none remain."""
    stack: list[int] = []
    for a in letters:
        if stack and stack[-1] == -a:
            stack.pop()
        else:
            stack.append(a)
    return tuple(stack)


class Group(ABC):
    kind: str
    ngens: int
    relations: tuple[Word, ...] = ()

    @abstractmethod
    def identity(self) -> Element: ...

    @abstractmethod
    def contains(self, g) -> bool: ...

    @abstractmethod
    def _compose(self, g, h) -> Element: ...

    @abstractmethod
    def _inverse(self, g) -> Element: ...

    @abstractmethod
    def generator(self, i: int) -> Element:
        """The generator with 1-based index ``i``."""

    @abstractmethod
    def word_of(self, g) -> Word:
        """A word in the generators that evaluates to ``g``."""

    @abstractmethod
    def sample_window(self, radius: int, seed: int = 0) -> list: ...

    def check(self, g) -> None:
        if not self.contains(g):
            raise GroupError(f"{g!r} is not an element of {self}")

    def compose(self, g, h) -> Element:
        self.check(g)
        self.check(h)
        return self._compose(g, h)

    def inverse(self, g) -> Element:
        self.check(g)
        return self._inverse(g)

    def letter(self, a: int) -> Element:
        if a == 0 or abs(a) > self.ngens:
            raise SpecError(f"letter {a} references an undefined generator (group has {self.ngens})")
        x = self.generator(abs(a))
        return x if a > 0 else self._inverse(x)

    def evaluate_word(self, word: Sequence[int]) -> Element:
        out = self.identity()
        for a in word:
            out = self._compose(out, self.letter(a))
        return out

    def to_json(self) -> dict:
        return {"kind": self.kind}


def _check_int(x, what="element") -> int:
    if isinstance(x, bool) or not isinstance(x, (int, np.integer)):
        raise GroupError(f"{what} must be an integer, got {x!r}")
    return int(x)


def _check_range(v: int) -> int:
    if abs(v) > MAX_ABS:
        raise SpecError(f"integer {v} exceeds the supported range +-2^60")
    return v


class IntegerGroup(Group):
    kind = "Z"
    ngens = 1
    relations = ()

    def __repr__(self) -> str:
        return "Z"

    def __eq__(self, other) -> bool:
        return isinstance(other, IntegerGroup)

    def __hash__(self) -> int:
        return hash("Z")

    def identity(self) -> int:
        return 0

    def contains(self, g) -> bool:
        return isinstance(g, (int, np.integer)) and not isinstance(g, bool)

    def _compose(self, g, h) -> int:
        return _check_range(int(g) + int(h))

    def _inverse(self, g) -> int:
        return -int(g)

    def generator(self, i: int) -> int:
        if i != 1:
            raise SpecError(f"Z has a single generator, got index {i}")
        return 1

    def word_of(self, g) -> Word:
        self.check(g)
        return (1,) * g if g >= 0 else (-1,) * (-g)

    def sample_window(self, radius: int, seed: int = 0) -> list[int]:
        radius = _window_radius(radius)
        return list(range(-radius, radius + 1))


class LatticeGroup(Group):
    """Z^k with generators the unit vectors and commutator relations."""

    kind = "Zk"

    def __init__(self, k: int, relations: Sequence[Sequence[int]] | None = None):
        if k < 1:
            raise SpecError("Zk needs k >= 1")
        self.k = k
        self.ngens = k
        if relations is None:
            relations = [(i, j, -i, -j) for i in range(1, k + 1) for j in range(i + 1, k + 1)]
        self.relations = tuple(tuple(int(a) for a in r) for r in relations)
        for r in self.relations:
            if self.evaluate_word(r) != self.identity():
                raise SpecError(f"relation {r} is not the identity in Z^{k}")

    def __repr__(self) -> str:
        return f"Z^{self.k}"

    def __eq__(self, other) -> bool:
        return isinstance(other, LatticeGroup) and other.k == self.k

    def __hash__(self) -> int:
        return hash(("Zk", self.k))

    def identity(self) -> tuple[int, ...]:
        return (0,) * self.k

    def contains(self, g) -> bool:
        return (
            isinstance(g, tuple)
            and len(g) == self.k
            and all(isinstance(x, (int, np.integer)) and not isinstance(x, bool) for x in g)
        )

    def _compose(self, g, h):
        return tuple(_check_range(int(a) + int(b)) for a, b in zip(g, h))

    def _inverse(self, g):
        return tuple(-int(a) for a in g)

    def generator(self, i: int):
        if not 1 <= i <= self.k:
            raise SpecError(f"generator index {i} out of range for Z^{self.k}")
        return tuple(1 if j == i - 1 else 0 for j in range(self.k))

    def word_of(self, g) -> Word:
        # xi_k^{a_k} ... xi_1^{a_1}: xi_1 acts first
        self.check(g)
        word: list[int] = []
        for i in range(self.k, 0, -1):
            a = g[i - 1]
            word.extend([i] * a if a >= 0 else [-i] * (-a))
        return tuple(word)

    def sample_window(self, radius: int, seed: int = 0) -> list[tuple[int, ...]]:
        radius = _window_radius(radius)
        return [tuple(v) for v in itertools.product(range(-radius, radius + 1), repeat=self.k)]

    def to_json(self) -> dict:
        return {"kind": "Zk", "k": self.k}


class FreeGroup(Group):
    kind = "free"

    def __init__(self, n: int, random_words: int = 16):
        if n < 1:
            raise SpecError("free group needs n >= 1")
        self.ngens = n
        self.relations = ()
        self.random_words = random_words

    def __repr__(self) -> str:
        return f"F_{self.ngens}"

    def __eq__(self, other) -> bool:
        return isinstance(other, FreeGroup) and other.ngens == self.ngens

    def __hash__(self) -> int:
        return hash(("free", self.ngens))

    def identity(self) -> Word:
        return ()

    def contains(self, g) -> bool:
        if not isinstance(g, tuple):
            return False
        for a in g:
            if isinstance(a, bool) or not isinstance(a, (int, np.integer)) or a == 0 or abs(a) > self.ngens:
                return False
        return all(g[i] != -g[i + 1] for i in range(len(g) - 1))

    def _compose(self, g, h) -> Word:
        return reduce_word(tuple(g) + tuple(h))

    def _inverse(self, g) -> Word:
        return tuple(-a for a in reversed(g))

    def generator(self, i: int) -> Word:
        if not 1 <= i <= self.ngens:
            raise SpecError(f"generator index {i} out of range for F_{self.ngens}")
        return (i,)

    def word_of(self, g) -> Word:
        self.check(g)
        return tuple(g)

    def _letters(self) -> list[int]:
        out = []
        for i in range(1, self.ngens + 1):
            out += [i, -i]
        return out

    def ball(self, length: int) -> list[Word]:
        """All reduced words of length <= ``length`` in shortlex order."""
        letters = self._letters()
        out: list[Word] = [()]
        layer: list[Word] = [()]
        for _ in range(length):
            nxt = [w + (a,) for w in layer for a in letters if not w or w[-1] != -a]
            out.extend(nxt)
            layer = nxt
        return out

    def sample_window(self, radius: int, seed: int = 0) -> list[Word]:
        radius = _window_radius(radius)
        exhaustive = min(radius, 4)
        out = self.ball(exhaustive)
        if radius <= exhaustive:
            return out
        seen = set(out)
        rng = np.random.default_rng(seed)
        letters = self._letters()
        for _ in range(self.random_words):
            length = int(rng.integers(exhaustive + 1, radius + 1))
            w: list[int] = []
            while len(w) < length:
                a = letters[int(rng.integers(len(letters)))]
                if not w or w[-1] != -a:
                    w.append(a)
            t = tuple(w)
            if t not in seen:
                seen.add(t)
                out.append(t)
        return out

    def to_json(self) -> dict:
        return {"kind": "free", "n": self.ngens}


class FiniteGroup(Group):
    """A finite group given by its multiplication table ``table[g][h] = gh``."""

    kind = "finite"

    def __init__(
        self,
        table: Sequence[Sequence[int]],
        generators: Sequence[int] | None = None,
        relations: Sequence[Sequence[int]] = (),
    ):
        t = np.asarray(table, dtype=int)
        n = t.shape[0]
        if t.ndim != 2 or t.shape != (n, n) or n == 0:
            raise SpecError("multiplication table must be a non-empty square array")
        perm = np.arange(n)
        for row in range(n):
            if not np.array_equal(np.sort(t[row]), perm) or not np.array_equal(np.sort(t[:, row]), perm):
                raise SpecError("multiplication table is not a Latin square")
        ids = [e for e in range(n) if np.array_equal(t[e], perm) and np.array_equal(t[:, e], perm)]
        if len(ids) != 1:
            raise SpecError("multiplication table has no two-sided identity")
        self.table = t
        self.order = n
        self.e = ids[0]
        self.inv = np.array([int(np.flatnonzero(t[g] == self.e)[0]) for g in range(n)])
        for g, h, k in itertools.product(range(n), repeat=3):
            if t[t[g, h], k] != t[g, t[h, k]]:
                raise SpecError(f"multiplication table is not associative at {(g, h, k)}")
        if generators is None:
            generators = [g for g in range(n) if g != self.e]
        self.generators = tuple(int(g) for g in generators)
        for g in self.generators:
            if not 0 <= g < n:
                raise SpecError(f"generator {g} is not a table index")
        self.ngens = len(self.generators)
        self._words = self._shortest_words()
        self.relations = tuple(tuple(int(a) for a in r) for r in relations)
        for r in self.relations:
            if self.evaluate_word(r) != self.e:
                raise SpecError(f"relation {r} does not evaluate to the identity")

    def __repr__(self) -> str:
        return f"FiniteGroup(order={self.order})"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FiniteGroup)
            and np.array_equal(other.table, self.table)
            and other.generators == self.generators
        )

    def __hash__(self) -> int:
        return hash(("finite", self.table.tobytes(), self.generators))

    def _shortest_words(self) -> dict[int, Word]:
        words: dict[int, Word] = {self.e: ()}
        queue = deque([self.e])
        letters = []
        for i in range(1, self.ngens + 1):
            letters += [i, -i]
        while queue:
            g = queue.popleft()
            for a in letters:
                # prepend: the new letter acts last
                x = self.letter(a)
                y = int(self.table[x, g])
                if y not in words:
                    words[y] = (a,) + words[g]
                    queue.append(y)
        if len(words) != self.order:
            raise SpecError("generators do not generate the whole finite group")
        return words

    def identity(self) -> int:
        return self.e

    def contains(self, g) -> bool:
        return isinstance(g, (int, np.integer)) and not isinstance(g, bool) and 0 <= g < self.order

    def _compose(self, g, h) -> int:
        return int(self.table[g, h])

    def _inverse(self, g) -> int:
        return int(self.inv[g])

    def generator(self, i: int) -> int:
        if not 1 <= i <= self.ngens:
            raise SpecError(f"generator index {i} out of range ({self.ngens} generators)")
        return self.generators[i - 1]

    def word_of(self, g) -> Word:
        self.check(g)
        return self._words[int(g)]

    def sample_window(self, radius: int, seed: int = 0) -> list[int]:
        _window_radius(radius)
        return list(range(self.order))

    def to_json(self) -> dict:
        return {
            "kind": "finite",
            "table": self.table.tolist(),
            "generators": list(self.generators),
            "relations": [list(r) for r in self.relations],
        }


def cyclic_group(n: int) -> FiniteGroup:
    return FiniteGroup([[(i + j) % n for j in range(n)] for i in range(n)], generators=[1 % n], relations=[(1,) * n])


def _window_radius(radius) -> int:
    radius = _check_int(radius, "radius")
    if radius < 1:
        raise SpecError("window radius must be >= 1")
    # products of two window elements stay far inside the integer range
    if radius > 2**58:
        raise SpecError("window radius too large: products could exceed +-2^60")
    return radius


def group_from_json(spec: dict) -> Group:
    kind = spec.get("kind")
    if kind == "Z":
        return IntegerGroup()
    if kind == "Zk":
        return LatticeGroup(int(spec["k"]), spec.get("relations"))
    if kind == "free":
        return FreeGroup(int(spec["n"]))
    if kind == "finite":
        return FiniteGroup(spec["table"], spec.get("generators"), spec.get("relations", ()))
    raise SpecError(f"unknown group kind {kind!r}")


def letter_matrix(
    group: Group,
    maps: Sequence[Callable[[Element], np.ndarray]],
    a: int,
    point: Element,
    inverse: Callable[[np.ndarray], np.ndarray] = try_inverse,
) -> np.ndarray:
    """Matrix carrying x(point) to x(letter * point).

    ``a > 0``: ``A_a(point)``.  ``a < 0``: ``A_{|a|}(xi^-1 point)^{-1}``.
    """
    i = abs(a)
    if a == 0 or i > len(maps):
        raise SpecError(f"letter {a} references an undefined generator ({len(maps)} maps)")
    if a > 0:
        return maps[i - 1](point)
    back = group._compose(group.letter(a), point)
    return inverse(maps[i - 1](back))


def relation_product(group: Group, maps, word: Sequence[int], eta) -> np.ndarray:
    """Ordered product of the letter matrices of ``word`` starting at ``eta``."""
    d = maps[0](eta).shape[0]
    acc = np.eye(d)
    point = eta
    for a in reversed(word):
        acc = letter_matrix(group, maps, a, point) @ acc
        point = group._compose(group.letter(a), point)
    return acc


def relations_law(group: Group, maps, window: Sequence, tol: float = 1e-10, relations=None) -> Law:
    relations = group.relations if relations is None else tuple(relations)
    if not relations:
        raise SpecError(f"{group} carries no relation list")
    for r in relations:
        for a in r:
            if a == 0 or abs(a) > len(maps):
                raise SpecError(f"relation {r} references undefined generator {a}")
    locations = [(j, eta) for j in range(len(relations)) for eta in window]

    def residual(loc) -> float:
        j, eta = loc
        prod = relation_product(group, maps, relations[j], eta)
        return fro(prod - np.eye(prod.shape[0]))

    return Law("relations", residual, locations, tol, info={"relations": [list(r) for r in relations]})


def check_preserves_relations(group: Group, maps, window: Sequence, tol: float = 1e-10) -> VerificationReport:
    """Residual ``||prod - Id||`` for every relation word and base point in ``window``."""
    return run_laws([relations_law(group, maps, window, tol)])
