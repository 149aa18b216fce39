"""
Finite-depth final-coalgebra semantics for systems of type ``X -> B x X^A``.

A system is given by a step function returning an observation and one
successor per letter.  Its behaviour assigns to every word ``u`` the
observation made after running ``u`` letter by letter from the start state.
Words are strings of single-character letters; the empty word is ``""``.
"""

from __future__ import annotations

from collections.abc import Callable, Hashable, Iterable, Iterator, Mapping
from dataclasses import dataclass
from itertools import product
from typing import Any

from .errors import ValidationError

EPSILON = ""
EPSILON_TOKEN = "ε"  # how the empty word is written in CSV/JSON tables


def word_to_token(word: str) -> str:
    return word if word else EPSILON_TOKEN


def token_to_word(token: str) -> str:
    return "" if token == EPSILON_TOKEN else token


def words(alphabet: Iterable[str], depth: int) -> Iterator[str]:
    """All words of length ``<= depth``, shortlex order over sorted letters."""
    letters = sorted(alphabet)
    for n in range(depth + 1):
        for w in product(letters, repeat=n):
            yield "".join(w)


def word_count(n_letters: int, depth: int) -> int:
    if n_letters == 1:
        return depth + 1
    return (n_letters ** (depth + 1) - 1) // (n_letters - 1)


@dataclass(frozen=True)
class ObservedSystem:
    """
    A coalgebra ``x -> (observation, {letter: successor})``.

    ``step`` must be pure and total on every state reachable from the states
    it is used with.
    """

    step: Callable[[Any], tuple[Any, Mapping[str, Any]]]
    alphabet: tuple[str, ...]

    def __post_init__(self):
        letters = tuple(sorted(self.alphabet))
        if any(not isinstance(a, str) or len(a) != 1 for a in letters):
            raise ValidationError(f"letters must be single characters: {letters}")
        if EPSILON_TOKEN in letters:
            raise ValidationError(f"{EPSILON_TOKEN!r} is reserved for the empty word")
        if len(set(letters)) != len(letters):
            raise ValidationError(f"duplicate letters in alphabet: {letters}")
        object.__setattr__(self, "alphabet", letters)


def unfold(system: ObservedSystem, x: Hashable | Any, depth: int) -> dict[str, Any]:
    """
    Behaviour of ``x`` up to words of length ``depth``.

    Computed level by level: each word's state is obtained from its prefix's
    state by one more step, so every prefix is stepped exactly once.  The
    returned dict iterates in shortlex order.
    """
    if depth < 0:
        raise ValidationError(f"depth must be >= 0, got {depth}")
    table: dict[str, Any] = {}
    level = [(EPSILON, x)]
    for n in range(depth + 1):
        nxt = []
        for word, state in level:
            obs, succ = system.step(state)
            table[word] = obs
            if n < depth:
                for a in system.alphabet:
                    nxt.append((word + a, succ[a]))
        level = nxt
    return {w: table[w] for w in words(system.alphabet, depth)}


def derivative(table: Mapping[str, Any], letter: str) -> dict[str, Any]:
    """The ``letter``-derivative of a behaviour table: ``u -> table[letter + u]``."""
    return {w[1:]: v for w, v in table.items() if w.startswith(letter)}
