"""
Deterministic automata as coalgebras ``X -> 2 x X^A``.

The language of a state is its image in the final coalgebra of all
languages.  Minimization closes the initial state under transitions and then
merges language-equivalent states by Hopcroft partition refinement; the
result is the subautomaton of the final coalgebra generated by the
language, with canonical state names.
"""

from __future__ import annotations

import json
from collections import deque
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

from .behaviour import EPSILON_TOKEN, ObservedSystem, words
from .errors import ValidationError


@dataclass(frozen=True)
class Dfa:
    states: tuple[str, ...]
    alphabet: tuple[str, ...]
    delta: Mapping[str, Mapping[str, str]]
    accepting: frozenset[str]
    initial: str | None = None

    def __post_init__(self):
        states = tuple(self.states)
        letters = tuple(sorted(self.alphabet))
        if len(set(states)) != len(states):
            raise ValidationError("duplicate state ids")
        if len(set(letters)) != len(letters):
            raise ValidationError("duplicate letters")
        for a in letters:
            if not isinstance(a, str) or len(a) != 1 or a == EPSILON_TOKEN:
                raise ValidationError(f"letters must be single characters, got {a!r}")
        known = set(states)
        delta = {}
        for x in states:
            row = self.delta.get(x)
            if row is None:
                raise ValidationError(f"delta has no row for state {x!r}")
            for a in letters:
                if a not in row:
                    raise ValidationError(f"delta is not total: missing ({x!r}, {a!r})")
                if row[a] not in known:
                    raise ValidationError(f"delta({x!r}, {a!r}) = {row[a]!r} is not a state")
            extra = set(row) - set(letters)
            if extra:
                raise ValidationError(f"delta row {x!r} uses unknown letters {sorted(extra)}")
            delta[x] = {a: row[a] for a in letters}
        unknown = set(self.delta) - known
        if unknown:
            raise ValidationError(f"delta mentions unknown states {sorted(unknown)}")
        accepting = frozenset(self.accepting)
        if not accepting <= known:
            raise ValidationError(f"accepting states {sorted(accepting - known)} are not states")
        if self.initial is not None and self.initial not in known:
            raise ValidationError(f"initial state {self.initial!r} is not a state")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "alphabet", letters)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "accepting", accepting)

    def as_system(self) -> ObservedSystem:
        """The automaton as a coalgebra with boolean observations."""
        return ObservedSystem(lambda x: (x in self.accepting, self.delta[x]), self.alphabet)

    def to_dict(self) -> dict:
        out = {
            "states": list(self.states),
            "alphabet": list(self.alphabet),
            "delta": {x: dict(self.delta[x]) for x in self.states},
            "accepting": [x for x in self.states if x in self.accepting],
        }
        if self.initial is not None:
            out["initial"] = self.initial
        return out

    @classmethod
    def from_dict(cls, obj: Mapping) -> Dfa:
        try:
            return cls(
                states=tuple(obj["states"]),
                alphabet=tuple(obj["alphabet"]),
                delta=obj["delta"],
                accepting=frozenset(obj["accepting"]),
                initial=obj.get("initial"),
            )
        except KeyError as exc:
            raise ValidationError(f"dfa: missing field {exc}") from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> Dfa:
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class LanguagePrefix:
    """The words of length ``<= depth`` accepted from some state."""

    depth: int
    accepted: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        too_long = [w for w in self.accepted if len(w) > self.depth]
        if too_long:
            raise ValidationError(f"words longer than depth {self.depth}: {too_long[:3]}")


def _check_state(d: Dfa, x: str):
    if x not in d.delta:
        raise ValidationError(f"unknown state {x!r}")


def run(d: Dfa, x: str, u: str) -> str:
    """Extended transition: ``run(x, "") = x``, ``run(x, a u) = run(delta(x, a), u)``."""
    _check_state(d, x)
    for a in u:
        try:
            x = d.delta[x][a]
        except KeyError:
            raise ValidationError(f"letter {a!r} not in alphabet {d.alphabet}") from None
    return x


def accepts(d: Dfa, x: str, u: str) -> bool:
    return run(d, x, u) in d.accepting


def reachable_subcoalgebra(d: Dfa, seed: Iterable[str]) -> Dfa:
    """Smallest sub-automaton containing ``seed`` and closed under transitions."""
    seed = list(seed)
    for x in seed:
        _check_state(d, x)
    seen = set(seed)
    queue = deque(seed)
    while queue:
        x = queue.popleft()
        for a in d.alphabet:
            y = d.delta[x][a]
            if y not in seen:
                seen.add(y)
                queue.append(y)
    states = tuple(x for x in d.states if x in seen)
    initial = d.initial if d.initial in seen else None
    return Dfa(
        states,
        d.alphabet,
        {x: d.delta[x] for x in states},
        d.accepting & seen,
        initial,
    )


def language_prefix(d: Dfa, x: str, depth: int) -> LanguagePrefix:
    """Accepted words of length ``<= depth``.

    Words are grouped by the state they reach, so each level costs one
    concatenation per word rather than one step of the automaton.
    """
    _check_state(d, x)
    if depth < 0:
        raise ValidationError(f"depth must be >= 0, got {depth}")
    accepted: list[str] = []
    level = {x: [""]}
    for n in range(depth + 1):
        for y, ws in level.items():
            if y in d.accepting:
                accepted.extend(ws)
        if n == depth:
            break
        nxt: dict[str, list[str]] = {}
        for y, ws in level.items():
            for a, z in d.delta[y].items():
                nxt.setdefault(z, []).extend([w + a for w in ws])
        level = nxt
    return LanguagePrefix(depth, frozenset(accepted))


def _hopcroft(d: Dfa) -> list[frozenset[str]]:
    """Coarsest partition of ``d.states`` compatible with acceptance and delta."""
    inverse: dict[str, dict[str, set[str]]] = {a: {x: set() for x in d.states} for a in d.alphabet}
    for x in d.states:
        for a in d.alphabet:
            inverse[a][d.delta[x][a]].add(x)

    acc = frozenset(x for x in d.states if x in d.accepting)
    rej = frozenset(d.states) - acc
    partition = {p for p in (acc, rej) if p}
    work = {min(partition, key=len)} if len(partition) == 2 else set()
    while work:
        splitter = work.pop()
        for a in d.alphabet:
            pre = set()
            for y in splitter:
                pre |= inverse[a][y]
            if not pre:
                continue
            for block in list(partition):
                inside = block & pre
                if not inside or inside == block:
                    continue
                outside = block - inside
                partition.remove(block)
                partition.add(inside)
                partition.add(outside)
                if block in work:
                    work.remove(block)
                    work.add(inside)
                    work.add(outside)
                else:
                    work.add(inside if len(inside) <= len(outside) else outside)
    return list(partition)


def minimize_dfa(d: Dfa, init: str | None = None) -> Dfa:
    """
    Minimal automaton for the language of ``init``.

    States are renamed ``q0, q1, ...`` in breadth-first order from the
    initial state, exploring letters in sorted order, so the output is
    unique for a given language.
    """
    if init is None:
        init = d.initial
    if init is None:
        raise ValidationError("no initial state given")
    _check_state(d, init)
    reach = reachable_subcoalgebra(d, [init])
    block_of = {}
    for i, block in enumerate(_hopcroft(reach)):
        for x in block:
            block_of[x] = i

    names: dict[int, str] = {}
    rep: dict[int, str] = {}
    queue = deque([block_of[init]])
    names[block_of[init]] = "q0"
    rep[block_of[init]] = init
    while queue:
        b = queue.popleft()
        for a in reach.alphabet:
            c = block_of[reach.delta[rep[b]][a]]
            if c not in names:
                names[c] = f"q{len(names)}"
                rep[c] = reach.delta[rep[b]][a]
                queue.append(c)

    order = sorted(names, key=lambda b: int(names[b][1:]))
    return Dfa(
        states=tuple(names[b] for b in order),
        alphabet=reach.alphabet,
        delta={names[b]: {a: names[block_of[reach.delta[rep[b]][a]]] for a in reach.alphabet} for b in order},
        accepting=frozenset(names[b] for b in order if rep[b] in reach.accepting),
        initial="q0",
    )


def is_isomorphic(d1: Dfa, d2: Dfa) -> bool:
    """Whether two initialized automata are equal up to renaming of states."""
    if d1.initial is None or d2.initial is None or d1.alphabet != d2.alphabet:
        return False
    if len(d1.states) != len(d2.states):
        return False
    m = {d1.initial: d2.initial}
    queue = deque([d1.initial])
    while queue:
        x = queue.popleft()
        if (x in d1.accepting) != (m[x] in d2.accepting):
            return False
        for a in d1.alphabet:
            y1, y2 = d1.delta[x][a], d2.delta[m[x]][a]
            if y1 in m:
                if m[y1] != y2:
                    return False
            else:
                m[y1] = y2
                queue.append(y1)
    return len(set(m.values())) == len(m)


def accepted_words(d: Dfa, x: str, depth: int) -> list[str]:
    """Accepted words in shortlex order; a convenience over :func:`language_prefix`."""
    lang = language_prefix(d, x, depth).accepted
    return [w for w in words(d.alphabet, depth) if w in lang]
