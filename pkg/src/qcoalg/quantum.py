"""
Quantum systems as coalgebras on density matrices.

A system ``(H, S, E)`` has a Hilbert space of dimension ``dim``, a set ``S``
of unitaries indexed by letters and an ordered family ``E`` of effects.  Its
dynamics sends a density matrix ``rho`` to the observation vector
``(tr(rho e))_{e in E}`` together with the successors ``U rho U^dagger``, one
per letter.  Behaviour tables are the finite-depth unfolding of that map.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .behaviour import EPSILON_TOKEN, ObservedSystem, token_to_word, unfold, word_to_token, words
from .convdist import Distribution, int_label
from .errors import ShapeError, TruncationError, ValidationError
from .linalg import DEFAULT_TOL
from .markov import DistStream

WALK_LETTER = "U"

SQUARE_WALK_UNITARY = np.array(
    [
        [0, 1, 1, 0],
        [1, 0, 0, 1],
        [1, 0, 0, -1],
        [0, 1, -1, 0],
    ],
    dtype=np.complex128,
) / math.sqrt(2)


@dataclass(frozen=True, eq=False)
class QuantumSystem:
    """
    Hilbert dimension, letter-indexed unitaries and label-indexed effects.

    ``effects`` keeps its insertion order; observation vectors follow it.
    When ``is_test`` is set the effects must sum to the identity.
    """

    dim: int
    unitaries: Mapping[str, np.ndarray]
    effects: Mapping[str, np.ndarray]
    is_test: bool = False
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        d = int(self.dim)
        if d < 1:
            raise ValidationError(f"dimension must be positive, got {d}")
        if not self.unitaries:
            raise ValidationError("a system needs at least one unitary")
        if not self.effects:
            raise ValidationError("a system needs at least one effect")
        us = {}
        for a in sorted(self.unitaries):
            if not isinstance(a, str) or len(a) != 1 or a == EPSILON_TOKEN:
                raise ValidationError(f"letters must be single characters, got {a!r}")
            u = linalg.as_unitary(self.unitaries[a], self.tol, name=f"unitary {a!r}")
            if u.shape != (d, d):
                raise ShapeError(f"unitary {a!r} has shape {u.shape}, expected ({d}, {d})")
            us[a] = u
        es = {}
        for label, e in self.effects.items():
            e = linalg.as_effect(e, self.tol, name=f"effect {label!r}")
            if e.shape != (d, d):
                raise ShapeError(f"effect {label!r} has shape {e.shape}, expected ({d}, {d})")
            es[str(label)] = e
        if len(es) != len(self.effects):
            raise ValidationError("effect labels must be distinct")
        if self.is_test:
            dev = float(np.max(np.abs(sum(es.values()) - np.eye(d))))
            if dev > self.tol:
                raise ValidationError(f"effects do not sum to the identity: deviation {dev:.3g}")
        object.__setattr__(self, "dim", d)
        object.__setattr__(self, "unitaries", us)
        object.__setattr__(self, "effects", es)
        object.__setattr__(self, "is_test", bool(self.is_test))
        object.__setattr__(self, "_effect_stack", np.stack(list(es.values())))

    @property
    def alphabet(self) -> tuple[str, ...]:
        return tuple(self.unitaries)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self.effects)

    def observe(self, rho: np.ndarray) -> np.ndarray:
        """Observation vector ``(Re tr(rho e))_e`` clamped into ``[0, 1]``.

        Deviations beyond ``tol`` (imaginary part, or leaving ``[0, 1]``)
        mean ``rho`` was not a density matrix and raise instead of clamping.
        """
        # tr(rho e) = sum_ij rho_ij e_ji
        vals = np.einsum("ij,kji->k", rho, self._effect_stack)
        if np.any(np.abs(vals.imag) > self.tol):
            raise ValidationError(f"observation has imaginary part {np.max(np.abs(vals.imag)):.3g}")
        obs = vals.real
        if np.any(obs < -self.tol) or np.any(obs > 1 + self.tol):
            raise ValidationError(f"observation outside [0, 1]: {obs.min():.3g}..{obs.max():.3g}")
        out = np.clip(obs, 0.0, 1.0)
        out.setflags(write=False)
        return out

    def evolve(self, rho: np.ndarray, letter: str) -> np.ndarray:
        try:
            u = self.unitaries[letter]
        except KeyError:
            raise ValidationError(f"letter {letter!r} not in alphabet {self.alphabet}") from None
        return linalg.conjugate_by(rho, u)

    def evolve_word(self, rho: np.ndarray, word: str) -> np.ndarray:
        """Apply the letters of ``word`` left to right."""
        for a in word:
            rho = self.evolve(rho, a)
        return rho

    def as_system(self) -> ObservedSystem:
        return ObservedSystem(
            lambda rho: (self.observe(rho), {a: linalg.conjugate_by(rho, u) for a, u in self.unitaries.items()}),
            self.alphabet,
        )

    def check_state(self, rho) -> np.ndarray:
        rho = linalg.as_density(rho, self.tol, name="initial state")
        if rho.shape != (self.dim, self.dim):
            raise ShapeError(f"state has dimension {rho.shape[0]}, system has {self.dim}")
        return rho

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "unitaries": {a: linalg.matrix_to_json(u) for a, u in self.unitaries.items()},
            "effects": [{"label": k, "matrix": linalg.matrix_to_json(e)} for k, e in self.effects.items()],
            "is_test": self.is_test,
        }

    @classmethod
    def from_dict(cls, obj: Mapping, tol: float = DEFAULT_TOL) -> QuantumSystem:
        try:
            unitaries = {a: linalg.matrix_from_json(m, name=f"unitary {a!r}") for a, m in obj["unitaries"].items()}
            effects = {}
            for item in obj["effects"]:
                label = str(item["label"])
                if label in effects:
                    raise ValidationError(f"duplicate effect label {label!r}")
                effects[label] = linalg.matrix_from_json(item["matrix"], name=f"effect {label!r}")
            return cls(int(obj["dim"]), unitaries, effects, bool(obj.get("is_test", False)), tol)
        except KeyError as exc:
            raise ValidationError(f"quantum system: missing field {exc}") from None
        except (TypeError, AttributeError) as exc:
            raise ValidationError(f"quantum system: malformed field ({exc})") from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> QuantumSystem:
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class QuantumAutomaton:
    """A quantum system with a single effect, read as acceptance."""

    system: QuantumSystem

    def __post_init__(self):
        if len(self.system.effects) != 1:
            raise ValidationError(f"a quantum automaton has exactly one effect, got {len(self.system.effects)}")

    @classmethod
    def build(cls, unitaries: Mapping[str, np.ndarray], effect, tol: float = DEFAULT_TOL) -> QuantumAutomaton:
        effect = linalg.as_cmatrix(effect, name="effect")
        return cls(QuantumSystem(effect.shape[0], unitaries, {"accept": effect}, False, tol))

    @property
    def effect(self) -> np.ndarray:
        return next(iter(self.system.effects.values()))


@dataclass(frozen=True)
class BehaviourPrefix:
    """
    Observation vectors for every word of length ``<= depth``.

    ``table`` maps words (``""`` for the empty word) to tuples of floats in
    the order of ``labels``.
    """

    depth: int
    labels: tuple[str, ...]
    alphabet: tuple[str, ...]
    table: Mapping[str, tuple[float, ...]]
    is_test: bool = True

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "alphabet", tuple(sorted(self.alphabet)))
        expected = list(words(self.alphabet, self.depth))
        if set(self.table) != set(expected):
            missing = sorted(set(expected) - set(self.table), key=len)[:3]
            raise ValidationError(f"behaviour table incomplete for depth {self.depth}; missing e.g. {missing}")
        table = {}
        for w in expected:
            v = tuple(float(x) for x in self.table[w])
            if len(v) != len(self.labels):
                raise ShapeError(f"observation at {w!r} has {len(v)} entries for {len(self.labels)} labels")
            if any(x < -1e-9 or x > 1 + 1e-9 for x in v):
                raise ValidationError(f"observation at {w!r} outside [0, 1]: {v}")
            table[w] = v
        object.__setattr__(self, "table", table)

    def __getitem__(self, word: str) -> tuple[float, ...]:
        return self.table[word]

    def max_deviation(self, other: BehaviourPrefix) -> float:
        if self.labels != other.labels or self.alphabet != other.alphabet:
            raise ShapeError("behaviour tables index different labels or letters")
        depth = min(self.depth, other.depth)
        dev = 0.0
        for w in words(self.alphabet, depth):
            dev = max(dev, max((abs(x - y) for x, y in zip(self.table[w], other.table[w])), default=0.0))
        return dev

    def rows(self):
        for w, v in self.table.items():
            for label, x in zip(self.labels, v):
                yield word_to_token(w), label, x

    def to_csv(self, fmt=repr) -> str:
        buf = io.StringIO()
        if not self.is_test:
            buf.write("# non-test: effects do not sum to the identity\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["word", "label", "probability"])
        for word, label, x in self.rows():
            w.writerow([word, label, fmt(x)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, alphabet: Sequence[str] | None = None) -> BehaviourPrefix:
        lines = text.splitlines()
        is_test = not (lines and lines[0].startswith("# non-test"))
        rows = list(csv.reader(line for line in lines if not line.startswith("#")))
        if not rows or rows[0] != ["word", "label", "probability"]:
            raise ValidationError("behaviour CSV must start with header word,label,probability")
        table: dict[str, list[float]] = {}
        labels: list[str] = []
        for token, label, x in rows[1:]:
            word = token_to_word(token)
            table.setdefault(word, []).append(float(x))
            if label not in labels:
                labels.append(label)
        depth = max((len(w) for w in table), default=0)
        if alphabet is None:
            alphabet = sorted({a for w in table for a in w})
        return cls(depth, tuple(labels), tuple(alphabet), table, is_test)

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "labels": list(self.labels),
            "alphabet": list(self.alphabet),
            "is_test": self.is_test,
            "table": {word_to_token(w): list(v) for w, v in self.table.items()},
        }

    @classmethod
    def from_dict(cls, obj: Mapping) -> BehaviourPrefix:
        table = {token_to_word(t): v for t, v in obj["table"].items()}
        return cls(int(obj["depth"]), tuple(obj["labels"]), tuple(obj["alphabet"]), table, bool(obj["is_test"]))


def pure_density(psi, tol: float = DEFAULT_TOL) -> np.ndarray:
    """``|psi><psi|`` for a unit vector ``psi``."""
    psi = np.asarray(psi, dtype=np.complex128).ravel()
    if not np.all(np.isfinite(psi)):
        raise ValidationError("state vector has non-finite entries")
    norm = float(np.linalg.norm(psi))
    if abs(norm - 1.0) > tol:
        raise ValidationError(f"state vector is not normalized: norm {norm:.12g}")
    rho = np.outer(psi, psi.conj())
    rho.setflags(write=False)
    return rho


def q_step(sys: QuantumSystem, rho) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """One application of the dynamics: observations and per-letter successors."""
    rho = sys.check_state(rho)
    return sys.as_system().step(rho)


def behaviour_prefix(sys: QuantumSystem, rho, depth: int) -> BehaviourPrefix:
    rho = sys.check_state(rho)
    table = unfold(sys.as_system(), rho, depth)
    return BehaviourPrefix(depth, sys.labels, sys.alphabet, {w: tuple(v) for w, v in table.items()}, sys.is_test)


def accept_probability(qa: QuantumAutomaton, psi, word: str) -> float:
    """``<delta_u psi | e | delta_u psi>``, letters applied left to right."""
    sys = qa.system
    psi = np.asarray(psi, dtype=np.complex128).ravel()
    if psi.shape != (sys.dim,):
        raise ShapeError(f"state vector has length {psi.shape[0]}, system has dimension {sys.dim}")
    norm = float(np.linalg.norm(psi))
    if abs(norm - 1.0) > sys.tol:
        raise ValidationError(f"state vector is not normalized: norm {norm:.12g}")
    for a in word:
        if a not in sys.unitaries:
            raise ValidationError(f"letter {a!r} not in alphabet {sys.alphabet}")
        psi = sys.unitaries[a] @ psi
    p = complex(np.vdot(psi, qa.effect @ psi))
    if abs(p.imag) > sys.tol or p.real < -sys.tol or p.real > 1 + sys.tol:
        raise ValidationError(f"acceptance amplitude {p} is not a probability")
    return min(max(p.real, 0.0), 1.0)


# ---------------------------------------------------------------------------
# Walks


def line_index(k: int, down: bool, n_max: int) -> int:
    """Basis index of ``|spin, k>``: position-major, spin-minor (up before down)."""
    return 2 * (k + n_max) + int(down)


def _line_walk_unitary(n_max: int) -> np.ndarray:
    d = 2 * (2 * n_max + 1)
    s = 1 / math.sqrt(2)
    u = np.zeros((d, d), dtype=np.complex128)

    def rule(k: int, down: bool) -> np.ndarray:
        # |up k> -> (|up k-1> + |down k+1>)/sqrt2 ; |down k> -> (|up k-1> - |down k+1>)/sqrt2,
        # dropping components that leave the window.
        col = np.zeros(d, dtype=np.complex128)
        if k - 1 >= -n_max:
            col[line_index(k - 1, False, n_max)] = s
        if k + 1 <= n_max:
            col[line_index(k + 1, True, n_max)] = -s if down else s
        return col

    boundary = []
    for k in range(-n_max, n_max + 1):
        for down in (False, True):
            j = line_index(k, down, n_max)
            if -n_max < k < n_max:
                u[:, j] = rule(k, down)
            else:
                boundary.append((j, rule(k, down)))

    # Gram-Schmidt completion of the boundary columns: try the truncated rule
    # first, then fall back to standard basis vectors in index order.
    basis = [u[:, j] for j in range(d) if np.any(u[:, j])]
    for j, candidate in boundary:
        for v in [candidate] + list(np.eye(d, dtype=np.complex128)):
            r = v.copy()
            for _ in range(2):
                for b in basis:
                    r -= np.vdot(b, r) * b
            norm = np.linalg.norm(r)
            if norm > 0.5:
                r /= norm
                u[:, j] = r
                basis.append(r)
                break
    return u


def build_line_walk(n_max: int, tol: float = DEFAULT_TOL) -> QuantumSystem:
    """
    Hadamard-type walk on the positions ``-n_max..n_max`` with a spin qubit.

    Interior basis vectors evolve by the walk rule; the four boundary columns
    are completed to a unitary.  Amplitude started at position 0 cannot reach
    the boundary columns within ``n_max`` steps, so the completion never
    influences those steps.
    """
    if n_max < 1:
        raise ValidationError(f"n_max must be >= 1, got {n_max}")
    d = 2 * (2 * n_max + 1)
    effects = {}
    for k in range(-n_max, n_max + 1):
        e = np.zeros((d, d), dtype=np.complex128)
        for down in (False, True):
            i = line_index(k, down, n_max)
            e[i, i] = 1
        effects[int_label(k)] = e
    return QuantumSystem(d, {WALK_LETTER: _line_walk_unitary(n_max)}, effects, True, tol)


@dataclass(frozen=True, eq=False)
class WalkSpec:
    """
    A walk: ``kind="line"`` with a position window, or ``kind="graph"`` with a
    unitary on the vertex space and position measurements at each vertex.
    """

    kind: str
    n_max: int | None = None
    unitary: np.ndarray | None = field(default=None, repr=False)
    start: int = 0

    def __post_init__(self):
        if self.kind == "line":
            if self.n_max is None or int(self.n_max) < 1:
                raise ValidationError("line walk needs n_max >= 1")
            object.__setattr__(self, "n_max", int(self.n_max))
            if self.start != 0:
                raise ValidationError("line walks start at position 0")
        elif self.kind == "graph":
            if self.unitary is None:
                raise ValidationError("graph walk needs a unitary")
            u = linalg.as_unitary(self.unitary, name="walk unitary")
            object.__setattr__(self, "unitary", u)
            if not 0 <= self.start < u.shape[0]:
                raise ValidationError(f"start vertex {self.start} out of range")
        else:
            raise ValidationError(f"unknown walk kind {self.kind!r}; expected 'line' or 'graph'")

    @classmethod
    def line(cls, n_max: int) -> WalkSpec:
        return cls("line", n_max=n_max)

    @classmethod
    def graph(cls, unitary, start: int = 0) -> WalkSpec:
        return cls("graph", unitary=unitary, start=start)

    @property
    def vertices(self) -> int:
        return self.unitary.shape[0] if self.kind == "graph" else 2 * self.n_max + 1

    def system(self) -> QuantumSystem:
        if self.kind == "line":
            return build_line_walk(self.n_max)
        d = self.vertices
        effects = {}
        for k in range(d):
            e = np.zeros((d, d), dtype=np.complex128)
            e[k, k] = 1
            effects[int_label(k)] = e
        return QuantumSystem(d, {WALK_LETTER: self.unitary}, effects, True)

    def initial_state(self) -> np.ndarray:
        """``|up 0><up 0|`` for line walks, ``|start><start|`` for graphs."""
        if self.kind == "line":
            d = 2 * (2 * self.n_max + 1)
            psi = np.zeros(d, dtype=np.complex128)
            psi[line_index(0, False, self.n_max)] = 1
        else:
            psi = np.zeros(self.vertices, dtype=np.complex128)
            psi[self.start] = 1
        return pure_density(psi)

    def to_dict(self) -> dict:
        if self.kind == "line":
            return {"kind": "walk", "type": "line", "n_max": self.n_max}
        return {"kind": "walk", "type": "graph", "unitary": linalg.matrix_to_json(self.unitary), "start": self.start}


def square_walk() -> WalkSpec:
    """Quantum walk on the square graph with vertices 0..3, started at 0."""
    return WalkSpec.graph(SQUARE_WALK_UNITARY)


def observation_stream(sys: QuantumSystem, rho, n: int, letter: str | None = None) -> DistStream:
    """Observation distributions along ``rho, U rho U^dagger, ...`` for a test system."""
    if not sys.is_test:
        raise ValidationError("observation streams are distributions only for test systems")
    if letter is None:
        if len(sys.alphabet) != 1:
            raise ValidationError(f"system has letters {sys.alphabet}; choose one")
        letter = sys.alphabet[0]
    rho = sys.check_state(rho)
    out = []
    for k in range(n + 1):
        if k:
            rho = sys.evolve(rho, letter)
        out.append(Distribution(dict(zip(sys.labels, sys.observe(rho)))))
    return DistStream(tuple(out))


def walk_distribution(spec: WalkSpec, n: int) -> DistStream:
    """Position distributions ``phi_0 .. phi_n`` of a walk."""
    if n < 0:
        raise ValidationError(f"step count must be >= 0, got {n}")
    if spec.kind == "line" and n > spec.n_max:
        raise TruncationError(
            f"{n} steps exceed the window n_max={spec.n_max}; the boundary would become observable"
        )
    return observation_stream(spec.system(), spec.initial_state(), n)
