"""
Markov chains and their stream semantics on distributions.

A chain ``c : X -> D(X)`` extends to an affine map ``D(X) -> D(X)`` by
stepping every point and flattening; iterating that map from an initial
distribution gives the behaviour stream.
"""

from __future__ import annotations

import csv
import io
import json
from collections.abc import Iterable, Mapping
from dataclasses import dataclass

from .convdist import Distribution, dist_flatten, dist_map, label_sort_key
from .errors import ValidationError


@dataclass(frozen=True)
class MarkovChain:
    states: tuple[str, ...]
    step: Mapping[str, Distribution]

    def __post_init__(self):
        states = tuple(self.states)
        if len(set(states)) != len(states):
            raise ValidationError("duplicate states")
        known = set(states)
        step = {}
        for x in states:
            if x not in self.step:
                raise ValidationError(f"no transition distribution for state {x!r}")
            phi = self.step[x]
            if not isinstance(phi, Distribution):
                phi = Distribution(phi)
            stray = phi.support - known
            if stray:
                raise ValidationError(f"step({x!r}) puts mass on unknown states {sorted(stray)}")
            step[x] = phi
        unknown = set(self.step) - known
        if unknown:
            raise ValidationError(f"step given for unknown states {sorted(unknown)}")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "step", step)

    def to_dict(self) -> dict:
        return {
            "states": list(self.states),
            "step": {x: {y: self.step[x][y] for y in self.states if y in self.step[x]} for x in self.states},
        }

    @classmethod
    def from_dict(cls, obj: Mapping) -> MarkovChain:
        try:
            return cls(tuple(obj["states"]), {x: Distribution(p) for x, p in obj["step"].items()})
        except KeyError as exc:
            raise ValidationError(f"markov chain: missing field {exc}") from None
        except AttributeError:
            raise ValidationError("markov chain: 'step' must map states to {state: prob}") from None


@dataclass(frozen=True)
class DistStream:
    """A finite prefix ``(phi_0, ..., phi_n)`` of a stream of distributions."""

    entries: tuple[Distribution, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        for i, phi in enumerate(self.entries):
            if not isinstance(phi, Distribution):
                raise ValidationError(f"entry {i} is not a Distribution")

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, k):
        return self.entries[k]

    def __iter__(self):
        return iter(self.entries)

    def rows(self, order: Iterable[str] | None = None):
        """``(step, label, probability)`` rows; labels follow ``order`` when given."""
        for k, phi in enumerate(self.entries):
            labels = [x for x in order if x in phi] if order is not None else sorted(phi, key=label_sort_key)
            for x in labels:
                yield k, x, phi[x]

    def to_csv(self, fmt=repr, order: Iterable[str] | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "label", "probability"])
        for k, x, r in self.rows(order):
            w.writerow([k, x, fmt(r)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> DistStream:
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["step", "label", "probability"]:
            raise ValidationError("stream CSV must start with header step,label,probability")
        by_step: dict[int, list] = {}
        try:
            for k, x, r in rows[1:]:
                by_step.setdefault(int(k), []).append((x, float(r)))
        except ValueError as exc:
            raise ValidationError(f"bad stream CSV row: {exc}") from None
        if sorted(by_step) != list(range(len(by_step))):
            raise ValidationError("stream CSV steps must be 0..n without gaps")
        return cls(tuple(Distribution(by_step[k]) for k in range(len(by_step))))

    def to_json(self) -> str:
        return json.dumps([{str(x): r for x, r in sorted(phi.items(), key=lambda kv: label_sort_key(kv[0]))} for phi in self.entries])

    @classmethod
    def from_json(cls, text: str) -> DistStream:
        return cls(tuple(Distribution(d) for d in json.loads(text)))


def _check_support(c: MarkovChain, phi: Distribution):
    stray = phi.support - set(c.step)
    if stray:
        raise ValidationError(f"distribution has mass on unknown states {sorted(stray)}")


def markov_step(c: MarkovChain, phi: Distribution) -> Distribution:
    _check_support(c, phi)
    return dist_flatten(dist_map(c.step.__getitem__, phi))


def behaviour_stream(c: MarkovChain, phi0: Distribution, n: int) -> DistStream:
    if n < 0:
        raise ValidationError(f"stream length must be >= 0, got {n}")
    out = [phi0]
    _check_support(c, phi0)
    for _ in range(n):
        out.append(markov_step(c, out[-1]))
    return DistStream(tuple(out))
