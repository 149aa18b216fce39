"""
Finite probability distributions (the distribution monad) and convex sums.

A :class:`Distribution` is an immutable mapping from hashable point labels to
probabilities.  Labels are normally strings; integers are written in their
canonical decimal form (``"-3"``) when they stand for positions on a line.
Distributions are themselves hashable, so a distribution over distributions
is just a :class:`Distribution` whose labels are distributions.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Callable, Hashable, Iterable, Iterator, Mapping, Sequence

from .errors import ShapeError, ValidationError

SUM_TOL = 1e-9
PRUNE_BELOW = 1e-12


def int_label(k: int) -> str:
    """Canonical label of an integer point, e.g. ``-3 -> "-3"``."""
    return str(int(k))


class Distribution(Mapping):
    """Finite-support probability distribution.

    Entries with probability below ``1e-12`` are dropped.  The remaining
    masses must sum to 1 within ``1e-9``; they are never silently
    renormalized.
    """

    __slots__ = ("_p", "_hash")

    def __init__(self, probs: Mapping | Iterable[tuple[Hashable, float]] = ()):
        items = probs.items() if isinstance(probs, Mapping) else probs
        acc: dict = {}
        for x, r in items:
            r = float(r)
            if not math.isfinite(r) or r < -SUM_TOL:
                raise ValidationError(f"invalid probability {r!r} for {x!r}")
            acc[x] = acc.get(x, 0.0) + r
        total = math.fsum(acc.values())
        if abs(total - 1.0) > SUM_TOL:
            raise ValidationError(f"probabilities sum to {total:.12g}, not 1")
        self._p = {x: r for x, r in acc.items() if r >= PRUNE_BELOW}
        self._hash = None

    def __getitem__(self, x):
        return self._p[x]

    def __iter__(self) -> Iterator:
        return iter(self._p)

    def __len__(self) -> int:
        return len(self._p)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._p.items()))
        return self._hash

    def __eq__(self, other):
        if isinstance(other, Distribution):
            return self._p == other._p
        return NotImplemented

    def __repr__(self):
        body = ", ".join(f"{x!r}: {r:.12g}" for x, r in self._p.items())
        return f"Distribution({{{body}}})"

    @property
    def support(self) -> frozenset:
        return frozenset(self._p)

    def prob(self, x) -> float:
        return self._p.get(x, 0.0)

    def isclose(self, other: Distribution | Mapping, tol: float = SUM_TOL) -> bool:
        keys = set(self) | set(other)
        return all(abs(self.prob(k) - other.get(k, 0.0)) <= tol for k in keys)

    def to_json(self) -> str:
        return json.dumps({str(x): r for x, r in sorted(self._p.items(), key=lambda kv: label_sort_key(kv[0]))})

    @classmethod
    def from_json(cls, text: str) -> Distribution:
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid distribution JSON: {exc}") from None
        if not isinstance(obj, dict):
            raise ValidationError("distribution JSON must be an object {label: probability}")
        return cls(obj)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["label", "probability"])
        for x, r in sorted(self._p.items(), key=lambda kv: label_sort_key(kv[0])):
            w.writerow([str(x), repr(r)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> Distribution:
        rows = list(csv.reader(io.StringIO(text)))
        if rows and rows[0] == ["label", "probability"]:
            rows = rows[1:]
        try:
            return cls((label, float(p)) for label, p in rows)
        except ValueError as exc:
            raise ValidationError(f"invalid distribution CSV: {exc}") from None


def label_sort_key(x):
    """Sort integer-like labels numerically, everything else after, as strings."""
    try:
        return (0, int(x), "")
    except (TypeError, ValueError):
        return (1, 0, str(x))


def dist_unit(x) -> Distribution:
    return Distribution({x: 1.0})


def dist_map(f: Callable, phi: Distribution) -> Distribution:
    """Push ``phi`` forward along ``f``, merging masses that land together."""
    return Distribution((f(x), r) for x, r in phi.items())


def dist_flatten(nested: Distribution) -> Distribution:
    """Monad multiplication: sum_i r_i (sum_j s_ij x_ij) -> sum_ij r_i s_ij x_ij."""
    out: dict = {}
    for inner, r in nested.items():
        if not isinstance(inner, Distribution):
            raise ValidationError(f"flatten expects distributions as points, got {inner!r}")
        for x, s in inner.items():
            out[x] = out.get(x, 0.0) + r * s
    return Distribution(out)


def convex_weights(weights: Iterable[float]) -> tuple[float, ...]:
    """Validate a convex combination: non-negative weights summing to 1."""
    ws = tuple(float(w) for w in weights)
    if any(not math.isfinite(w) or w < 0 for w in ws):
        raise ValidationError(f"convex weights must be non-negative: {ws}")
    if abs(math.fsum(ws) - 1.0) > SUM_TOL:
        raise ValidationError(f"convex weights sum to {math.fsum(ws):.12g}, not 1")
    return ws


def convex_sum(weights: Sequence[float], points: Sequence[Distribution]) -> Distribution:
    ws = convex_weights(weights)
    if len(ws) != len(points):
        raise ShapeError(f"{len(ws)} weights for {len(points)} distributions")
    out: dict = {}
    for w, phi in zip(ws, points):
        for x, r in phi.items():
            out[x] = out.get(x, 0.0) + w * r
    return Distribution(out)
