"""
Minimal convex realizations of quantum behaviour.

Density matrices live in the real ``d**2``-dimensional space of Hermitian
matrices, where each unitary acts linearly (``rho -> U rho U^dagger``) and each
effect is a linear functional (``rho -> tr(rho e)``).  A minimal realization
keeps only the directions that are both reachable from the initial state and
visible to some sequence of letters followed by an effect.  Because every
reachable state has trace one, the result is an affine system: coordinates
``z``, maps ``z -> M_a z + b_a`` and output ``z -> G z + h``.

For single-letter systems the orbit is also examined directly: the
eventually periodic observation streams reachable by repeatedly dropping the
head are enumerated, which is how small examples are worked by hand.
"""

from __future__ import annotations

import json
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

from .behaviour import ObservedSystem, unfold, word_count
from .errors import CycleNotFoundError, NumericalError, ShapeError, ValidationError
from .quantum import BehaviourPrefix, QuantumSystem, behaviour_prefix

DEFAULT_TOL = 1e-8
DEFAULT_MAX_STEPS = 1000
MAX_DEFAULT_CHECK_WORDS = 4096


# ---------------------------------------------------------------------------
# Real vectorization of Hermitian matrices


def hermitian_basis(d: int) -> np.ndarray:
    """
    Orthonormal basis of the ``d x d`` Hermitian matrices under ``<A, B> = tr(AB)``.

    Ordering: diagonal units first, then for each ``i < j`` the symmetric and
    antisymmetric off-diagonal pairs.  Returns shape ``(d*d, d, d)``.
    """
    out = []
    for i in range(d):
        m = np.zeros((d, d), dtype=np.complex128)
        m[i, i] = 1
        out.append(m)
    s = 1 / np.sqrt(2)
    for i in range(d):
        for j in range(i + 1, d):
            m = np.zeros((d, d), dtype=np.complex128)
            m[i, j] = m[j, i] = s
            out.append(m)
            m = np.zeros((d, d), dtype=np.complex128)
            m[i, j] = -1j * s
            m[j, i] = 1j * s
            out.append(m)
    return np.array(out)


def _coords(basis: np.ndarray, mats: np.ndarray) -> np.ndarray:
    # tr(B_k M) = sum_ij conj(B_k)_ij M_ij for Hermitian B_k
    n = basis.shape[0]
    flat = mats.reshape(-1, n)
    return (basis.conj().reshape(n, -1) @ flat.T).real


def vectorize(rho, basis: np.ndarray) -> np.ndarray:
    """Coordinates of a Hermitian matrix in ``basis``."""
    return _coords(basis, np.asarray(rho, dtype=np.complex128)[None])[:, 0]


def devectorize(x, basis: np.ndarray) -> np.ndarray:
    return np.tensordot(np.asarray(x, dtype=float), basis, axes=1)


def superoperator(u, basis: np.ndarray) -> np.ndarray:
    """Real matrix of ``rho -> u rho u^dagger`` in ``basis``."""
    u = np.asarray(u, dtype=np.complex128)
    images = u @ basis @ u.conj().T
    return _coords(basis, images)


# ---------------------------------------------------------------------------
# Realizations


@dataclass(frozen=True, eq=False)
class MinimalRealization:
    """
    Affine system ``z -> (G z + h, {a: M_a z + b_a})`` started at ``initial``.

    ``extreme_points`` lists the vertices of the convex hull of the reachable
    coordinates when that set is finite, else ``None``.
    """

    dim: int
    initial: np.ndarray
    transitions: Mapping[str, tuple[np.ndarray, np.ndarray]]
    output: tuple[np.ndarray, np.ndarray]
    labels: tuple[str, ...]
    extreme_points: list[np.ndarray] | None = None
    source_dim: int | None = None
    check_depth: int | None = None
    max_deviation: float | None = None

    def __post_init__(self):
        r = int(self.dim)
        z0 = np.asarray(self.initial, dtype=float).reshape(r)
        trans = {}
        for a in sorted(self.transitions):
            m, b = self.transitions[a]
            m = np.asarray(m, dtype=float).reshape(r, r)
            b = np.asarray(b, dtype=float).reshape(r)
            trans[a] = (m, b)
        labels = tuple(self.labels)
        g = np.asarray(self.output[0], dtype=float).reshape(len(labels), r)
        h = np.asarray(self.output[1], dtype=float).reshape(len(labels))
        for arr in (z0, g, h, *[x for mb in trans.values() for x in mb]):
            if not np.all(np.isfinite(arr)):
                raise ValidationError("realization has non-finite entries")
            arr.setflags(write=False)
        pts = None
        if self.extreme_points is not None:
            pts = [np.asarray(p, dtype=float).reshape(r) for p in self.extreme_points]
        object.__setattr__(self, "dim", r)
        object.__setattr__(self, "initial", z0)
        object.__setattr__(self, "transitions", trans)
        object.__setattr__(self, "output", (g, h))
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "extreme_points", pts)

    @property
    def alphabet(self) -> tuple[str, ...]:
        return tuple(self.transitions)

    def step(self, z: np.ndarray, letter: str) -> np.ndarray:
        m, b = self.transitions[letter]
        return m @ z + b

    def observe(self, z: np.ndarray) -> np.ndarray:
        g, h = self.output
        return g @ z + h

    def as_system(self) -> ObservedSystem:
        return ObservedSystem(lambda z: (self.observe(z), {a: self.step(z, a) for a in self.transitions}), self.alphabet)

    def report(self) -> dict:
        return {
            "original_dim": self.source_dim,
            "minimized_dim": self.dim,
            "check_depth": self.check_depth,
            "max_deviation": self.max_deviation,
        }

    def to_dict(self) -> dict:
        out = {
            "dim": self.dim,
            "labels": list(self.labels),
            "initial": self.initial.tolist(),
            "transitions": {a: {"matrix": m.tolist(), "offset": b.tolist()} for a, (m, b) in self.transitions.items()},
            "output": {"matrix": self.output[0].tolist(), "offset": self.output[1].tolist()},
        }
        if self.extreme_points is not None:
            out["extreme_points"] = [p.tolist() for p in self.extreme_points]
        return out

    @classmethod
    def from_dict(cls, obj: Mapping) -> MinimalRealization:
        try:
            r = int(obj["dim"])
            labels = tuple(obj["labels"])
            trans = {
                a: (np.array(t["matrix"], dtype=float).reshape(r, r), np.array(t["offset"], dtype=float))
                for a, t in obj["transitions"].items()
            }
            output = (
                np.array(obj["output"]["matrix"], dtype=float).reshape(len(labels), r),
                np.array(obj["output"]["offset"], dtype=float),
            )
            return cls(r, np.array(obj["initial"], dtype=float), trans, output, labels, obj.get("extreme_points"))
        except KeyError as exc:
            raise ValidationError(f"realization: missing field {exc}") from None
        except ValueError as exc:
            raise ShapeError(f"realization: inconsistent shapes ({exc})") from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> MinimalRealization:
        return cls.from_dict(json.loads(text))


def realization_behaviour(m: MinimalRealization, depth: int) -> BehaviourPrefix:
    table = unfold(m.as_system(), m.initial, depth)
    out = {}
    for w, v in table.items():
        if np.any(v < -1e-9) or np.any(v > 1 + 1e-9):
            raise NumericalError(f"realization output at {w!r} leaves [0, 1]: {v}")
        out[w] = tuple(np.clip(v, 0.0, 1.0))
    total = [sum(v) for v in out.values()]
    is_test = bool(total) and all(abs(s - 1) <= 1e-9 for s in total)
    return BehaviourPrefix(depth, m.labels, m.alphabet, out, is_test)


# ---------------------------------------------------------------------------
# Reachability / observability reduction


def _grow_span(seeds: Sequence[np.ndarray], maps: Sequence[np.ndarray], tol: float, bound: int) -> np.ndarray:
    """
    Orthonormal basis (as columns) of the smallest subspace containing
    ``seeds`` and invariant under every matrix in ``maps``.

    Grown breadth-first, Arnoldi style: maps are applied to the orthonormal
    basis vectors, never to raw iterates, which would become nearly parallel.
    A final closure pass picks up directions the sweep judged negligible one
    vector at a time but that add up across the whole basis.
    """
    scale = max((np.linalg.norm(s) for s in seeds), default=0.0)
    basis: list[np.ndarray] = []

    def add(w, ref) -> np.ndarray | None:
        r = np.array(w, dtype=float)
        for _ in range(2):
            for b in basis:
                r -= (b @ r) * b
        nr = np.linalg.norm(r)
        if nr <= tol * ref:
            return None
        q = r / nr
        basis.append(q)
        if len(basis) > bound:
            raise NumericalError(f"rank did not stabilize within the dimension bound {bound}")
        return q

    frontier = [q for s in seeds if scale > 0 and (q := add(s, scale)) is not None]
    while True:
        while frontier:
            nxt = []
            for v in frontier:
                for a in maps:
                    q = add(a @ v, 1.0)
                    if q is not None:
                        nxt.append(q)
            frontier = nxt
        if not basis:
            break
        q_mat = np.array(basis).T
        resid = np.hstack([a @ q_mat - q_mat @ (q_mat.T @ (a @ q_mat)) for a in maps])
        u, sv, _ = np.linalg.svd(resid, full_matrices=False)
        frontier = [q for k in np.nonzero(sv > tol)[0] if (q := add(u[:, k], 1.0)) is not None]
        if not frontier:
            break
    return np.array(basis).T if basis else np.zeros((len(seeds[0]), 0))


def minimize_affine(
    x0,
    transitions: Mapping[str, np.ndarray],
    output: np.ndarray,
    unit,
    labels: Sequence[str],
    tol: float = DEFAULT_TOL,
) -> MinimalRealization:
    """
    Minimal affine realization of a linear system that preserves ``unit``.

    The system is ``x -> (C x, {a: A_a x})`` with ``unit @ A_a == unit`` and
    ``unit @ x0 == 1``.  Coordinates are chosen so that ``x0`` maps to the
    origin.
    """
    x0 = np.asarray(x0, dtype=float)
    n = x0.shape[0]
    letters = sorted(transitions)
    maps = [np.asarray(transitions[a], dtype=float) for a in letters]
    c = np.asarray(output, dtype=float).reshape(len(labels), n)
    unit = np.asarray(unit, dtype=float)

    reach = _grow_span([x0], maps, tol, n)
    # Directions inside the reachable span on which the unit functional vanishes.
    null = scipy.linalg.null_space((unit @ reach)[None, :], rcond=tol)
    diffs = reach @ null

    obs_rows = _grow_span(list(c), [a.T for a in maps], tol, n)
    ob = obs_rows.T
    if diffs.shape[1] and ob.shape[0]:
        w, s, vt = np.linalg.svd(ob @ diffs, full_matrices=False)
        r = int(np.sum(s > tol * max(s[0], 1.0))) if s.size else 0
    else:
        r = 0

    if r:
        proj = w[:, :r].T @ ob
        lift = diffs @ vt[:r].T / s[:r]
    else:
        proj = np.zeros((0, n))
        lift = np.zeros((n, 0))
    trans = {a: (proj @ m @ lift, proj @ (m @ x0 - x0)) for a, m in zip(letters, maps)}
    g, h = c @ lift, c @ x0

    # The affine maps must reproduce the dynamics on the whole affine hull of
    # reachable states, spanned by x0 and x0 + d for the difference directions.
    worst = 0.0
    for x in [x0, *(x0 + d for d in diffs.T)]:
        z = proj @ (x - x0)
        worst = max(worst, float(np.max(np.abs(c @ x - (g @ z + h)), initial=0.0)))
        for a, m in zip(letters, maps):
            mz, b = trans[a]
            worst = max(worst, float(np.max(np.abs(proj @ (m @ x - x0) - (mz @ z + b)), initial=0.0)))
    if worst > tol:
        raise NumericalError(f"affine fit residual {worst:.3g} exceeds tolerance {tol:g}")

    return MinimalRealization(r, np.zeros(r), trans, (g, h), tuple(labels), source_dim=n)


def realization_linear_system(m: MinimalRealization):
    """
    The homogeneous linear system ``(z, 1)`` underlying an affine realization.

    Returns ``(x0, transitions, output, unit)`` suitable for
    :func:`minimize_affine`.
    """
    r = m.dim
    trans = {}
    for a, (mz, b) in m.transitions.items():
        t = np.eye(r + 1)
        t[:r, :r] = mz
        t[:r, r] = b
        trans[a] = t
    g, h = m.output
    unit = np.zeros(r + 1)
    unit[r] = 1
    return np.append(m.initial, 1.0), trans, np.hstack([g, h[:, None]]), unit


def _affine_change(m: MinimalRealization, s: np.ndarray, beta: np.ndarray, pts) -> MinimalRealization:
    """Re-express ``m`` in coordinates ``z' = s z + beta``."""
    s_inv = np.linalg.inv(s)
    trans = {}
    for a, (mz, b) in m.transitions.items():
        mn = s @ mz @ s_inv
        trans[a] = (mn, s @ b + beta - mn @ beta)
    g, h = m.output
    gn = g @ s_inv
    return MinimalRealization(
        m.dim,
        s @ m.initial + beta,
        trans,
        (gn, h - gn @ beta),
        m.labels,
        None if pts is None else [s @ p + beta for p in pts],
        m.source_dim,
    )


def reachable_points(m: MinimalRealization, tol: float = DEFAULT_TOL, max_points: int = DEFAULT_MAX_STEPS):
    """
    All coordinates reachable from the initial point, if finitely many.

    Points closer than ``tol`` in max-norm are identified.  Returns ``None``
    when more than ``max_points`` distinct points turn up.
    """
    pts = np.empty((max_points + 1, m.dim))
    pts[0] = m.initial
    count = 1
    queue = [m.initial]
    while queue:
        nxt = []
        for z in queue:
            for a in m.alphabet:
                y = m.step(z, a)
                if m.dim == 0 or np.min(np.max(np.abs(pts[:count] - y), axis=1)) <= tol:
                    continue
                if count > max_points - 1:
                    return None
                pts[count] = y
                count += 1
                nxt.append(y)
        queue = nxt
    return list(pts[:count])


def extreme_points(points: Sequence[np.ndarray], tol: float = DEFAULT_TOL) -> list[np.ndarray]:
    """
    Vertices of the convex hull of finitely many points that affinely span
    their space.

    Dimension 1 takes the two ends, dimensions 2 and 3 use Qhull, and higher
    dimensions test each point for being a convex combination of the others
    with a linear program.
    """
    pts = np.array(points, dtype=float)
    if pts.ndim != 2 or len(pts) == 0:
        raise ValidationError("need at least one point")
    dim = pts.shape[1]
    if dim == 0 or len(pts) == 1:
        return [pts[0]]
    if dim == 1:
        lo, hi = int(np.argmin(pts[:, 0])), int(np.argmax(pts[:, 0]))
        return [pts[lo], pts[hi]] if lo != hi else [pts[lo]]
    if dim <= 3:
        try:
            hull = ConvexHull(pts)
            return [pts[i] for i in sorted(hull.vertices)]
        except QhullError:
            pass
    keep = []
    for i in range(len(pts)):
        others = np.delete(pts, i, axis=0)
        a_eq = np.vstack([others.T, np.ones(len(others))])
        b_eq = np.append(pts[i], 1.0)
        res = linprog(np.zeros(len(others)), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
        if res.status != 0:
            keep.append(pts[i])
    return keep


def _normalize(m: MinimalRealization, tol: float, max_points: int) -> MinimalRealization:
    pts = reachable_points(m, tol, max_points)
    if pts is None:
        return m
    hull = extreme_points(pts, tol)
    if m.dim != 1:
        return MinimalRealization(m.dim, m.initial, m.transitions, m.output, m.labels, hull, m.source_dim)
    # One dimension: map the reachable segment onto [0, 1], initial point at 1
    # when it is an endpoint (otherwise on the upper half).
    lo = min(p[0] for p in pts)
    hi = max(p[0] for p in pts)
    z0 = m.initial[0]
    if hi - z0 <= z0 - lo:
        s, beta = 1 / (hi - lo), -lo / (hi - lo)
    else:
        s, beta = -1 / (hi - lo), hi / (hi - lo)
    out = _affine_change(m, np.array([[s]]), np.array([beta]), hull)
    ordered = sorted(out.extreme_points, key=lambda p: p[0])
    return MinimalRealization(out.dim, out.initial, out.transitions, out.output, out.labels, ordered, out.source_dim)


def default_check_depth(sys: QuantumSystem) -> int:
    """``2 d^2``, reduced for multi-letter systems to keep the word count manageable."""
    depth = 2 * sys.dim**2
    k = len(sys.alphabet)
    while depth > 1 and word_count(k, depth) > MAX_DEFAULT_CHECK_WORDS:
        depth -= 1
    return depth


def minimal_realization(
    sys: QuantumSystem,
    rho0,
    tol: float = DEFAULT_TOL,
    check_depth: int | None = None,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> MinimalRealization:
    """
    Smallest affine system reproducing the behaviour of ``rho0``.

    The result is verified against the source system on all words up to
    ``check_depth``; a deviation above ``tol`` raises :class:`NumericalError`.
    """
    rho0 = sys.check_state(rho0)
    if check_depth is None:
        check_depth = default_check_depth(sys)
    if check_depth < 1:
        raise ValidationError(f"check_depth must be >= 1, got {check_depth}")
    basis = hermitian_basis(sys.dim)
    x0 = vectorize(rho0, basis)
    trans = {a: superoperator(u, basis) for a, u in sys.unitaries.items()}
    c = _coords(basis, np.stack(list(sys.effects.values()))).T
    unit = vectorize(np.eye(sys.dim), basis)

    m = minimize_affine(x0, trans, c, unit, sys.labels, tol)
    m = _normalize(m, tol, max_steps)

    dev = realization_behaviour(m, check_depth).max_deviation(behaviour_prefix(sys, rho0, check_depth))
    if dev > tol:
        raise NumericalError(f"minimized behaviour deviates by {dev:.3g} at depth <= {check_depth}")
    return MinimalRealization(
        m.dim,
        m.initial,
        m.transitions,
        m.output,
        m.labels,
        m.extreme_points,
        sys.dim**2,
        check_depth,
        dev,
    )


# ---------------------------------------------------------------------------
# Orbits and eventually periodic streams


def _close(u, v, tol: float) -> bool:
    return len(u) == len(v) and all(abs(x - y) <= tol for x, y in zip(u, v))


def _seq_close(xs, ys, tol: float) -> bool:
    return len(xs) == len(ys) and all(_close(x, y, tol) for x, y in zip(xs, ys))


@dataclass(frozen=True, eq=False)
class EventuallyPeriodicStream:
    """
    The stream ``preperiod . period . period . ...`` of observation vectors.

    Instances are kept in canonical form: shortest period, then shortest
    preperiod.  Equality compares canonical forms entrywise within ``tol``.
    """

    preperiod: tuple[tuple[float, ...], ...]
    period: tuple[tuple[float, ...], ...]
    tol: float = field(default=DEFAULT_TOL, compare=False)

    def __post_init__(self):
        pre = tuple(tuple(float(x) for x in v) for v in self.preperiod)
        per = tuple(tuple(float(x) for x in v) for v in self.period)
        if not per:
            raise ValidationError("period must be nonempty")
        tol = self.tol
        p = len(per)
        for q in range(1, p + 1):
            if p % q == 0 and all(_close(per[i], per[i % q], tol) for i in range(p)):
                per = per[:q]
                break
        while pre and _close(pre[-1], per[-1], tol):
            per = (pre[-1],) + per[:-1]
            pre = pre[:-1]
        object.__setattr__(self, "preperiod", pre)
        object.__setattr__(self, "period", per)

    def __getitem__(self, k: int) -> tuple[float, ...]:
        q = len(self.preperiod)
        return self.preperiod[k] if k < q else self.period[(k - q) % len(self.period)]

    def prefix(self, n: int) -> list[tuple[float, ...]]:
        return [self[k] for k in range(n)]

    def tail(self) -> EventuallyPeriodicStream:
        if self.preperiod:
            return EventuallyPeriodicStream(self.preperiod[1:], self.period, self.tol)
        return EventuallyPeriodicStream((), self.period[1:] + self.period[:1], self.tol)

    def isclose(self, other: EventuallyPeriodicStream, tol: float | None = None) -> bool:
        tol = self.tol if tol is None else tol
        return _seq_close(self.preperiod, other.preperiod, tol) and _seq_close(self.period, other.period, tol)

    def __eq__(self, other):
        if not isinstance(other, EventuallyPeriodicStream):
            return NotImplemented
        return self.isclose(other)

    __hash__ = None

    def __repr__(self):
        return f"EventuallyPeriodicStream(preperiod={list(self.preperiod)}, period={list(self.period)})"


@dataclass(frozen=True, eq=False)
class Orbit:
    preperiod: int
    period: int
    states: tuple[np.ndarray, ...]


def orbit_cycle(
    sys: QuantumSystem,
    rho0,
    tol: float = DEFAULT_TOL,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> Orbit:
    """
    Iterate the single unitary of ``sys`` until a state recurs.

    Returns the first recurrence ``states[q + p] ~ states[q]`` (max-norm
    within ``tol``) with ``q`` and ``p`` minimal; ``states`` holds the
    ``q + p`` distinct states of the orbit.
    """
    if len(sys.alphabet) != 1:
        raise ValidationError(f"orbit_cycle needs a single unitary, system has letters {sys.alphabet}")
    if max_steps < 1:
        raise ValidationError(f"max_steps must be >= 1, got {max_steps}")
    letter = sys.alphabet[0]
    rho = sys.check_state(rho0)
    seen = [rho]
    closest = np.inf
    for j in range(1, max_steps + 1):
        rho = sys.evolve(rho, letter)
        dist = np.max(np.abs(np.array(seen) - rho), axis=(1, 2))
        hits = np.nonzero(dist <= tol)[0]
        if hits.size:
            q = int(hits[0])
            return Orbit(q, j - q, tuple(seen))
        closest = min(closest, float(dist.min()))
        seen.append(rho)
    raise CycleNotFoundError(
        f"no recurrence within {max_steps} steps; closest distance {closest:.3g}", closest
    )


def reachable_suffixes(
    sys: QuantumSystem,
    rho0,
    tol: float = DEFAULT_TOL,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> list[EventuallyPeriodicStream]:
    """
    Distinct streams obtained from the observation stream of ``rho0`` by
    repeatedly dropping its first element, in order of first appearance.
    """
    orb = orbit_cycle(sys, rho0, tol, max_steps)
    obs = [tuple(sys.observe(s)) for s in orb.states]
    q = orb.preperiod
    stream = EventuallyPeriodicStream(tuple(obs[:q]), tuple(obs[q:]), tol)
    out: list[EventuallyPeriodicStream] = []
    for _ in range(q + orb.period):
        if not any(stream.isclose(s) for s in out):
            out.append(stream)
        stream = stream.tail()
    return out

