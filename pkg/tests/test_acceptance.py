"""
Acceptance gate.  Each test is one criterion; a PASS/FAIL line per criterion
is printed in the terminal summary.  Run directly with
``python3 tests/test_acceptance.py``.
"""

import sys
import time

import numpy as np
import pytest

from oracles import (
    density_behaviour,
    moore_classes,
    random_density,
    random_dfa,
    random_effect,
    random_state_vector,
    random_test,
    random_unitary,
)
from qcoalg import linalg
from qcoalg.automata import Dfa, language_prefix, minimize_dfa
from qcoalg.behaviour import unfold, words
from qcoalg.convdist import Distribution, dist_flatten, dist_map, dist_unit
from qcoalg.markov import MarkovChain, behaviour_stream
from qcoalg.minimize import EventuallyPeriodicStream, minimal_realization, reachable_suffixes, realization_behaviour
from qcoalg.quantum import (
    QuantumAutomaton,
    QuantumSystem,
    WalkSpec,
    accept_probability,
    behaviour_prefix,
    pure_density,
    q_step,
    square_walk,
    walk_distribution,
)

SEED = 7


def test_criterion_1_line_walk_table():
    """1  line walk n_max=4 reproduces phi_1..phi_3 within 1e-9 in under 1 s"""
    t0 = time.perf_counter()
    stream = walk_distribution(WalkSpec.line(4), 3)
    elapsed = time.perf_counter() - t0
    expected = [
        {"0": 1.0},
        {"-1": 0.5, "1": 0.5},
        {"-2": 0.25, "0": 0.5, "2": 0.25},
        {"-3": 0.125, "-1": 0.625, "1": 0.125, "3": 0.125},
    ]
    for phi, want in zip(stream, expected, strict=True):
        assert phi.support == set(want)
        for k, p in want.items():
            assert abs(phi[k] - p) <= 1e-9
    assert elapsed < 1.0


def test_criterion_2_markov_square():
    """2  Markov square walk from x0 alternates phi_1, phi_2 up to n = 10 within 1e-12"""
    half = lambda x, y: Distribution({x: 0.5, y: 0.5})  # noqa: E731
    chain = MarkovChain(
        ("x0", "x1", "x2", "x3"),
        {"x0": half("x1", "x2"), "x1": half("x0", "x3"), "x2": half("x0", "x3"), "x3": half("x1", "x2")},
    )
    s = behaviour_stream(chain, dist_unit("x0"), 21)
    phi1 = {"x1": 0.5, "x2": 0.5}
    phi2 = {"x0": 0.5, "x3": 0.5}
    assert s[0].isclose({"x0": 1.0}, 1e-12)
    for n in range(0, 11):
        assert s[2 * n + 1].isclose(phi1, 1e-12)
        if n >= 1:
            assert s[2 * n].isclose(phi2, 1e-12)


def test_criterion_3_square_walk_minimization():
    """3  square walk minimizes to p -> 1-p on [0,1], matching to depth 20 within 1e-8 in under 1 s"""
    t0 = time.perf_counter()
    spec = square_walk()
    sys_, rho = spec.system(), spec.initial_state()
    m = minimal_realization(sys_, rho, tol=1e-8, check_depth=20)
    dev = realization_behaviour(m, 20).max_deviation(behaviour_prefix(sys_, rho, 20))
    elapsed = time.perf_counter() - t0
    assert m.dim == 1
    (mat, off), = m.transitions.values()
    assert abs(mat[0, 0] - (-1)) <= 1e-8
    assert abs(off[0] - 1) <= 1e-8
    assert np.max(np.abs(m.observe(np.array([1.0])) - [1, 0, 0, 0])) <= 1e-8
    assert np.max(np.abs(m.observe(np.array([0.0])) - [0, 0.5, 0.5, 0])) <= 1e-8
    assert dev <= 1e-8
    assert elapsed < 1.0


def test_criterion_4_square_walk_suffixes():
    """4  square walk has exactly 2 reachable suffix streams, sigma and sigma'"""
    spec = square_walk()
    sufs = reachable_suffixes(spec.system(), spec.initial_state())
    at0 = (1.0, 0.0, 0.0, 0.0)
    mid = (0.0, 0.5, 0.5, 0.0)
    sigma = EventuallyPeriodicStream((), (at0, mid))
    sigma_prime = EventuallyPeriodicStream((), (mid, at0))
    assert len(sufs) == 2
    assert sufs[0] == sigma and sufs[1] == sigma_prime


def test_criterion_5_dfa_suite():
    """5  minimize_dfa matches a partition-refinement oracle on 200 random DFAs to depth 8 in under 5 s"""
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    for _ in range(200):
        d = random_dfa(rng, 6, 3)
        m = minimize_dfa(d)
        assert len(m.states) == moore_classes(d, d.initial)
        assert language_prefix(m, m.initial, 8) == language_prefix(d, d.initial, 8)
    example = Dfa(
        ("x0", "x1", "x2", "x3"),
        ("a", "b"),
        {
            "x0": {"a": "x0", "b": "x1"},
            "x1": {"a": "x3", "b": "x2"},
            "x2": {"a": "x2", "b": "x2"},
            "x3": {"a": "x2", "b": "x1"},
        },
        frozenset({"x0", "x3"}),
        "x0",
    )
    assert len(minimize_dfa(example).states) == 4
    assert time.perf_counter() - t0 < 5.0


def _random_dist(rng, points):
    k = int(rng.integers(1, min(len(points), 5) + 1))
    chosen = rng.choice(len(points), size=k, replace=False)
    w = rng.dirichlet(np.ones(k))
    # Pairs rather than a dict: equal points must pool their mass.
    return Distribution((points[i], float(x)) for i, x in zip(chosen, w / w.sum()))


def test_criterion_6_property_suites():
    """6  monad laws, quantum step invariants, affinity and acceptance equivalence within 1e-9"""
    rng = np.random.default_rng(SEED)
    labels = list("abcdefg")

    for _ in range(100):
        phi = _random_dist(rng, labels)
        assert dist_flatten(dist_unit(phi)).isclose(phi, 1e-9)
    for _ in range(100):
        phi = _random_dist(rng, labels)
        assert dist_flatten(dist_map(dist_unit, phi)).isclose(phi, 1e-9)
    for _ in range(100):
        inner = [[_random_dist(rng, labels) for _ in range(3)] for _ in range(3)]
        middle = [_random_dist(rng, row) for row in inner]
        ppp = _random_dist(rng, middle)
        lhs = dist_flatten(dist_map(dist_flatten, ppp))
        rhs = dist_flatten(dist_flatten(ppp))
        assert lhs.isclose(rhs, 1e-9)

    for _ in range(100):
        d = int(rng.integers(1, 5))
        es = random_test(rng, d, int(rng.integers(1, 4)))
        sys_ = QuantumSystem(d, {"a": random_unitary(rng, d), "b": random_unitary(rng, d)},
                             {str(i): e for i, e in enumerate(es)}, True)
        obs, succ = q_step(sys_, random_density(rng, d))
        assert abs(float(np.sum(obs)) - 1) <= 1e-9
        for r in succ.values():
            assert abs(linalg.trace(r) - 1) <= 1e-9

    for _ in range(50):
        es = random_test(rng, 2, 2)
        sys_ = QuantumSystem(2, {"a": random_unitary(rng, 2), "b": random_unitary(rng, 2)},
                             {"0": es[0], "1": es[1]}, True)
        r1, r2 = random_density(rng, 2), random_density(rng, 2)
        t = float(rng.uniform())
        mix = behaviour_prefix(sys_, t * r1 + (1 - t) * r2, 3)
        b1, b2 = behaviour_prefix(sys_, r1, 3), behaviour_prefix(sys_, r2, 3)
        for w in words("ab", 3):
            want = t * np.array(b1[w]) + (1 - t) * np.array(b2[w])
            assert np.max(np.abs(np.array(mix[w]) - want)) <= 1e-9

    for _ in range(50):
        d = int(rng.integers(1, 4))
        us = {"a": random_unitary(rng, d), "b": random_unitary(rng, d)}
        e = random_effect(rng, d)
        qa = QuantumAutomaton.build(us, e)
        psi = random_state_vector(rng, d)
        rho = pure_density(psi)
        pref = behaviour_prefix(qa.system, rho, 4)
        for w in words("ab", 4):
            p = accept_probability(qa, psi, w)
            assert abs(p - pref[w][0]) <= 1e-9
            assert abs(p - density_behaviour(us, [e], rho, w)[0]) <= 1e-9


def test_criterion_7_cross_module_unfold():
    """7  generic unfold equals language_prefix (exactly) and behaviour_prefix (within 1e-9)"""
    rng = np.random.default_rng(SEED)
    for _ in range(50):
        d = random_dfa(rng, 6, 3)
        for depth in (0, 3, 6):
            table = unfold(d.as_system(), d.initial, depth)
            assert frozenset(w for w, ok in table.items() if ok) == language_prefix(d, d.initial, depth).accepted

    systems = [(square_walk().system(), square_walk().initial_state(), 6),
               (WalkSpec.line(3).system(), WalkSpec.line(3).initial_state(), 3)]
    for _ in range(20):
        d = int(rng.integers(1, 4))
        es = random_test(rng, d, 2)
        sys_ = QuantumSystem(d, {"a": random_unitary(rng, d), "b": random_unitary(rng, d)},
                             {"0": es[0], "1": es[1]}, True)
        systems.append((sys_, random_density(rng, d), 4))
    for sys_, rho, depth in systems:
        table = unfold(sys_.as_system(), rho, depth)
        pref = behaviour_prefix(sys_, rho, depth)
        assert list(table) == list(pref.table)
        for w, v in table.items():
            assert np.max(np.abs(np.asarray(v) - pref[w])) <= 1e-9


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
