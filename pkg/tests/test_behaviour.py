import numpy as np
import pytest

from oracles import density_behaviour, random_density, random_dfa, random_test, random_unitary
from qcoalg.automata import language_prefix
from qcoalg.behaviour import (
    ObservedSystem,
    derivative,
    token_to_word,
    unfold,
    word_count,
    word_to_token,
    words,
)
from qcoalg.errors import ValidationError
from qcoalg.quantum import QuantumSystem, behaviour_prefix


def test_words_shortlex():
    assert list(words("ba", 2)) == ["", "a", "b", "aa", "ab", "ba", "bb"]
    assert list(words("x", 0)) == [""]


def test_word_count():
    for k in (1, 2, 3):
        for n in range(5):
            assert word_count(k, n) == len(list(words("abc"[:k], n)))


def test_tokens():
    assert word_to_token("") == "ε" and token_to_word("ε") == ""
    assert word_to_token("ab") == "ab" == token_to_word("ab")


def test_alphabet_validation():
    with pytest.raises(ValidationError):
        ObservedSystem(lambda x: (x, {}), ("ab",))
    with pytest.raises(ValidationError):
        ObservedSystem(lambda x: (x, {}), ("ε",))


def counter():
    """States are integers; observe parity, letters add 1 or 2."""
    return ObservedSystem(lambda n: (n % 2, {"a": n + 1, "b": n + 2}), ("a", "b"))


def test_unfold_applies_letters_left_to_right():
    # Non-commuting letters: 'd' doubles, 'i' increments.
    sys = ObservedSystem(lambda n: (n, {"d": 2 * n, "i": n + 1}), ("d", "i"))
    table = unfold(sys, 1, 2)
    assert table["di"] == 3 and table["id"] == 4


def test_unfold_is_coherent():
    t5 = unfold(counter(), 0, 5)
    t3 = unfold(counter(), 0, 3)
    assert {w: t5[w] for w in t3} == t3
    assert list(t5) == list(words("ab", 5))


def test_unfold_matches_dfa_language(rng):
    for _ in range(30):
        d = random_dfa(rng)
        table = unfold(d.as_system(), d.initial, 6)
        assert frozenset(w for w, ok in table.items() if ok) == language_prefix(d, d.initial, 6).accepted


def test_unfold_matches_quantum_prefix(rng):
    for _ in range(10):
        us = {a: random_unitary(rng, 3) for a in "ab"}
        es = random_test(rng, 3, 2)
        sys = QuantumSystem(3, us, {"0": es[0], "1": es[1]}, True)
        rho = random_density(rng, 3)
        table = unfold(sys.as_system(), rho, 4)
        pref = behaviour_prefix(sys, rho, 4)
        for w in words("ab", 4):
            assert np.max(np.abs(np.array(table[w]) - pref[w])) <= 1e-9
            assert np.max(np.abs(np.array(pref[w]) - density_behaviour(us, es, rho, w))) <= 1e-9


def test_morphism_preserves_behaviour():
    # n -> n mod 2 is a coalgebra morphism from the counter to a two-state system.
    small = ObservedSystem(lambda p: (p, {"a": 1 - p, "b": p}), ("a", "b"))
    for n in range(6):
        assert unfold(counter(), n, 4) == unfold(small, n % 2, 4)


def test_derivative_of_unfold():
    t = unfold(counter(), 0, 4)
    assert derivative(t, "a") == unfold(counter(), 1, 3)
    assert derivative(t, "b") == unfold(counter(), 2, 3)


def test_negative_depth():
    with pytest.raises(ValidationError):
        unfold(counter(), 0, -1)
