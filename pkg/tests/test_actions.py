"""Finite actions, transversals, spherical averages, and joint distributions."""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from horolab.actions import (
    FiniteAction,
    FiniteQuotient,
    ball_average,
    convergence_experiment,
    joint_empirical,
    left_translation_action,
    make_transversal,
    parity_quotient_config,
    spherical_average,
)
from horolab.errors import ActionNotTransitive, RelationViolated
from horolab.groups import free_group

from oracles import enumeration_average, enumeration_ball_average


def flip_action(spec):
    perms = {label: [1, 0] for label in spec.generators.symbols}
    return FiniteAction.from_config(spec, {"size": 2, "perms": perms})


def s3_action(spec):
    return FiniteAction.from_config(
        spec,
        {
            "size": 6,
            "perms": {
                "a": [1, 0, 5, 4, 3, 2],
                "b": [2, 4, 3, 0, 5, 1],
                "B": [3, 5, 0, 2, 1, 4],
            },
        },
    )


@pytest.fixture(scope="module")
def parity(f2):
    return make_transversal(f2, parity_quotient_config(f2))


def test_action_validation_catches_bad_inverse(f2):
    with pytest.raises(RelationViolated):
        FiniteAction.from_config(
            f2,
            {"size": 3, "perms": {"a": [1, 2, 0], "A": [1, 2, 0], "b": [1, 0, 2], "B": [1, 0, 2]}},
        )


def test_action_validation_catches_relation(z2z3):
    # b has order 3; a transposition violates the rule bb -> B
    with pytest.raises(RelationViolated):
        FiniteAction.from_config(z2z3, {"size": 2, "perms": {"a": [1, 0], "b": [1, 0], "B": [1, 0]}})


def test_action_rejects_nontransitive(f2):
    with pytest.raises(ActionNotTransitive):
        FiniteAction.from_config(
            f2,
            {"size": 4, "perms": {"a": [1, 0, 3, 2], "b": [1, 0, 2, 3]}},
        )


def test_cycle_notation(f2):
    act = FiniteAction.from_config(
        f2, {"size": 3, "perms": {"a": "(0 1)", "b": "(0 1 2)"}}
    )
    assert act.perms[f2.parse("a")] == (1, 0, 2)
    assert act.perms[f2.parse("B")] == (2, 0, 1)


def test_left_translation_matches_config(f2):
    built = left_translation_action(f2, {"a": (1, 0, 2), "b": (1, 2, 0)})
    shipped = s3_action(f2)
    assert built.size == shipped.size == 6
    for c in f2.chars:
        assert built.perms[c] == shipped.perms[c]


def test_word_perm_convention(f2):
    act = s3_action(f2)
    w = f2.parse("a b")
    pi = act.word_perm(w)
    for x in range(6):
        assert pi[x] == act.apply(w, x)
        # g = ab acts by first b then a
        assert pi[x] == act.perms[f2.parse("a")][act.perms[f2.parse("b")][x]]


def test_make_transversal_parity(f2, parity):
    assert [f2.format(w) for w in parity.reps] == ["", "a"]


def test_make_transversal_trivial(f2):
    t = make_transversal(f2, {"size": 1, "table": [[0]], "images": {"a": 0, "b": 0}})
    assert t.reps == ("",)


def test_make_transversal_klein(f2):
    q = {
        "size": 4,
        "table": [[0, 1, 2, 3], [1, 0, 3, 2], [2, 3, 0, 1], [3, 2, 1, 0]],
        "images": {"a": 1, "b": 2},
    }
    t = make_transversal(f2, q)
    assert [f2.format(w) for w in t.reps] == ["", "a", "b", "ab"]


def test_quotient_relation_violated(z2z3):
    with pytest.raises(RelationViolated):
        FiniteQuotient.from_config(
            z2z3, {"size": 2, "table": [[0, 1], [1, 0]], "images": {"a": 1, "b": 1, "B": 1}}
        )


def test_constant_function(f2, parity):
    act = s3_action(f2)
    f = [Fraction(5, 7)] * 6
    for n in (0, 1, 4):
        assert spherical_average(f2, act, f, 2, n, parity) == Fraction(5, 7)


def test_parity_alternation(f2, parity):
    act = flip_action(f2)
    f = [1, 0]
    for n in range(1, 8):
        only_e = spherical_average(f2, act, f, 0, n, [""])
        assert only_e == (1 if n % 2 == 0 else 0)
        assert spherical_average(f2, act, f, 0, n, parity) == Fraction(1, 2)


def test_average_matches_enumeration_oracle(f2, parity):
    act = s3_action(f2)
    f = [1, 0, 0, 0, 0, 0]
    for n in (3, 5, 7):
        for x in (0, 4):
            assert spherical_average(f2, act, f, x, n, parity) == enumeration_average(
                f2, act, f, x, n, parity.reps
            )


def test_ball_average_matches_enumeration(f2, parity):
    act = s3_action(f2)
    f = [0, 1, 0, 0, 1, 0]
    got = ball_average(f2, act, f, 1, 5, parity)
    assert got == enumeration_ball_average(f2, act, f, 1, 5, parity.reps)


@given(st.integers(0, 5), st.integers(1, 6))
@settings(max_examples=25, deadline=None)
def test_average_bounds(x, n):
    spec = free_group(2)
    act = s3_action(spec)
    f = [Fraction(k, 3) for k in (2, 0, 1, 3, 1, 2)]
    avg = spherical_average(spec, act, f, x, n, [""])
    assert min(f) <= avg <= max(f)


def test_right_translation_covariance(f2, parity):
    # replacing x by k0 x and K by K k0^{-1} leaves every average unchanged
    act = s3_action(f2)
    f = [1, 0, 0, 1, 0, 0]
    k0 = f2.parse("a b")
    k0x = act.apply(k0, 2)
    shifted_K = [f2.mul(k, f2.invert(k0)) for k in parity.reps]
    for n in (2, 3, 6):
        assert spherical_average(f2, act, f, 2, n, [f2.mul(k, k0) for k in parity.reps]) == \
            spherical_average(f2, act, f, k0x, n, parity.reps)
        assert spherical_average(f2, act, f, k0x, n, shifted_K) == \
            spherical_average(f2, act, f, 2, n, parity.reps)


def test_ball_consistency_smoke(f2):
    # action through Z/3 (all generators +1): K = {e} ball averages of f and
    # f о sigma_a approach the same limit
    act = FiniteAction.from_config(
        f2, {"size": 3, "perms": {"a": [1, 2, 0], "b": [1, 2, 0]}}
    )
    f = [1, 0, 0]
    fa = [f[act.perms[f2.parse("a")][x]] for x in range(3)]
    b1 = ball_average(f2, act, f, 0, 12, [""])
    b2 = ball_average(f2, act, fa, 0, 12, [""])
    assert abs(b1 - b2) < Fraction(1, 50)


def test_convergence_experiment_s3(f2, parity):
    act = s3_action(f2)
    f = [1, 0, 0, 0, 0, 0]
    rows = convergence_experiment(f2, act, f, 0, parity, range(4, 13))
    assert rows[-1]["n"] == 12
    assert float(rows[-1]["deviation"]) <= 0.02
    mean = Fraction(1, 6)
    for r in rows:
        assert r["deviation"] == abs(r["average"] - mean)


def test_convergence_nonconvergence_witness(f2):
    act = flip_action(f2)
    rows = convergence_experiment(f2, act, [1, 0], 0, [""], range(1, 9))
    assert all(r["deviation"] == Fraction(1, 2) for r in rows)


def test_joint_trivial_space(f2, parity):
    act = FiniteAction.from_config(f2, {"size": 1, "perms": {"a": [0], "b": [0]}})
    rep = joint_empirical(f2, act, 0, parity, 6, 2)
    assert rep.tv_distance == 0


def test_joint_x_marginal_z2(f2, parity):
    act = flip_action(f2)
    for n in (4, 7):
        rep = joint_empirical(f2, act, 0, parity, n, 2)
        assert rep.x_marginal == [Fraction(1, 2), Fraction(1, 2)]


def test_joint_dp_matches_enumeration(f2, parity):
    act = s3_action(f2)
    a = joint_empirical(f2, act, 0, parity, 6, 2, use_dp=True)
    b = joint_empirical(f2, act, 0, parity, 6, 2, use_dp=False)
    assert a.tv_distance == b.tv_distance
    assert a.x_marginal == b.x_marginal
    assert a.pattern_marginal == b.pattern_marginal


def test_joint_tv_decreases(f2, parity):
    act = s3_action(f2)
    tvs = [float(joint_empirical(f2, act, 0, parity, n, 2).tv_distance) for n in (6, 8, 10, 12)]
    assert all(b <= a + 0.01 for a, b in zip(tvs, tvs[1:]))
    assert tvs[-1] <= 0.05


def test_joint_enumeration_route_z2z3(z2z3):
    act = FiniteAction.from_config(
        z2z3, {"size": 3, "perms": {"a": [1, 0, 2], "b": [1, 2, 0], "B": [2, 0, 1]}}
    )
    q = {"size": 2, "table": [[0, 1], [1, 0]], "images": {"a": 1, "b": 0, "B": 0}}
    t = make_transversal(z2z3, q)
    assert [z2z3.format(w) for w in t.reps] == ["", "a"]
    rep = joint_empirical(z2z3, act, 0, t, 8, 2)
    assert rep.tv_distance < Fraction(1, 10)
