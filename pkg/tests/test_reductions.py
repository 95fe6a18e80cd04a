from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from owfbench.candidates import (
    make_brute_force,
    make_first_bit_zero_inverter,
    make_genease,
    make_genease_fast,
    make_identity,
    make_identity_inverter,
    make_never_halting,
    make_random_guess,
    make_staggered_inverter,
)
from owfbench.harness import CoinTape, Status, exact_delta, run_inverter, sphere_deltas
from owfbench.reductions import (
    CONSISTENT,
    VIOLATED,
    TapeBudgetError,
    aggregate_success,
    amplified_segments,
    amplified_success,
    amplify,
    averaging_split,
    chernoff_plan,
    chernoff_tail,
    clip,
    definition_check,
    measure_sphere,
    achievement_ratio,
    repetitions_to_clear,
)
from owfbench.strata import INCONCLUSIVE, SAMPLED, InputString

IDENT = make_identity()


@pytest.mark.parametrize(
    "n, c, k, eps",
    [(4, 1, 64, 0.125), (2, 1, 8, 0.25), (4, 0.5, 8, 0.125), (6, 1, 216, 2.0**-4), (3, 2, 729, 2.0**-2.5)],
)
def test_chernoff_plans(n, c, k, eps):
    plan = chernoff_plan(n, c)
    assert (plan.k, plan.epsilon) == (k, eps)


def test_chernoff_plan_rejects_small_inputs():
    with pytest.raises(ValueError):
        chernoff_plan(1, 1)
    with pytest.raises(ValueError):
        chernoff_plan(4, 0)


def test_chernoff_tail_is_below_epsilon_on_plan():
    for n in range(4, 12):
        plan = chernoff_plan(n, 1)
        assert chernoff_tail(n, 1, plan.k) <= plan.epsilon


def test_amplified_success_closed_form():
    assert amplified_success(Fraction(1, 2), 3) == Fraction(7, 8)
    assert repetitions_to_clear(Fraction(1, 2), Fraction(3, 4)) == 3
    assert repetitions_to_clear(Fraction(1, 2), Fraction(7, 8)) == 4
    assert repetitions_to_clear(1, Fraction(1, 2)) == 1


@settings(max_examples=60)
@given(st.fractions(min_value=Fraction(1, 1000), max_value=1), st.fractions(min_value=0, max_value=Fraction(999, 1000)))
def test_repetitions_to_clear_is_minimal(delta, threshold):
    k = repetitions_to_clear(delta, threshold)
    assert amplified_success(delta, k) > threshold
    assert k == 1 or amplified_success(delta, k - 1) <= threshold


def test_amplify_exact_small():
    A = make_random_guess()
    amp = amplify(A, IDENT, 1, repetitions=2)
    assert amp.tape_length(2) == 4
    est = exact_delta(amp, IDENT, InputString("10"), fuel=amp.fuel_bound(2))
    assert est.delta == Fraction(7, 16)
    assert amplified_segments(A, 2, 2) == [(0, 2), (2, 4)]


def test_amplify_uses_plan_by_default():
    amp = amplify(make_random_guess(), IDENT, 1)
    assert amp.tape_length(3) == 27 * 3


def test_amplify_requires_total_and_bounded_tape():
    with pytest.raises(ValueError):
        amplify(make_staggered_inverter(), IDENT, 1)
    amp = amplify(make_random_guess(), IDENT, 2, max_tape_bits=1000)
    with pytest.raises(TapeBudgetError):
        amp.tape_length(8)


def test_clip_reproduces_fast_runs():
    B = make_staggered_inverter()
    C = clip(B, 1)
    y = "0110"
    for tape in CoinTape.enumerate(3):
        full = run_inverter(B, IDENT, y, 4, tape, 1000)
        cut = run_inverter(C, IDENT, y, 4, tape, 1000)
        if full.halted and full.steps_used <= 4:
            assert cut == full
        else:
            assert cut.status is Status.FUEL_EXHAUSTED and cut.steps_used == 4


def test_ratio_random_guess():
    r = achievement_ratio(make_random_guess(), IDENT, InputString("0101"), fuel=10)
    assert r.T == 5 and r.delta == Fraction(1, 16) and r.ratio == 16 * 5
    assert r.expected_ratio == 80.0


def test_ratio_infinite_when_nothing_succeeds():
    r = achievement_ratio(make_never_halting(), IDENT, InputString("01"), fuel=30)
    assert r.infinite and not r.halted and r.T is None


def test_averaging_examples():
    assert averaging_split([1, 0, 0, 0], Fraction(1, 4)) == (1, Fraction(1, 4))
    assert averaging_split([Fraction(1, 2)] * 4, Fraction(1, 2)) == (4, 1)
    assert averaging_split([0.25, 0.5, 0.0], 0.25) == (2, Fraction(2, 3))
    with pytest.raises(ValueError):
        averaging_split([0.1, 0.1], 0.5)
    with pytest.raises(ValueError):
        averaging_split([], 0)


@given(st.lists(st.fractions(min_value=0, max_value=1), min_size=1, max_size=50), st.fractions(0, 1))
def test_averaging_guarantee(values, scale):
    rho = scale * sum(values) / len(values)
    k, frac = averaging_split(values, rho)
    assert frac >= rho / 2


def test_aggregate_values():
    assert aggregate_success(make_identity_inverter(), IDENT, 4, 10).value == 1
    assert aggregate_success(make_first_bit_zero_inverter(), IDENT, 4, 10).value == Fraction(1, 2)
    assert aggregate_success(make_random_guess(), IDENT, 4, 10).value == Fraction(1, 16)


def test_aggregate_sampled():
    agg = aggregate_success(make_random_guess(), IDENT, 3, 10, mode=SAMPLED, samples=4000, seed=8)
    assert abs(agg.value - 0.125) <= agg.half_width
    assert agg == aggregate_success(make_random_guess(), IDENT, 3, 10, mode=SAMPLED, samples=4000, seed=8)


def test_aggregate_matches_mean_delta():
    A, f = make_staggered_inverter(), IDENT
    deltas = [d.delta for d in sphere_deltas(A, f, 5, 9)]
    assert aggregate_success(A, f, 5, 9).value == sum(deltas) / len(deltas)


def test_measure_sphere_counts():
    m = measure_sphere(make_random_guess(), IDENT, 4, 1, fuel=10)
    # delta = 1/16 everywhere: below 1/4, ratio 80 > 4
    assert m.noticeable.value == 0 and m.unnoticed.value == 1
    assert m.efficient.value == 0 and m.inefficient.value == 1
    assert m.plan.k == 64


def test_definition_check_verdicts():
    rep = definition_check(make_brute_force(IDENT), IDENT, range(3, 9), 1, fuel=lambda n: 2**n * (n + 2))
    assert rep.verdicts["strong_ppt"] == VIOLATED
    # nothing escapes inversion, so the weak condition fails too
    assert rep.verdicts["weak_ppt"] == VIOLATED
    assert all(r.noticeable.value == 1 for r in rep.rows)
    rep = definition_check(make_never_halting(), IDENT, range(3, 9), 1, fuel=50)
    assert rep.verdicts["strong_ppt"] == CONSISTENT
    assert rep.verdicts["strong_partial"] == CONSISTENT
    assert rep.verdicts["weak_partial"] == CONSISTENT
    assert rep.verdicts["noticeable_strongly_negligible"] == CONSISTENT


def test_definition_check_short_window_is_inconclusive():
    rep = definition_check(make_identity_inverter(), IDENT, range(3, 6), 1, fuel=10)
    assert rep.classifications["noticeable"] is None
    assert rep.verdicts["noticeable_strongly_negligible"] == INCONCLUSIVE


def test_definition_check_genease():
    f = make_genease()
    rep = definition_check(make_genease_fast(), f, range(4, 12), 1, fuel=64)
    assert rep.verdicts["strong_ppt"] == VIOLATED
    assert [r.noticeable.value for r in rep.rows][:2] == [Fraction(3, 4), Fraction(7, 8)]


def test_definition_check_sampled_parallel_equals_serial():
    args = (make_random_guess(), IDENT, range(4, 8), 1, 20)
    kw = dict(mode=SAMPLED, trials=40, inputs=32, seed=77)
    assert definition_check(*args, **kw) == definition_check(*args, **kw, workers=4)
