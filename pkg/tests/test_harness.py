from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from owfbench.candidates import (
    make_always_zero,
    make_brute_force,
    make_identity,
    make_identity_inverter,
    make_never_halting,
    make_random_guess,
    make_staggered_inverter,
)
from owfbench.harness import (
    CandidateFunction,
    Coins,
    CoinTape,
    ContractViolation,
    DomainError,
    InverterProgram,
    Kind,
    Meter,
    OutOfFuel,
    Status,
    TapeExhausted,
    estimate_delta,
    evaluate,
    exact_delta,
    measure_delta,
    pmap,
    run_inverter,
    sphere_deltas,
    success_set,
)
from owfbench.strata import CapExceeded, InputString, SAMPLED, exact_density

IDENT = make_identity()


def test_meter_counts_and_raises():
    m = Meter(5)
    m.tick(3)
    assert m.remaining == 2
    with pytest.raises(OutOfFuel) as info:
        m.tick(3)
    assert info.value.meter is m
    assert m.steps == 5


def test_child_meter_charges_parent():
    root = Meter(100)
    child = root.limited(4)
    child.tick(3)
    assert root.steps == 3
    with pytest.raises(OutOfFuel) as info:
        child.tick(2)
    assert info.value.meter is child
    assert root.steps == 4


def test_parent_budget_binds_first():
    root = Meter(3)
    child = root.limited(10)
    with pytest.raises(OutOfFuel) as info:
        child.tick(5)
    assert info.value.meter is root


def test_coins_sequential():
    c = Coins("1011")
    assert c.read(2) == "10"
    assert c.read_int(2) == 3
    with pytest.raises(TapeExhausted):
        c.read()


def test_tape_enumeration_and_derivation():
    assert [t.bits for t in CoinTape.enumerate(2)] == ["00", "01", "10", "11"]
    assert CoinTape.derive(4, 30, "a") == CoinTape.derive(4, 30, "a")
    assert len(CoinTape.derive(4, 30, "a")) == 30
    with pytest.raises(ValueError):
        CoinTape("0x")


def test_evaluate_contract():
    assert evaluate(IDENT, "0110") == ("0110", 5)
    slow = CandidateFunction("slow", lambda x, m: (m.tick(100), x)[1], lambda n: n, lambda n: 3)
    with pytest.raises(ContractViolation):
        evaluate(slow, "01")
    short = CandidateFunction("short", lambda x, m: x[1:], lambda n: n, lambda n: 3)
    with pytest.raises(ContractViolation):
        evaluate(short, "01")
    even = CandidateFunction("even", lambda x, m: x, lambda n: n, lambda n: 1, domain=lambda n: n % 2 == 0)
    with pytest.raises(DomainError):
        evaluate(even, "011")


def test_total_programs_need_a_bound():
    with pytest.raises(ValueError):
        InverterProgram("t", lambda y, n, c, m: y, kind=Kind.TOTAL_POLY)


def test_run_statuses():
    y = "0101"
    assert run_inverter(make_identity_inverter(), IDENT, y, 4, CoinTape(""), 10).status is Status.SUCCESS
    wrong = run_inverter(make_always_zero(), IDENT, y, 4, CoinTape(""), 10)
    assert wrong.status is Status.WRONG_ANSWER and wrong.answer == "0000"
    stuck = run_inverter(make_never_halting(), IDENT, y, 4, CoinTape(""), 17)
    assert stuck.status is Status.FUEL_EXHAUSTED and stuck.steps_used == 17
    greedy = InverterProgram("greedy", lambda y, n, c, m: c.read(8), tape_length=lambda n: 2,
                             kind=Kind.PARTIAL_WITH_ERRORS)
    assert run_inverter(greedy, IDENT, y, 4, CoinTape("01"), 10).status is Status.TAPE_EXHAUSTED


def test_run_rejects_bad_tape_and_fuel():
    with pytest.raises(ValueError):
        run_inverter(make_random_guess(), IDENT, "01", 2, CoinTape("0"), 10)
    with pytest.raises(ValueError):
        run_inverter(make_identity_inverter(), IDENT, "01", 2, CoinTape(""), 0)


def test_total_program_over_its_bound_is_a_contract_violation():
    liar = InverterProgram("liar", lambda y, n, c, m: (m.tick(50), y)[1], fuel_bound=lambda n: 5)
    with pytest.raises(ContractViolation):
        run_inverter(liar, IDENT, "01", 2, CoinTape(""), 100)
    # below the declared bound the caller just ran out of fuel
    assert run_inverter(liar, IDENT, "01", 2, CoinTape(""), 3).status is Status.FUEL_EXHAUSTED


def test_random_guess_exact_delta():
    for bits in ("0000", "1011"):
        est = exact_delta(make_random_guess(), IDENT, InputString(bits), fuel=10)
        assert est.delta == Fraction(1, 16)
        assert est.trials == 16 and est.max_halting_steps == 5


def test_brute_force_exact_delta_and_verification():
    from owfbench.candidates import make_const_zero

    f = make_const_zero()
    # every preimage of 0^n counts, so the first candidate string already wins
    est = exact_delta(make_brute_force(f), f, InputString("1101"), fuel=10_000)
    assert est.delta == 1 and est.max_halting_steps == 6


def test_staggered_delta_and_fuel():
    A = make_staggered_inverter()
    x = InputString("0110")
    # v in 0..7, v=7 loops, even v answer correctly; 4 of 8 tapes win
    assert exact_delta(A, IDENT, x, fuel=100).delta == Fraction(1, 2)
    # steps = popcount + v + 1 = 3 + v; fuel 3 admits only v = 0
    assert exact_delta(A, IDENT, x, fuel=3).delta == Fraction(1, 8)


@settings(max_examples=30, deadline=None)
@given(st.text("01", min_size=1, max_size=6), st.integers(1, 20), st.integers(0, 20))
def test_fuel_monotonicity(bits, fuel, extra):
    A = make_staggered_inverter()
    x = InputString(bits)
    assert exact_delta(A, IDENT, x, fuel).delta <= exact_delta(A, IDENT, x, fuel + extra).delta


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**64 - 1), st.text("01", min_size=1, max_size=8))
def test_sampled_replay(seed, bits):
    x = InputString(bits)
    a = estimate_delta(make_random_guess(), IDENT, x, 50, 20, seed)
    b = estimate_delta(make_random_guess(), IDENT, x, 50, 20, seed)
    assert a == b


def test_sampled_delta_interval():
    est = estimate_delta(make_random_guess(), IDENT, InputString("01"), 4000, 10, seed=3)
    assert est.mode == SAMPLED and abs(est.delta - 0.25) <= est.half_width


def test_tape_exhaustion_is_fatal_in_aggregation():
    greedy = InverterProgram("greedy", lambda y, n, c, m: c.read(8), tape_length=lambda n: 1,
                             kind=Kind.PARTIAL_WITH_ERRORS)
    with pytest.raises(ContractViolation):
        exact_delta(greedy, IDENT, InputString("01"), 10)


def test_caps():
    with pytest.raises(CapExceeded):
        exact_delta(make_random_guess(), IDENT, InputString("0" * 12), 20, tape_cap=10)
    with pytest.raises(CapExceeded):
        sphere_deltas(make_random_guess(), IDENT, 30, 10)
    with pytest.raises(ValueError):
        measure_delta(make_random_guess(), IDENT, InputString("0"), 10, mode=SAMPLED)


def test_pmap_order_and_parallel_equality():
    items = list(range(40))
    assert pmap(lambda v: v * v, items, 4) == [v * v for v in items]
    serial = sphere_deltas(make_random_guess(), IDENT, 5, 10, SAMPLED, trials=30, seed=2)
    parallel = sphere_deltas(make_random_guess(), IDENT, 5, 10, SAMPLED, trials=30, seed=2, workers=4)
    assert serial == parallel


def test_success_set_exact_and_sampled():
    A = make_staggered_inverter()
    S = success_set(A, IDENT, 4, c=1, fuel=100)
    # every delta is 1/2 > 1/4
    assert exact_density(S, 4).value == 1
    T = success_set(make_random_guess(), IDENT, 4, c=1, fuel=10, mode=SAMPLED, trials=200, seed=5)
    assert T.sampled_membership
    assert not T.contains(InputString("0000"))
