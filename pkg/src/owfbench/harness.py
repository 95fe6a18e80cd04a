"""Fuel-metered execution of candidate functions and inverters.

Programs are ordinary Python callables that pay for their work by calling
``meter.tick()``. The harness owns the budget: once a meter runs dry it raises
``OutOfFuel`` and the run is reported as ``FUEL_EXHAUSTED``. Randomized
programs read their coins from an explicit tape, so a run is fully determined
by ``(program, f, y, n, tape, fuel)``.

An inverter routine has the signature::

    routine(y: str, n: int, coins: Coins, meter: Meter) -> str | None

and returns a candidate preimage (or ``None`` to halt without an answer).
The harness never trusts the answer: success is decided by re-evaluating ``f``.
"""

from __future__ import annotations

import enum
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Iterator, Mapping, Sequence, TypeVar

from .seeding import check_seed, derive_bits
from .strata import (
    DEFAULT_CONFIDENCE,
    DEFAULT_ENUMERATION_CAP,
    EXACT,
    SAMPLED,
    CapExceeded,
    InputSetSpec,
    InputString,
    Number,
    Sphere,
    hoeffding_half_width,
    iter_bitstrings,
    noticeable_threshold,
)

DEFAULT_TAPE_CAP = 20

T = TypeVar("T")
R = TypeVar("R")


class OutOfFuel(Exception):
    """Raised by ``Meter.tick`` when a budget is spent; ``meter`` is the one that ran dry."""

    def __init__(self, meter: Meter):
        super().__init__("out of fuel")
        self.meter = meter


class TapeExhausted(Exception):
    """A program asked for more coin bits than its tape holds."""


class ContractViolation(RuntimeError):
    """A function or program broke its declared step bound, tape length or output length."""


class DomainError(ValueError):
    """Input length outside a candidate's domain."""


class Meter:
    """Step counter with a hard budget, optionally nested inside a parent meter.

    Ticks are charged to the whole chain. A child meter models an inner budget
    (e.g. a clipped sub-run); whichever budget is tightest runs out first.
    """

    __slots__ = ("fuel", "steps", "parent")

    def __init__(self, fuel: int, parent: Meter | None = None):
        if fuel < 0:
            raise ValueError("fuel must be non-negative")
        self.fuel = fuel
        self.steps = 0
        self.parent = parent

    @property
    def remaining(self) -> int:
        return self.fuel - self.steps

    def tick(self, k: int = 1) -> None:
        if k < 0:
            raise ValueError("cannot tick a negative amount")
        allowed, culprit = k, None
        m: Meter | None = self
        while m is not None:
            if m.remaining < allowed:
                allowed, culprit = m.remaining, m
            m = m.parent
        m = self
        while m is not None:
            m.steps += allowed
            m = m.parent
        if culprit is not None:
            raise OutOfFuel(culprit)

    def limited(self, fuel: int) -> Meter:
        """A child meter with its own budget that also charges this one."""
        return Meter(fuel, parent=self)


class Coins:
    """Sequential reader over a coin tape."""

    __slots__ = ("_bits", "_pos")

    def __init__(self, bits: str):
        self._bits = bits
        self._pos = 0

    @property
    def remaining(self) -> int:
        return len(self._bits) - self._pos

    def read(self, k: int = 1) -> str:
        if k > self.remaining:
            raise TapeExhausted(f"requested {k} coin bits with {self.remaining} left")
        out = self._bits[self._pos:self._pos + k]
        self._pos += k
        return out

    def read_int(self, k: int) -> int:
        bits = self.read(k)
        return int(bits, 2) if bits else 0


@dataclass(frozen=True)
class CoinTape:
    bits: str = ""

    def __post_init__(self) -> None:
        if self.bits.strip("01"):
            raise ValueError("coin tape must be a binary string")

    def __len__(self) -> int:
        return len(self.bits)

    @staticmethod
    def enumerate(t: int) -> Iterator[CoinTape]:
        return (CoinTape(b) for b in iter_bitstrings(t))

    @classmethod
    def derive(cls, seed: int, t: int, *path: int | str) -> CoinTape:
        return cls(derive_bits(seed, "tape", *path, nbits=t))


@dataclass(frozen=True)
class CandidateFunction:
    """A length-regular function with a step-counting evaluator.

    ``compute(x, meter)`` maps a bit string to a bit string, ticking ``meter``;
    ``step_bound(n)`` is the declared polynomial budget, checked on every call.
    """

    name: str
    compute: Callable[[str, Meter], str]
    output_length: Callable[[int], int]
    step_bound: Callable[[int], int]
    domain: Callable[[int], bool] = lambda n: n >= 0
    params: Mapping[str, Any] = field(default_factory=dict)

    def accepts(self, n: int) -> bool:
        return n >= 0 and bool(self.domain(n))

    def apply(self, x: str, meter: Meter) -> str:
        """Evaluate inside someone else's budget (used by verifying programs)."""
        return self.compute(x, meter)


def evaluate(f: CandidateFunction, x: InputString | str) -> tuple[str, int]:
    """Compute ``f(x)`` and its step count under the declared bound."""
    bits = x.bits if isinstance(x, InputString) else x
    n = len(bits)
    if not f.accepts(n):
        raise DomainError(f"{f.name} is not defined on inputs of length {n}")
    bound = f.step_bound(n)
    meter = Meter(bound)
    try:
        y = f.compute(bits, meter)
    except OutOfFuel:
        raise ContractViolation(f"{f.name} exceeded its step bound {bound} at n={n}") from None
    if len(y) != f.output_length(n):
        raise ContractViolation(f"{f.name} produced {len(y)} bits, declared {f.output_length(n)}")
    return y, meter.steps


class Kind(str, enum.Enum):
    TOTAL_POLY = "total_poly"
    RANDOMIZED_POLY = "randomized_poly"
    PARTIAL_WITH_ERRORS = "partial_with_errors"


@dataclass(frozen=True)
class InverterProgram:
    """An inversion routine with its coin-length and fuel declarations.

    For the two total kinds ``fuel_bound(n)`` is the budget within which every
    run must halt; the harness checks this whenever the caller grants at least
    that much fuel.
    """

    name: str
    routine: Callable[[str, int, Coins, Meter], str | None]
    tape_length: Callable[[int], int] = lambda n: 0
    kind: Kind = Kind.TOTAL_POLY
    fuel_bound: Callable[[int], int] | None = None
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind is not Kind.PARTIAL_WITH_ERRORS and self.fuel_bound is None:
            raise ValueError(f"{self.name}: total programs must declare a fuel bound")

    @property
    def total(self) -> bool:
        return self.kind is not Kind.PARTIAL_WITH_ERRORS


class Status(str, enum.Enum):
    SUCCESS = "success"
    WRONG_ANSWER = "wrong_answer"
    FUEL_EXHAUSTED = "fuel_exhausted"
    TAPE_EXHAUSTED = "tape_exhausted"


@dataclass(frozen=True)
class RunOutcome:
    status: Status
    steps_used: int
    answer: str | None = None

    @property
    def succeeded(self) -> bool:
        return self.status is Status.SUCCESS

    @property
    def halted(self) -> bool:
        return self.status in (Status.SUCCESS, Status.WRONG_ANSWER)


def _verified(f: CandidateFunction, answer: str | None, y: str, n: int) -> bool:
    if answer is None or len(answer) != n or answer.strip("01") or not f.accepts(n):
        return False
    return evaluate(f, answer)[0] == y


def run_inverter(
    A: InverterProgram,
    f: CandidateFunction,
    y: str,
    n: int,
    tape: CoinTape,
    fuel: int,
) -> RunOutcome:
    """Run ``A`` on ``(y, 1^n)`` with the given coins and budget, then verify."""
    t = A.tape_length(n)
    if len(tape) != t:
        raise ValueError(f"{A.name} needs a tape of {t} bits at n={n}, got {len(tape)}")
    if fuel < 1:
        raise ValueError("fuel must be >= 1")
    meter = Meter(fuel)
    try:
        answer = A.routine(y, n, Coins(tape.bits), meter)
    except OutOfFuel as exc:
        outcome = RunOutcome(Status.FUEL_EXHAUSTED, meter.steps)
        root_exhausted = exc.meter is meter
    except TapeExhausted:
        return RunOutcome(Status.TAPE_EXHAUSTED, meter.steps)
    else:
        root_exhausted = False
        status = Status.SUCCESS if _verified(f, answer, y, n) else Status.WRONG_ANSWER
        outcome = RunOutcome(status, meter.steps, answer)

    if A.total:
        bound = A.fuel_bound(n)
        if outcome.steps_used > bound or (root_exhausted and fuel >= bound):
            raise ContractViolation(f"{A.name} did not halt within its declared {bound} steps at n={n}")
    return outcome


def pmap(fn: Callable[[T], R], items: Sequence[T], workers: int = 1) -> list[R]:
    """Order-preserving map, optionally on a thread pool."""
    if workers <= 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class DeltaEstimate:
    """Per-input success probability over the coin tapes of ``A``.

    ``max_halting_steps`` is the largest step count among runs that halted
    (success or wrong answer); ``None`` when no run halted.
    """

    x: InputString
    delta: Number
    mode: str
    trials: int
    half_width: float = 0.0
    confidence: float | None = None
    mean_steps: float = 0.0
    max_halting_steps: int | None = None
    mean_halting_steps: float | None = None
    histogram: tuple[tuple[str, int], ...] = ()

    def __post_init__(self) -> None:
        if not 0 <= self.delta <= 1:
            raise ValueError("delta must lie in [0, 1]")

    @property
    def n(self) -> int:
        return self.x.n

    def counts(self) -> dict[str, int]:
        return dict(self.histogram)


def _summarize(x: InputString, outcomes: Iterable[RunOutcome], mode: str, **kw) -> DeltaEstimate:
    hist: Counter[str] = Counter()
    total_steps = halting_steps = halted = trials = successes = 0
    max_halting: int | None = None
    for out in outcomes:
        if out.status is Status.TAPE_EXHAUSTED:
            raise ContractViolation(f"inverter read past its declared coin tape on x={x.bits}")
        trials += 1
        hist[out.status.value] += 1
        total_steps += out.steps_used
        successes += out.succeeded
        if out.halted:
            halted += 1
            halting_steps += out.steps_used
            max_halting = out.steps_used if max_halting is None else max(max_halting, out.steps_used)
    delta: Number = Fraction(successes, trials) if mode == EXACT else successes / trials
    return DeltaEstimate(
        x=x,
        delta=delta,
        mode=mode,
        trials=trials,
        mean_steps=total_steps / trials,
        max_halting_steps=max_halting,
        mean_halting_steps=halting_steps / halted if halted else None,
        histogram=tuple(sorted(hist.items())),
        **kw,
    )


def exact_delta(
    A: InverterProgram,
    f: CandidateFunction,
    x: InputString,
    fuel: int,
    tape_cap: int = DEFAULT_TAPE_CAP,
) -> DeltaEstimate:
    """Exact ``Pr_sigma[A(f(x), 1^n) in f^-1(f(x))]`` by enumerating every tape."""
    n = x.n
    t = A.tape_length(n)
    if t > tape_cap:
        raise CapExceeded(f"{A.name} uses {t} coin bits at n={n}, above the tape cap {tape_cap}")
    y, _ = evaluate(f, x)
    outcomes = (run_inverter(A, f, y, n, tape, fuel) for tape in CoinTape.enumerate(t))
    return _summarize(x, outcomes, EXACT)


def estimate_delta(
    A: InverterProgram,
    f: CandidateFunction,
    x: InputString,
    trials: int,
    fuel: int,
    seed: int,
    confidence: float = DEFAULT_CONFIDENCE,
) -> DeltaEstimate:
    """Sampled success probability; trial ``i`` uses tape (seed, "tape", n, x, i)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    check_seed(seed)
    n = x.n
    t = A.tape_length(n)
    y, _ = evaluate(f, x)
    outcomes = (
        run_inverter(A, f, y, n, CoinTape.derive(seed, t, n, x.bits, i), fuel)
        for i in range(trials)
    )
    return _summarize(
        x,
        outcomes,
        SAMPLED,
        half_width=hoeffding_half_width(trials, confidence),
        confidence=confidence,
    )


def measure_delta(
    A: InverterProgram,
    f: CandidateFunction,
    x: InputString,
    fuel: int,
    mode: str = EXACT,
    trials: int = 1000,
    seed: int | None = None,
    confidence: float = DEFAULT_CONFIDENCE,
    tape_cap: int = DEFAULT_TAPE_CAP,
) -> DeltaEstimate:
    """Dispatch to :func:`exact_delta` or :func:`estimate_delta`."""
    if mode == EXACT:
        return exact_delta(A, f, x, fuel, tape_cap)
    if mode == SAMPLED:
        if seed is None:
            raise ValueError("sampled mode needs an explicit seed")
        return estimate_delta(A, f, x, trials, fuel, seed, confidence)
    raise ValueError(f"unknown mode {mode!r}")


def sphere_deltas(
    A: InverterProgram,
    f: CandidateFunction,
    n: int,
    fuel: int,
    mode: str = EXACT,
    trials: int = 1000,
    seed: int | None = None,
    confidence: float = DEFAULT_CONFIDENCE,
    tape_cap: int = DEFAULT_TAPE_CAP,
    sphere_cap: int = DEFAULT_ENUMERATION_CAP,
    workers: int = 1,
) -> list[DeltaEstimate]:
    """Per-input deltas over the whole sphere ``I_n``."""
    if n > sphere_cap:
        raise CapExceeded(f"sphere too large for exact mode: n={n} exceeds cap {sphere_cap}")
    if not f.accepts(n):
        raise DomainError(f"{f.name} is not defined on inputs of length {n}")
    xs = list(Sphere(n))
    return pmap(
        lambda x: measure_delta(A, f, x, fuel, mode, trials, seed, confidence, tape_cap),
        xs,
        workers,
    )


def success_set(
    A: InverterProgram,
    f: CandidateFunction,
    n: int,
    c: float,
    fuel: int,
    mode: str = EXACT,
    trials: int = 1000,
    seed: int | None = None,
    confidence: float = DEFAULT_CONFIDENCE,
    tape_cap: int = DEFAULT_TAPE_CAP,
    sphere_cap: int = DEFAULT_ENUMERATION_CAP,
    workers: int = 1,
) -> InputSetSpec:
    """``{x in I_n : delta_{A,f}(x) > n^-c}``.

    In exact mode the sphere and every tape are enumerated and the set is
    explicit. In sampled mode the set is given by a predicate that estimates
    ``delta`` for each queried ``x`` (deterministic for the seed) and is
    flagged ``sampled_membership``; measure it with ``strata.mc_density``.
    """
    threshold = noticeable_threshold(n, c)
    label = f"success[{A.name} on {f.name}, c={c}]"
    if mode == EXACT:
        deltas = sphere_deltas(A, f, n, fuel, EXACT, tape_cap=tape_cap,
                               sphere_cap=sphere_cap, workers=workers)
        members = {d.x.bits for d in deltas if d.delta > threshold}
        return InputSetSpec.explicit(label, {n: members})
    if mode != SAMPLED:
        raise ValueError(f"unknown mode {mode!r}")
    if seed is None:
        raise ValueError("sampled mode needs an explicit seed")
    check_seed(seed)

    def member(x: InputString) -> bool:
        if x.n != n:
            return False
        return estimate_delta(A, f, x, trials, fuel, seed, confidence).delta > threshold

    return InputSetSpec(label=label, predicate=member, sampled_membership=True)
