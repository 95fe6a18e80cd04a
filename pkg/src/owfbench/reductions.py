"""Constructive reductions between inversion notions, as runnable operations.

* :func:`amplify` repeats a total inverter with fresh coin segments until a
  verified preimage appears; :func:`chernoff_plan` sizes the repetition count.
* :func:`clip` turns a partial program into a total one by cutting it off
  after ``ceil(n**c)`` steps.
* :func:`achievement_ratio` relates halting time to success probability.
* :func:`averaging_split` and :func:`aggregate_success` connect per-input
  success probabilities to the success probability averaged over inputs.
* :func:`definition_check` measures the per-sphere success sets that the
  generic one-way conditions bound and reports a verdict for each.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Sequence

from . import __version__
from .harness import (
    DEFAULT_TAPE_CAP,
    CandidateFunction,
    Coins,
    CoinTape,
    DeltaEstimate,
    InverterProgram,
    Kind,
    Meter,
    OutOfFuel,
    evaluate,
    measure_delta,
    pmap,
    run_inverter,
)
from .seeding import check_seed
from .strata import (
    DEFAULT_CONFIDENCE,
    DEFAULT_ENUMERATION_CAP,
    EXACT,
    INCONCLUSIVE,
    SAMPLED,
    STRONGLY_NEGLIGIBLE,
    CapExceeded,
    ConvergenceReport,
    DensityProfile,
    DensityValue,
    InputString,
    Number,
    Sphere,
    ceil_power,
    classify_convergence,
    hoeffding_half_width,
    iter_bitstrings,
    noticeable_threshold,
    sample_input,
    sphere_size,
)

log = logging.getLogger(__name__)

DEFAULT_MAX_TAPE_BITS = 1 << 24

VIOLATED = "violated"
CONSISTENT = "consistent"


class TapeBudgetError(ValueError):
    """The amplified program would need more coin bits than allowed."""


@dataclass(frozen=True)
class ChernoffPlan:
    n: int
    c: float
    k: int
    epsilon: float


def chernoff_plan(n: int, c: float) -> ChernoffPlan:
    """Repetition count ``k = ceil(n**(3c))`` and failure bound ``2**(-(n+2)/2)``."""
    if n < 2:
        raise ValueError("the repetition bound needs n >= 2")
    if c <= 0:
        raise ValueError("c must be positive")
    return ChernoffPlan(n=n, c=c, k=ceil_power(n, 3 * c), epsilon=2.0 ** (-(n + 2) / 2))


def chernoff_tail(n: int, c: float, k: int) -> float:
    """``2**(-(k - n^c)**2 / (2k (n^c - 1)**2))``, the bound on k straight failures."""
    m = n ** c
    return 2.0 ** (-((k - m) ** 2) / (2 * k * (m - 1) ** 2))


def amplified_success(delta: Number, k: int) -> Number:
    """``1 - (1 - delta)**k``: success of ``k`` independent verified repetitions."""
    return 1 - (1 - delta) ** k


def repetitions_to_clear(delta: Number, threshold: Number) -> int:
    """Fewest repetitions ``k`` with ``1 - (1 - delta)**k > threshold``."""
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    if not 0 <= threshold < 1:
        raise ValueError("threshold must lie in [0, 1)")
    if delta == 1:
        return 1
    d, t = Fraction(delta), Fraction(threshold)
    k = max(1, math.floor(math.log(1 - float(t)) / math.log(1 - float(d))))
    while k > 1 and amplified_success(d, k - 1) > t:
        k -= 1
    while amplified_success(d, k) <= t:
        k += 1
    return k


def amplify(
    A: InverterProgram,
    f: CandidateFunction,
    c: float,
    repetitions: int | Callable[[int], int] | None = None,
    max_tape_bits: int = DEFAULT_MAX_TAPE_BITS,
) -> InverterProgram:
    """Repeat ``A`` on fresh coins until ``f`` confirms an answer.

    The amplified tape is ``k`` consecutive segments of ``t(n)`` bits; repetition
    ``i`` reads segment ``i`` only. Each repetition runs under ``A``'s declared
    fuel bound and each answer is checked by evaluating ``f`` (charged to the
    amplified program). ``k`` defaults to ``chernoff_plan(n, c).k``.
    """
    if not A.total:
        raise ValueError(f"{A.name} is partial; clip it before amplifying")

    def reps(n: int) -> int:
        if repetitions is None:
            return chernoff_plan(n, c).k
        return repetitions(n) if callable(repetitions) else repetitions

    def tape_length(n: int) -> int:
        bits = reps(n) * A.tape_length(n)
        if bits > max_tape_bits:
            raise TapeBudgetError(
                f"amplifying {A.name} at n={n} needs {bits} coin bits (limit {max_tape_bits})"
            )
        return bits

    def routine(y: str, n: int, coins: Coins, meter: Meter) -> str | None:
        t = A.tape_length(n)
        budget = A.fuel_bound(n)
        for _ in range(reps(n)):
            segment = Coins(coins.read(t))
            try:
                answer = A.routine(y, n, segment, meter.limited(budget))
            except OutOfFuel:
                if meter.remaining == 0:
                    raise
                continue
            if answer is None or len(answer) != n or not f.accepts(n):
                continue
            if f.apply(answer, meter) == y:
                return answer
        return None

    label = f"amplify({A.name}, c={c})" if repetitions is None else f"amplify({A.name}, k={repetitions})"
    return InverterProgram(
        label,
        routine,
        tape_length=tape_length,
        kind=Kind.RANDOMIZED_POLY,
        fuel_bound=lambda n: reps(n) * (A.fuel_bound(n) + f.step_bound(n)),
        meta={"base": A.name, "c": c, "repetitions": repetitions if not callable(repetitions) else "custom"},
    )


def amplified_segments(A: InverterProgram, n: int, k: int) -> list[tuple[int, int]]:
    """Tape offsets ``[start, end)`` of each repetition of an amplified ``A``."""
    t = A.tape_length(n)
    return [(i * t, (i + 1) * t) for i in range(k)]


def clip(B: InverterProgram, c: float, budget: Callable[[int], int] | None = None) -> InverterProgram:
    """Run ``B`` for at most ``ceil(n**c)`` steps.

    Runs of ``B`` that halt within the budget are reproduced exactly
    (same answer, same step count); all others end as ``FUEL_EXHAUSTED``.
    """
    limit = budget or (lambda n: ceil_power(n, c))

    def routine(y: str, n: int, coins: Coins, meter: Meter) -> str | None:
        return B.routine(y, n, coins, meter.limited(limit(n)))

    return InverterProgram(
        f"clip({B.name}, c={c})",
        routine,
        tape_length=B.tape_length,
        kind=Kind.TOTAL_POLY,
        fuel_bound=limit,
        meta={"base": B.name, "c": c},
    )


INFINITE = math.inf


@dataclass(frozen=True)
class AchievementRatio:
    """``T / delta`` with ``T`` the worst halting time seen.

    ``expected_ratio`` uses the mean halting time instead. Both are
    ``math.inf`` when ``delta == 0``; ``halted`` is False when no run halted.
    """

    x: InputString
    T: int | None
    mean_T: float | None
    delta: Number
    ratio: Number
    expected_ratio: float
    halted: bool
    mode: str

    @property
    def infinite(self) -> bool:
        return self.ratio == INFINITE


def ratio_from_delta(est: DeltaEstimate) -> AchievementRatio:
    T = est.max_halting_steps
    if est.delta == 0:
        ratio: Number = INFINITE
        expected = INFINITE
    else:
        ratio = Fraction(T) / est.delta if isinstance(est.delta, Fraction) else T / est.delta
        expected = est.mean_halting_steps / float(est.delta)
    return AchievementRatio(
        x=est.x,
        T=T,
        mean_T=est.mean_halting_steps,
        delta=est.delta,
        ratio=ratio,
        expected_ratio=expected,
        halted=T is not None,
        mode=est.mode,
    )


def achievement_ratio(
    B: InverterProgram,
    f: CandidateFunction,
    x: InputString,
    fuel: int,
    mode: str = EXACT,
    trials: int = 1000,
    seed: int | None = None,
    confidence: float = DEFAULT_CONFIDENCE,
    tape_cap: int = DEFAULT_TAPE_CAP,
) -> AchievementRatio:
    """Achievement ratio of ``B`` on ``f(x)`` observed within ``fuel`` steps per run."""
    est = measure_delta(B, f, x, fuel, mode, trials, seed, confidence, tape_cap)
    return ratio_from_delta(est)


def averaging_split(values: Sequence[Number], rho: Number) -> tuple[int, Fraction]:
    """Count entries above ``rho / 2`` in a list whose mean is at least ``rho``.

    Returns ``(k, k / N)``; the averaging argument guarantees ``k / N >= rho / 2``.
    """
    if not values:
        raise ValueError("need at least one value")
    if rho < 0:
        raise ValueError("rho must be non-negative")
    if any(not 0 <= a <= 1 for a in values):
        raise ValueError("values must lie in [0, 1]")
    exact = [Fraction(a) for a in values]
    if sum(exact) < Fraction(rho) * len(values):
        raise ValueError("mean of values is below rho")
    half = Fraction(rho) / 2
    k = sum(1 for a in exact if a > half)
    return k, Fraction(k, len(values))


@dataclass(frozen=True)
class AggregateSuccess:
    """``Pr_{(x, sigma)}`` of a successful inversion, x uniform on ``I_n``."""

    n: int
    value: Number
    mode: str
    half_width: float = 0.0
    samples: int = 0


def aggregate_success(
    A: InverterProgram,
    f: CandidateFunction,
    n: int,
    fuel: int,
    mode: str = EXACT,
    samples: int = 10_000,
    seed: int | None = None,
    confidence: float = DEFAULT_CONFIDENCE,
    tape_cap: int = DEFAULT_TAPE_CAP,
    sphere_cap: int = DEFAULT_ENUMERATION_CAP,
) -> AggregateSuccess:
    """Success probability over the joint space of inputs and coins.

    Exact mode enumerates every pair ``(x, sigma)`` directly, without going
    through per-input deltas. Sampled mode draws pair ``j`` from addresses
    (seed, "joint-x", n, j) and (seed, "tape", "joint", n, j).
    """
    t = A.tape_length(n)
    if mode == EXACT:
        if n > sphere_cap:
            raise CapExceeded(f"sphere too large for exact mode: n={n} exceeds cap {sphere_cap}")
        if t > tape_cap:
            raise CapExceeded(f"{A.name} uses {t} coin bits at n={n}, above the tape cap {tape_cap}")
        wins = 0
        for x in iter_bitstrings(n):
            y, _ = evaluate(f, x)
            for tape in CoinTape.enumerate(t):
                wins += run_inverter(A, f, y, n, tape, fuel).succeeded
        return AggregateSuccess(n, Fraction(wins, sphere_size(n) << t), EXACT)
    if mode != SAMPLED:
        raise ValueError(f"unknown mode {mode!r}")
    if seed is None:
        raise ValueError("sampled mode needs an explicit seed")
    check_seed(seed)
    wins = 0
    for j in range(samples):
        x = sample_input(seed, n, j, purpose="joint-x")
        y, _ = evaluate(f, x)
        wins += run_inverter(A, f, y, n, CoinTape.derive(seed, t, "joint", n, j), fuel).succeeded
    return AggregateSuccess(n, wins / samples, SAMPLED, hoeffding_half_width(samples, confidence), samples)


# ---------------------------------------------------------------------------
# definition checks


@dataclass(frozen=True)
class SphereMeasurement:
    """Densities of the success sets on one sphere.

    ``noticeable``  u_n{x : delta(x) >  n^-c}     (strong, PPT adversary)
    ``unnoticed``   u_n{x : delta(x) <  n^-c}     (weak, PPT adversary)
    ``efficient``   u_n{x : ratio(x) <= n^c}      (strong, partial adversary)
    ``inefficient`` u_n{x : ratio(x) >  n^c}      (weak, partial adversary)
    """

    n: int
    fuel: int
    inputs: int
    noticeable: DensityValue
    unnoticed: DensityValue
    efficient: DensityValue
    inefficient: DensityValue
    plan: ChernoffPlan | None

    def densities(self) -> dict[str, DensityValue]:
        return {
            "noticeable": self.noticeable,
            "unnoticed": self.unnoticed,
            "efficient": self.efficient,
            "inefficient": self.inefficient,
        }


# definition -> (measured set, whether the condition bounds it from above)
DEFINITIONS: dict[str, tuple[str, bool]] = {
    "strong_ppt": ("noticeable", True),
    "weak_ppt": ("unnoticed", False),
    "strong_partial": ("efficient", True),
    "weak_partial": ("inefficient", False),
}


@dataclass(frozen=True)
class DefinitionReport:
    inverter: str
    candidate: str
    c: float
    degrees: tuple[int, ...]
    mode: str
    rows: tuple[SphereMeasurement, ...]
    verdicts: dict[str, str]
    classifications: dict[str, ConvergenceReport | None]
    settings: dict[str, Any] = field(default_factory=dict)

    @property
    def radii(self) -> tuple[int, ...]:
        return tuple(r.n for r in self.rows)

    def profile(self, key: str) -> DensityProfile:
        return DensityProfile(f"{key}[{self.inverter} on {self.candidate}]",
                              tuple(getattr(r, key) for r in self.rows))


def _density(n: int, hits: int, total: int, mode: str, confidence: float) -> DensityValue:
    if mode == EXACT:
        return DensityValue(n=n, value=Fraction(hits, total))
    return DensityValue(n=n, value=hits / total, mode=SAMPLED,
                        half_width=hoeffding_half_width(total, confidence),
                        confidence=confidence, samples=total)


def measure_sphere(
    A: InverterProgram,
    f: CandidateFunction,
    n: int,
    c: float,
    fuel: int,
    mode: str = EXACT,
    trials: int = 1000,
    inputs: int = 256,
    seed: int | None = None,
    confidence: float = DEFAULT_CONFIDENCE,
    tape_cap: int = DEFAULT_TAPE_CAP,
    sphere_cap: int = DEFAULT_ENUMERATION_CAP,
    workers: int = 1,
) -> SphereMeasurement:
    """Measure the four success-set densities on ``I_n``.

    Exact mode enumerates the sphere and every tape. Sampled mode draws
    ``inputs`` strings from (seed, "inputs", n, j) and estimates each delta
    from ``trials`` tapes; the reported half-width covers the input sampling
    only.
    """
    if mode == EXACT:
        if n > sphere_cap:
            raise CapExceeded(f"sphere too large for exact mode: n={n} exceeds cap {sphere_cap}")
        xs = list(Sphere(n))
    elif mode == SAMPLED:
        if seed is None:
            raise ValueError("sampled mode needs an explicit seed")
        xs = [sample_input(seed, n, j, purpose="inputs") for j in range(inputs)]
    else:
        raise ValueError(f"unknown mode {mode!r}")

    estimates = pmap(
        lambda x: measure_delta(A, f, x, fuel, mode, trials, seed, confidence, tape_cap),
        xs,
        workers,
    )
    threshold = noticeable_threshold(n, c)
    ratio_bound = n ** c if not float(c).is_integer() else n ** int(c)
    ratios = [ratio_from_delta(e).ratio for e in estimates]
    total = len(xs)
    counts = {
        "noticeable": sum(e.delta > threshold for e in estimates),
        "unnoticed": sum(e.delta < threshold for e in estimates),
        "efficient": sum(r <= ratio_bound for r in ratios),
    }
    counts["inefficient"] = total - counts["efficient"]
    dens = {k: _density(n, v, total, mode, confidence) for k, v in counts.items()}
    return SphereMeasurement(
        n=n,
        fuel=fuel,
        inputs=total,
        plan=chernoff_plan(n, c) if n >= 2 else None,
        **dens,
    )


def _verdict(values: Sequence[DensityValue], degrees: Sequence[int], upper: bool) -> str:
    """Finite-window verdict for one condition over the upper half of the radii.

    ``upper``: the condition demands ``density < 1/p(n)`` for every polynomial;
    violated if for some tested ``p = n^e`` the density is at least ``1/p(n)``
    at every radius, consistent if below ``1/p(n)`` for every tested ``p``.
    Otherwise (``density >= 1/p(n)`` for some ``p``): the mirror image.
    Sampled densities only count when their whole interval clears the bar.
    """
    tail = values[len(values) // 2:]

    def above(d: DensityValue, e: int) -> bool:
        return d.n >= 1 and d.value - d.half_width >= Fraction(1, d.n ** e)

    def below(d: DensityValue, e: int) -> bool:
        return d.n >= 1 and d.value + d.half_width < Fraction(1, d.n ** e)

    some_p_above = any(all(above(d, e) for d in tail) for e in degrees)
    every_p_below = all(all(below(d, e) for d in tail) for e in degrees)
    if upper:
        if some_p_above:
            return VIOLATED
        if every_p_below:
            return CONSISTENT
    else:
        if some_p_above:
            return CONSISTENT
        if every_p_below:
            return VIOLATED
    return INCONCLUSIVE


def definition_check(
    A: InverterProgram,
    f: CandidateFunction,
    n_range: Iterable[int],
    c: float,
    fuel: int | Callable[[int], int],
    degrees: Sequence[int] = (1, 2, 3),
    mode: str = EXACT,
    trials: int = 1000,
    inputs: int = 256,
    seed: int | None = None,
    confidence: float = DEFAULT_CONFIDENCE,
    tape_cap: int = DEFAULT_TAPE_CAP,
    sphere_cap: int = DEFAULT_ENUMERATION_CAP,
    workers: int = 1,
) -> DefinitionReport:
    """Measure the success sets of ``A`` against ``f`` and judge each condition.

    Conditions are tested on the grid of polynomials ``p(n) = n^e`` for
    ``e`` in ``degrees`` and the single exponent ``c``; a verdict speaks for
    that grid and radius window only. ``noticeable_strongly_negligible`` records whether the
    noticeable-success set classifies as strongly negligible.
    """
    radii = [n for n in n_range if f.accepts(n)]
    if not radii:
        raise ValueError(f"no radius in range lies in the domain of {f.name}")
    fuel_at = fuel if callable(fuel) else (lambda n: fuel)
    rows = tuple(
        measure_sphere(A, f, n, c, fuel_at(n), mode, trials, inputs, seed, confidence,
                       tape_cap, sphere_cap, workers)
        for n in radii
    )
    verdicts = {
        name: _verdict([getattr(r, key) for r in rows], degrees, upper)
        for name, (key, upper) in DEFINITIONS.items()
    }
    classifications: dict[str, ConvergenceReport | None] = {}
    for key in ("noticeable", "efficient"):
        profile = DensityProfile(key, tuple(getattr(r, key) for r in rows))
        classifications[key] = classify_convergence(profile) if len(rows) >= 4 else None
    cls = classifications["noticeable"]
    if cls is None or cls.label == INCONCLUSIVE:
        verdicts["noticeable_strongly_negligible"] = INCONCLUSIVE
    else:
        verdicts["noticeable_strongly_negligible"] = CONSISTENT if cls.label == STRONGLY_NEGLIGIBLE else VIOLATED
    return DefinitionReport(
        inverter=A.name,
        candidate=f.name,
        c=c,
        degrees=tuple(degrees),
        mode=mode,
        rows=rows,
        verdicts=verdicts,
        classifications=classifications,
        settings={
            "seed": seed,
            "trials": trials if mode == SAMPLED else None,
            "inputs": inputs if mode == SAMPLED else None,
            "confidence": confidence,
            "tape_cap": tape_cap,
            "sphere_cap": sphere_cap,
            "version": __version__,
        },
    )
