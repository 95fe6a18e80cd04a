"""Desk-scale candidate functions and inverters.

None of these functions is meant to be hard to invert at any size that matters;
they exist to exhibit measurable behaviour: trivially invertible maps, a
function that is easy on a generic set yet needs search elsewhere (``genease``),
and brute-force-only targets.

Encodings
---------
mult
    ``n`` even, ``h = n // 2``. ``x = p || q`` with ``p, q`` the two ``h``-bit
    halves read as big-endian integers. The top bit of each half is forced to
    1 before multiplying (``p |= 2**(h-1)``), so neither factor is ever zero
    and the input's own top bits are ignored. Output: ``p * q`` in ``n + 2``
    bits.
subset_sum (``w`` weights)
    ``n = w * (b + 1)``. ``x = a_1 || ... || a_w || s`` with ``b``-bit weights
    ``a_i`` and a ``w``-bit selector ``s`` (``s[i] == '1'`` selects ``a_i``).
    Output: the weights followed by the selected sum in
    ``b + bitlen(w)`` bits.
genease
    ``k = ceil(log2 n)``. If the first ``k`` bits of ``x`` are not all zero,
    ``f(x) = '0' || x``; otherwise ``f(x) = '1' || scramble(x)`` where
    ``scramble`` is a fixed 4-round alternating Feistel permutation keyed by
    a public constant. Output length ``n + 1``.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Mapping

from .harness import CandidateFunction, Coins, InverterProgram, Kind, Meter

# ---------------------------------------------------------------------------
# candidate functions


def make_identity() -> CandidateFunction:
    def compute(x: str, meter: Meter) -> str:
        meter.tick(len(x) + 1)
        return x

    return CandidateFunction("identity", compute, output_length=lambda n: n, step_bound=lambda n: n + 1)


def make_const_zero() -> CandidateFunction:
    def compute(x: str, meter: Meter) -> str:
        meter.tick(len(x) + 1)
        return "0" * len(x)

    return CandidateFunction("const0", compute, output_length=lambda n: n, step_bound=lambda n: n + 1)


def mult_factors(x: str) -> tuple[int, int]:
    h = len(x) // 2
    top = 1 << (h - 1)
    return int(x[:h], 2) | top, int(x[h:], 2) | top


def make_mult() -> CandidateFunction:
    def compute(x: str, meter: Meter) -> str:
        n = len(x)
        h = n // 2
        p, q = mult_factors(x)
        meter.tick(h * h + n + 2)  # schoolbook multiply plus formatting
        return format(p * q, f"0{n + 2}b")

    return CandidateFunction(
        "mult",
        compute,
        output_length=lambda n: n + 2,
        step_bound=lambda n: (n // 2) ** 2 + n + 2,
        domain=lambda n: n >= 2 and n % 2 == 0,
        params={"split": "balanced"},
    )


def subset_sum_layout(n: int, w: int) -> int | None:
    """Weight width ``b`` for input length ``n``, or None if ``n`` is malformed."""
    if w < 1 or n % w:
        return None
    b = n // w - 1
    return b if b >= 1 else None


def make_subset_sum(w: int = 2) -> CandidateFunction:
    if w < 1:
        raise ValueError("need at least one weight")
    sum_bits = w.bit_length()

    def compute(x: str, meter: Meter) -> str:
        b = subset_sum_layout(len(x), w)
        weights, selector = x[: w * b], x[w * b:]
        total = 0
        for i in range(w):
            meter.tick(b)
            if selector[i] == "1":
                total += int(weights[i * b:(i + 1) * b], 2)
        meter.tick(b + sum_bits)
        return weights + format(total, f"0{b + sum_bits}b")

    def out_len(n: int) -> int:
        b = subset_sum_layout(n, w)
        return w * b + b + sum_bits

    return CandidateFunction(
        "subset_sum",
        compute,
        output_length=out_len,
        step_bound=lambda n: n + 2 * (n // w) + sum_bits,
        domain=lambda n: subset_sum_layout(n, w) is not None,
        params={"w": w},
    )


_GENEASE_KEY = b"owfbench-genease"
_GENEASE_ROUNDS = 4


def genease_prefix(n: int) -> int:
    return math.ceil(math.log2(n)) if n > 1 else 0


def _round_bits(r: int, data: str, width: int) -> str:
    if width == 0:
        return ""
    digest = hashlib.blake2b(f"{r}:{data}".encode(), key=_GENEASE_KEY).digest()
    while len(digest) * 8 < width:
        digest += hashlib.blake2b(digest, key=_GENEASE_KEY).digest()
    return format(int.from_bytes(digest, "big"), f"0{len(digest) * 8}b")[:width]


def _xor(a: str, b: str) -> str:
    return "".join("1" if u != v else "0" for u, v in zip(a, b))


def scramble(x: str, meter: Meter | None = None) -> str:
    """Fixed keyed permutation of ``{0,1}^n``: alternating Feistel rounds."""
    h = len(x) // 2
    left, right = x[:h], x[h:]
    for r in range(_GENEASE_ROUNDS):
        if meter is not None:
            meter.tick(len(x))
        if r % 2 == 0:
            left = _xor(left, _round_bits(r, right, len(left)))
        else:
            right = _xor(right, _round_bits(r, left, len(right)))
    return left + right


def unscramble(z: str) -> str:
    h = len(z) // 2
    left, right = z[:h], z[h:]
    for r in reversed(range(_GENEASE_ROUNDS)):
        if r % 2 == 0:
            left = _xor(left, _round_bits(r, right, len(left)))
        else:
            right = _xor(right, _round_bits(r, left, len(right)))
    return left + right


def make_genease() -> CandidateFunction:
    def compute(x: str, meter: Meter) -> str:
        n = len(x)
        k = genease_prefix(n)
        meter.tick(k + 1)
        if "1" in x[:k]:
            meter.tick(n)
            return "0" + x
        return "1" + scramble(x, meter)

    return CandidateFunction(
        "genease",
        compute,
        output_length=lambda n: n + 1,
        step_bound=lambda n: (_GENEASE_ROUNDS + 1) * n + genease_prefix(n) + 1,
        params={"rounds": _GENEASE_ROUNDS},
    )


# ---------------------------------------------------------------------------
# inverters


def brute_force_routine(f: CandidateFunction) -> Callable[[str, int, Coins, Meter], str | None]:
    def routine(y: str, n: int, coins: Coins, meter: Meter) -> str | None:
        fmt = f"0{n}b"
        for v in range(1 << n):
            meter.tick()
            x = format(v, fmt) if n else ""
            if f.apply(x, meter) == y:
                return x
        return None

    return routine


def make_brute_force(f: CandidateFunction) -> InverterProgram:
    """Exhaustive search over ``I_n``; total, but its declared bound is exponential."""
    return InverterProgram(
        "brute_force",
        brute_force_routine(f),
        kind=Kind.TOTAL_POLY,
        fuel_bound=lambda n: (1 << n) * (f.step_bound(n) + 1),
    )


def make_random_guess(f: CandidateFunction | None = None) -> InverterProgram:
    """Output ``n`` fresh coin bits."""

    def routine(y: str, n: int, coins: Coins, meter: Meter) -> str:
        meter.tick(n + 1)
        return coins.read(n)

    return InverterProgram(
        "random_guess",
        routine,
        tape_length=lambda n: n,
        kind=Kind.RANDOMIZED_POLY,
        fuel_bound=lambda n: n + 1,
    )


def make_always_zero(f: CandidateFunction | None = None) -> InverterProgram:
    def routine(y: str, n: int, coins: Coins, meter: Meter) -> str:
        meter.tick(n + 1)
        return "0" * n

    return InverterProgram("always_zero", routine, fuel_bound=lambda n: n + 1)


def make_never_halting(f: CandidateFunction | None = None) -> InverterProgram:
    def routine(y: str, n: int, coins: Coins, meter: Meter) -> str:
        while True:
            meter.tick()

    return InverterProgram("never_halting", routine, kind=Kind.PARTIAL_WITH_ERRORS)


def make_identity_inverter(f: CandidateFunction | None = None) -> InverterProgram:
    """Deterministic correct inverter for ``identity``: copy ``y``."""

    def routine(y: str, n: int, coins: Coins, meter: Meter) -> str:
        meter.tick(n + 1)
        return y

    return InverterProgram("copy", routine, fuel_bound=lambda n: n + 1)


def make_first_bit_zero_inverter(f: CandidateFunction | None = None) -> InverterProgram:
    """For ``identity``: correct when ``y`` starts with 0, wrong (complemented) otherwise."""

    def routine(y: str, n: int, coins: Coins, meter: Meter) -> str:
        meter.tick(n + 1)
        if y[:1] == "0":
            return y
        return "".join("1" if b == "0" else "0" for b in y)

    return InverterProgram("first_bit_zero", routine, kind=Kind.PARTIAL_WITH_ERRORS)


def make_coin_inverter(
    f: CandidateFunction,
    success: Callable[[int], Fraction | float],
    tape_bits: int = 16,
    solver: Callable[[str, int, Coins, Meter], str | None] | None = None,
    name: str | None = None,
) -> InverterProgram:
    """Correct with probability ``ceil(success(n) * 2**t) / 2**t`` on every input.

    Reads ``t = tape_bits`` coins as an integer ``v`` and runs the
    deterministic ``solver`` (brute force by default) iff ``v`` falls below
    the threshold; otherwise halts without an answer.
    """
    solve = solver or brute_force_routine(f)
    scale = 1 << tape_bits

    def cutoff(n: int) -> int:
        return math.ceil(Fraction(success(n)) * scale)

    def routine(y: str, n: int, coins: Coins, meter: Meter) -> str | None:
        v = coins.read_int(tape_bits)
        meter.tick()
        if v < cutoff(n):
            return solve(y, n, Coins(""), meter)
        return None

    return InverterProgram(
        name or "coin",
        routine,
        tape_length=lambda n: tape_bits,
        kind=Kind.RANDOMIZED_POLY,
        fuel_bound=lambda n: 1 + (1 << n) * (f.step_bound(n) + 1),
        meta={"tape_bits": tape_bits},
    )


def coin_success_probability(n: int, success: Fraction | float, tape_bits: int) -> Fraction:
    """Exact success probability of :func:`make_coin_inverter` at ``n``."""
    scale = 1 << tape_bits
    return Fraction(math.ceil(Fraction(success) * scale), scale)


def make_staggered_inverter(f: CandidateFunction | None = None, tape_bits: int = 3) -> InverterProgram:
    """For ``identity``: a partial program with varied halting times.

    Coins ``v`` (``tape_bits`` wide). All-ones coins loop forever; otherwise
    the program spends ``popcount(y) + v + 1`` steps and answers ``y`` when
    ``v`` is even, the complement of ``y`` when ``v`` is odd.
    """
    top = (1 << tape_bits) - 1

    def routine(y: str, n: int, coins: Coins, meter: Meter) -> str:
        v = coins.read_int(tape_bits)
        if v == top:
            while True:
                meter.tick()
        meter.tick(y.count("1") + v + 1)
        if v % 2 == 0:
            return y
        return "".join("1" if b == "0" else "0" for b in y)

    return InverterProgram(
        "staggered",
        routine,
        tape_length=lambda n: tape_bits,
        kind=Kind.PARTIAL_WITH_ERRORS,
    )


def make_mult_trial_division(f: CandidateFunction | None = None) -> InverterProgram:
    """Try the ``2**(n/4)`` smallest admissible factors, bottom of the range first."""

    def routine(y: str, n: int, coins: Coins, meter: Meter) -> str | None:
        h = n // 2
        lo, hi = 1 << (h - 1), 1 << h
        target = int(y, 2)
        for d in range(lo, min(hi, lo + (1 << (n // 4)))):
            meter.tick(h + 1)
            if target % d == 0 and lo <= target // d < hi:
                return format(d, f"0{h}b") + format(target // d, f"0{h}b")
        return None

    return InverterProgram(
        "mult_trial_division",
        routine,
        fuel_bound=lambda n: (1 << (n // 4)) * (n // 2 + 1),
    )


def make_subset_sum_brute_force(f: CandidateFunction) -> InverterProgram:
    """Enumerate all ``2**w`` selectors against the target in ``y``."""
    w = f.params["w"]

    def routine(y: str, n: int, coins: Coins, meter: Meter) -> str | None:
        b = subset_sum_layout(n, w)
        weights = [int(y[i * b:(i + 1) * b], 2) for i in range(w)]
        target = int(y[w * b:], 2)
        meter.tick(len(y))
        for sel in range(1 << w):
            meter.tick(w)
            bits = format(sel, f"0{w}b")
            if sum(a for a, s in zip(weights, bits) if s == "1") == target:
                return y[: w * b] + bits
        return None

    return InverterProgram(
        "subset_sum_brute_force",
        routine,
        fuel_bound=lambda n: (1 << w) * w + 2 * n + w.bit_length() + 1,
    )


def make_genease_fast(f: CandidateFunction | None = None) -> InverterProgram:
    """Strip the flag on self-revealing outputs; loop forever on scrambled ones."""

    def routine(y: str, n: int, coins: Coins, meter: Meter) -> str:
        meter.tick(n + 1)
        if y[0] == "0":
            return y[1:]
        while True:
            meter.tick()

    return InverterProgram("genease_fast", routine, kind=Kind.PARTIAL_WITH_ERRORS)


# ---------------------------------------------------------------------------
# registry


@dataclass(frozen=True)
class CandidateSpec:
    name: str
    factory: Callable[..., CandidateFunction]
    description: str
    params: Mapping[str, Any] = field(default_factory=dict)

    def build(self, **overrides: Any) -> CandidateFunction:
        unknown = set(overrides) - set(self.params)
        if unknown:
            raise KeyError(f"{self.name} has no parameters {sorted(unknown)}")
        return self.factory(**{**self.params, **overrides})


CANDIDATES: dict[str, CandidateSpec] = {
    s.name: s
    for s in [
        CandidateSpec("identity", make_identity, "f(x) = x"),
        CandidateSpec("const0", make_const_zero, "f(x) = 0^n"),
        CandidateSpec("mult", make_mult, "product of the two halves, top bits forced"),
        CandidateSpec("subset_sum", make_subset_sum, "weights || selected sum", {"w": 2}),
        CandidateSpec("genease", make_genease, "self-revealing unless the log-prefix is zero"),
    ]
}

# name -> (factory taking the candidate, candidates it is meaningful for or None for any)
INVERTERS: dict[str, tuple[Callable[[CandidateFunction], InverterProgram], frozenset[str] | None]] = {
    "brute_force": (make_brute_force, None),
    "random_guess": (make_random_guess, None),
    "always_zero": (make_always_zero, None),
    "never_halting": (make_never_halting, None),
    "copy": (make_identity_inverter, frozenset({"identity"})),
    "first_bit_zero": (make_first_bit_zero_inverter, frozenset({"identity"})),
    "staggered": (make_staggered_inverter, frozenset({"identity"})),
    "mult_trial_division": (make_mult_trial_division, frozenset({"mult"})),
    "subset_sum_brute_force": (make_subset_sum_brute_force, frozenset({"subset_sum"})),
    "genease_fast": (make_genease_fast, frozenset({"genease"})),
}


def build_candidate(name: str, **params: Any) -> CandidateFunction:
    try:
        spec = CANDIDATES[name]
    except KeyError:
        raise KeyError(f"unknown candidate {name!r}; known: {sorted(CANDIDATES)}") from None
    return spec.build(**params)


def build_inverter(name: str, f: CandidateFunction, candidate_name: str | None = None) -> InverterProgram:
    try:
        factory, scope = INVERTERS[name]
    except KeyError:
        raise KeyError(f"unknown inverter {name!r}; known: {sorted(INVERTERS)}") from None
    if scope is not None and (candidate_name or f.name) not in scope:
        raise KeyError(f"inverter {name!r} only applies to {sorted(scope)}")
    return factory(f)


def zoo_pairs() -> list[tuple[str, str]]:
    """Every registered (candidate, inverter) combination that is meaningful."""
    return [
        (c, i)
        for c in CANDIDATES
        for i, (_, scope) in INVERTERS.items()
        if scope is None or c in scope
    ]
