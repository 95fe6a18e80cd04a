"""Input space, spherical stratification and asymptotic density.

Inputs are binary strings. The sphere ``I_n`` holds every string of length
``n`` and the uniform measure on it is ``u_n(R) = |R ∩ I_n| / 2**n``. Densities
are computed exactly (rational, by enumeration) for small spheres and by
seeded Monte Carlo with Hoeffding intervals otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from .seeding import check_seed, derive_bits

DEFAULT_ENUMERATION_CAP = 24
DEFAULT_CONFIDENCE = 0.95

EXACT = "exact"
SAMPLED = "sampled"

STRONGLY_GENERIC = "strongly_generic"
GENERIC = "generic"
NEGLIGIBLE = "negligible"
STRONGLY_NEGLIGIBLE = "strongly_negligible"
INCONCLUSIVE = "inconclusive"

Number = Fraction | float


class CapExceeded(ValueError):
    """An exact enumeration was requested beyond the configured cap."""


@dataclass(frozen=True, order=True)
class InputString:
    bits: str

    def __post_init__(self) -> None:
        if not isinstance(self.bits, str) or self.bits.strip("01"):
            raise ValueError(f"not a binary string: {self.bits!r}")

    @property
    def n(self) -> int:
        return len(self.bits)

    def __len__(self) -> int:
        return len(self.bits)

    def __str__(self) -> str:
        return self.bits

    @classmethod
    def from_int(cls, value: int, n: int) -> InputString:
        if not 0 <= value < 1 << n:
            raise ValueError(f"{value} does not fit in {n} bits")
        return cls(format(value, f"0{n}b") if n else "")

    def to_int(self) -> int:
        return int(self.bits, 2) if self.bits else 0


def sphere_size(n: int) -> int:
    """Cardinality of ``I_n``, i.e. ``2**n`` (exact integer)."""
    if n < 0:
        raise ValueError("sphere radius must be non-negative")
    return 1 << n


def iter_bitstrings(n: int) -> Iterator[str]:
    """All strings of length ``n`` in lexicographic order."""
    if n == 0:
        yield ""
        return
    fmt = f"0{n}b"
    for value in range(1 << n):
        yield format(value, fmt)


@dataclass(frozen=True)
class Sphere:
    n: int

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError("sphere radius must be non-negative")

    def __len__(self) -> int:
        return sphere_size(self.n)

    def __iter__(self) -> Iterator[InputString]:
        return (InputString(b) for b in iter_bitstrings(self.n))

    def __contains__(self, x: object) -> bool:
        return isinstance(x, InputString) and x.n == self.n


@dataclass(frozen=True)
class InputSetSpec:
    """A set of inputs, given per sphere explicitly or by a membership predicate.

    Explicit members take precedence on the spheres they cover. A set with
    ``sampled_membership`` set decides membership from a statistical estimate
    (still deterministic for its fixed seed).
    """

    label: str
    predicate: Callable[[InputString], bool] | None = None
    members: Mapping[int, frozenset[str]] | None = None
    sampled_membership: bool = False

    def __post_init__(self) -> None:
        if self.predicate is None and self.members is None:
            raise ValueError("an input set needs a predicate or explicit members")
        if self.members is not None:
            for n, strings in self.members.items():
                if any(len(s) != n or s.strip("01") for s in strings):
                    raise ValueError(f"explicit members for sphere {n} are malformed")

    @classmethod
    def from_predicate(cls, label: str, predicate: Callable[[InputString], bool]) -> InputSetSpec:
        return cls(label=label, predicate=predicate)

    @classmethod
    def explicit(cls, label: str, members: Mapping[int, Iterable[str]], **kw) -> InputSetSpec:
        frozen = {n: frozenset(v) for n, v in members.items()}
        return cls(label=label, members=frozen, **kw)

    def covers(self, n: int) -> bool:
        return self.predicate is not None or (self.members is not None and n in self.members)

    def contains(self, x: InputString) -> bool:
        if self.members is not None and x.n in self.members:
            return x.bits in self.members[x.n]
        if self.predicate is None:
            raise KeyError(f"set {self.label!r} is not defined on sphere {x.n}")
        return bool(self.predicate(x))

    __contains__ = contains

    def count(self, n: int) -> int:
        """``|R ∩ I_n|`` by enumeration (explicit members are counted directly)."""
        if self.members is not None and n in self.members:
            return len(self.members[n])
        return sum(1 for x in Sphere(n) if self.contains(x))

    def complement(self) -> InputSetSpec:
        return InputSetSpec(
            label=f"not({self.label})",
            predicate=lambda x: not self.contains(x),
            sampled_membership=self.sampled_membership,
        )


def all_strings() -> InputSetSpec:
    return InputSetSpec.from_predicate("all", lambda x: True)


def empty_set() -> InputSetSpec:
    return InputSetSpec.from_predicate("empty", lambda x: False)


def first_bit_zero() -> InputSetSpec:
    return InputSetSpec.from_predicate("first_bit_zero", lambda x: x.bits[:1] == "0")


def contains_substring(pattern: str) -> InputSetSpec:
    return InputSetSpec.from_predicate(f"contains_{pattern}", lambda x: pattern in x.bits)


def not_all_zeros() -> InputSetSpec:
    return InputSetSpec.from_predicate("not_all_zeros", lambda x: "1" in x.bits)


REFERENCE_SETS: dict[str, Callable[[], InputSetSpec]] = {
    "all": all_strings,
    "empty": empty_set,
    "first_bit_zero": first_bit_zero,
    "contains_11": lambda: contains_substring("11"),
    "not_all_zeros": not_all_zeros,
}


def hoeffding_half_width(samples: int, confidence: float = DEFAULT_CONFIDENCE) -> float:
    """Two-sided Hoeffding radius for the mean of ``samples`` variables in [0, 1]."""
    if samples < 1:
        raise ValueError("need at least one sample")
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must lie strictly between 0 and 1")
    return math.sqrt(math.log(2.0 / (1.0 - confidence)) / (2.0 * samples))


def noticeable_threshold(n: int, c: float) -> Number:
    """``n**-c``; an exact rational when ``c`` is a whole number."""
    if n < 1:
        raise ValueError("threshold n^-c needs n >= 1")
    if float(c).is_integer():
        return Fraction(1, n ** int(c))
    return n ** (-c)


def ceil_power(n: int, e: float) -> int:
    """``ceil(n**e)`` computed exactly for whole exponents."""
    if float(e).is_integer():
        return n ** int(e)
    value = n ** e
    nearest = round(value)
    if abs(value - nearest) <= 1e-9 * max(1.0, value):
        return int(nearest)
    return math.ceil(value)


@dataclass(frozen=True)
class DensityValue:
    n: int
    value: Number
    mode: str = EXACT
    half_width: float = 0.0
    confidence: float | None = None
    samples: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.value <= 1:
            raise ValueError(f"density {self.value} outside [0, 1]")
        if self.mode == EXACT:
            if not isinstance(self.value, Fraction) or self.samples or self.half_width:
                raise ValueError("exact densities are rationals with no sampling error")
        elif self.mode == SAMPLED:
            if self.half_width <= 0 or self.samples < 1:
                raise ValueError("sampled densities need a positive half-width")
            if self.confidence is None or not 0 < self.confidence < 1:
                raise ValueError("sampled densities need a confidence level in (0, 1)")
        else:
            raise ValueError(f"unknown mode {self.mode!r}")

    @property
    def exact(self) -> bool:
        return self.mode == EXACT

    def covers(self, truth: Number) -> bool:
        """Whether ``truth`` lies inside the reported interval."""
        return abs(self.value - truth) <= self.half_width


def exact_density(R: InputSetSpec, n: int, cap: int = DEFAULT_ENUMERATION_CAP) -> DensityValue:
    """``|R ∩ I_n| / 2**n`` by enumerating the sphere."""
    if n < 0:
        raise ValueError("sphere radius must be non-negative")
    if n > cap:
        raise CapExceeded(f"sphere too large for exact mode: n={n} exceeds cap {cap}")
    return DensityValue(n=n, value=Fraction(R.count(n), sphere_size(n)))


def sample_input(seed: int, n: int, index: int, purpose: str = "density") -> InputString:
    return InputString(derive_bits(seed, purpose, n, index, nbits=n))


def mc_density(
    R: InputSetSpec,
    n: int,
    samples: int,
    seed: int,
    confidence: float = DEFAULT_CONFIDENCE,
) -> DensityValue:
    """Monte Carlo estimate of ``u_n(R)``; sample ``i`` is drawn at address (seed, "density", n, i)."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    check_seed(seed)
    hits = sum(1 for i in range(samples) if R.contains(sample_input(seed, n, i)))
    return DensityValue(
        n=n,
        value=hits / samples,
        mode=SAMPLED,
        half_width=hoeffding_half_width(samples, confidence),
        confidence=confidence,
        samples=samples,
    )


@dataclass(frozen=True)
class DensityProfile:
    label: str
    points: tuple[DensityValue, ...]

    def __post_init__(self) -> None:
        radii = [p.n for p in self.points]
        if not radii:
            raise ValueError("a profile needs at least one point")
        if any(a >= b for a, b in zip(radii, radii[1:])):
            raise ValueError("profile radii must be strictly increasing")

    @property
    def radii(self) -> tuple[int, ...]:
        return tuple(p.n for p in self.points)

    @property
    def mode(self) -> str:
        modes = {p.mode for p in self.points}
        return modes.pop() if len(modes) == 1 else "mixed"

    def value_at(self, n: int) -> DensityValue:
        for p in self.points:
            if p.n == n:
                return p
        raise KeyError(n)


def density_profile(
    R: InputSetSpec,
    n_range: Iterable[int],
    mode: str = EXACT,
    samples: int = 1000,
    seed: int | None = None,
    confidence: float = DEFAULT_CONFIDENCE,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> DensityProfile:
    """The density function ``n -> u_n(R)`` over ``n_range``."""
    radii = list(n_range)
    if not radii:
        raise ValueError("n_range must be nonempty")
    if any(a >= b for a, b in zip(radii, radii[1:])):
        raise ValueError("n_range must be strictly ascending")
    if mode == EXACT:
        points = [exact_density(R, n, cap) for n in radii]
    elif mode == SAMPLED:
        if seed is None:
            raise ValueError("sampled mode needs an explicit seed")
        points = [mc_density(R, n, samples, seed, confidence) for n in radii]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return DensityProfile(label=R.label, points=tuple(points))


@dataclass(frozen=True)
class ConvergenceReport:
    """Finite-window proxy for the asymptotic class of a density profile.

    ``d`` is the free least-squares decay exponent of ``|rho - delta(n)|``
    against ``n``; ``residual`` is the squared log-residual of the best
    polynomial model with exponent capped at ``d_max``; ``exp_residual`` and
    ``exp_rate`` describe the fit ``exp(-rate * n)``.
    """

    label: str
    rho: float
    d: float
    residual: float
    exp_rate: float
    exp_residual: float
    radii: tuple[int, ...]
    d_max: float
    strong_ratio: float

    def __post_init__(self) -> None:
        if self.label == STRONGLY_GENERIC and self.rho != 1.0:
            raise ValueError("strongly generic profiles converge to 1")
        if self.label == STRONGLY_NEGLIGIBLE and self.rho != 0.0:
            raise ValueError("strongly negligible profiles converge to 0")


def _log(r: Number) -> float:
    if isinstance(r, Fraction):
        return math.log(r.numerator) - math.log(r.denominator)
    return math.log(r)


def _ols(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float, float]:
    """Slope, intercept and sum of squared errors of the least-squares line."""
    k = len(xs)
    mx, my = math.fsum(xs) / k, math.fsum(ys) / k
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    sxy = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    slope = sxy / sxx if sxx else 0.0
    intercept = my - slope * mx
    sse = math.fsum((y - intercept - slope * x) ** 2 for x, y in zip(xs, ys))
    return slope, intercept, sse


def classify_convergence(
    profile: DensityProfile,
    target: str | int = "auto",
    d_max: float = 8.0,
    strong_ratio: float = 10.0,
    min_decay: float = 0.25,
    min_r2: float = 0.8,
) -> ConvergenceReport:
    """Label a profile generic/negligible, strongly or not, or inconclusive.

    The residual ``r(n) = |rho - delta(n)|`` is fitted on a log scale both as
    ``C * n**-d`` (``0 <= d <= d_max``) and as ``C * exp(-a n)``. The profile
    converges if the free polynomial exponent is at least ``min_decay`` and
    one of the two models explains at least ``min_r2`` of the log-variance.
    Convergence is labelled strong when the exponential model's squared error
    is ``strong_ratio`` times smaller than the best capped polynomial's.

    Exact profiles that hit the limit exactly on their whole upper half are
    labelled strong; sampled zeros carry no rate information and are dropped.
    """
    points = profile.points
    if len(points) < 4:
        raise ValueError("convergence classification needs at least 4 points")
    if target == "auto":
        rho = 1 if points[-1].value >= Fraction(1, 2) else 0
    elif target in (0, 1):
        rho = int(target)
    else:
        raise ValueError(f"target must be 0, 1 or 'auto', got {target!r}")

    strong_label = STRONGLY_GENERIC if rho == 1 else STRONGLY_NEGLIGIBLE
    weak_label = GENERIC if rho == 1 else NEGLIGIBLE
    radii = profile.radii
    residuals = [abs(rho - p.value) for p in points]

    def report(label: str, d=0.0, res=0.0, rate=0.0, exp_res=0.0) -> ConvergenceReport:
        limit = float(rho) if label != INCONCLUSIVE else float(points[-1].value)
        return ConvergenceReport(label, limit, d, res, rate, exp_res, radii, d_max, strong_ratio)

    all_exact = all(p.exact for p in points)
    tail = residuals[len(residuals) // 2:]
    if all_exact and all(r == 0 for r in tail):
        return report(strong_label, d=math.inf, rate=math.inf)

    kept = [(n, r) for n, r in zip(radii, residuals) if r > 0]
    if not kept:
        # sampled estimates sitting on the limit: convergence without a rate
        return report(weak_label)
    if len(kept) < 3:
        return report(INCONCLUSIVE)

    ns = [float(n) for n, _ in kept]
    ys = [_log(r) for _, r in kept]
    logn = [math.log(n) for n in ns]
    my = math.fsum(ys) / len(ys)
    sst = math.fsum((y - my) ** 2 for y in ys)

    slope, _, sse_free = _ols(logn, ys)
    d = -slope
    d_capped = min(max(d, 0.0), d_max)
    intercept = math.fsum(y + d_capped * x for x, y in zip(logn, ys)) / len(ys)
    sse_poly = math.fsum((y - intercept + d_capped * x) ** 2 for x, y in zip(logn, ys))
    exp_slope, _, sse_exp = _ols(ns, ys)
    rate = -exp_slope

    if sst == 0.0 or d < min_decay:
        return report(INCONCLUSIVE, d, sse_poly, rate, sse_exp)
    r2 = 1.0 - min(sse_free, sse_exp) / sst
    if r2 < min_r2:
        return report(INCONCLUSIVE, d, sse_poly, rate, sse_exp)
    if rate > 0 and sse_exp * strong_ratio <= sse_poly:
        return report(strong_label, d, sse_poly, rate, sse_exp)
    return report(weak_label, d, sse_poly, rate, sse_exp)
