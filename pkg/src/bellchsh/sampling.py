"""Finite-statistics simulation of CHSH behaviors.

Random numbers come from xorshift64* so that streams are reproducible in
any language.  With 64-bit unsigned wrap-around arithmetic::

    x ^= x >> 12
    x ^= x << 25
    x ^= x >> 27
    out = x * 0x2545F4914F6CDD1D
    u   = (out >> 11) * 2**-53          # uniform in [0, 1)

Each context ``k`` (0..3 in order AB, AB', A'B, A'B') draws from its own
stream whose initial state is ``splitmix64(seed ^ CONTEXT_TAGS[k])``
(replaced by 1 if that is 0).  ``splitmix64(z)`` is::

    z += 0x9E3779B97F4A7C15
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    return z ^ (z >> 31)

A uniform ``u`` selects the first canonical outcome ``k`` whose cumulative
probability exceeds ``u`` (``(+,+), (+,-), (-,+), (-,-)``), falling back to
the last outcome.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .behavior import Behavior, MarginalReport, _ctx_index, chsh_value, format_tables
from .errors import ValidationError
from .scenario import ALICE, BOB, CONTEXTS

MASK64 = (1 << 64) - 1
CONTEXT_TAGS = (
    0x243F6A8885A308D3,
    0x13198A2E03707344,
    0xA4093822299F31D0,
    0x082EFA98EC4E6C89,
)
STAT_SIGMAS = 3.0
MIN_SHOTS = 100


def splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def substream_state(seed: int, context: int) -> int:
    return splitmix64((seed & MASK64) ^ CONTEXT_TAGS[context]) or 1


class XorShift64Star:
    """Pure-Python reference implementation of the generator."""

    def __init__(self, state: int):
        if not 0 < state <= MASK64:
            raise ValueError("xorshift64* state must be a non-zero 64-bit integer")
        self.state = state

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * 0x2545F4914F6CDD1D) & MASK64

    def random(self) -> float:
        return (self.next_u64() >> 11) * 2.0**-53


@numba.njit(cache=True)
def _draw_counts(state, cdf, shots):
    counts = np.zeros(4, dtype=np.int64)
    x = np.uint64(state)
    mult = np.uint64(0x2545F4914F6CDD1D)
    scale = 2.0**-53
    for _ in range(shots):
        x ^= x >> np.uint64(12)
        x ^= x << np.uint64(25)
        x ^= x >> np.uint64(27)
        u = float((x * mult) >> np.uint64(11)) * scale
        k = 3
        for j in range(3):
            if u < cdf[j]:
                k = j
                break
        counts[k] += 1
    return counts


def draw_counts(state: int, probs, shots: int) -> np.ndarray:
    """Outcome counts of ``shots`` inverse-CDF draws from one substream."""
    cdf = np.cumsum(np.asarray(probs, dtype=float))
    return _draw_counts(np.uint64(state), cdf, int(shots))


@dataclass(frozen=True, eq=False)
class SampledBehavior:
    counts: np.ndarray  # int array shaped like Behavior.tables
    shots: int
    seed: int

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.shape != (2, 2, 2, 2) or np.any(c < 0):
            raise ValidationError("sample counts must be a non-negative (2, 2, 2, 2) array")
        if np.any(c.sum(axis=(2, 3)) != self.shots):
            raise ValidationError("every context must hold exactly `shots` outcomes")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    def frequencies(self) -> Behavior:
        return Behavior(self.counts / self.shots)

    def dump(self) -> str:
        header = f"# seed={self.seed} shots={self.shots}\n"
        return header + format_tables(self.counts, fmt=lambda v: str(int(v)))


def sample(b: Behavior, shots_per_context: int, seed: int) -> SampledBehavior:
    if shots_per_context < 1:
        raise ValueError("shots_per_context must be at least 1")
    tables = np.asarray(b.tables, dtype=float)
    counts = np.zeros((2, 2, 2, 2), dtype=np.int64)
    for k, ctx in enumerate(CONTEXTS):
        x, y = _ctx_index(ctx)
        drawn = draw_counts(substream_state(seed, k), tables[x, y].ravel(), shots_per_context)
        counts[x, y] = drawn.reshape(2, 2)
    return SampledBehavior(counts, shots_per_context, seed & MASK64)


@dataclass(frozen=True)
class EstimateWithError:
    value: float
    standard_error: float

    def within(self, target: float, sigmas: float = STAT_SIGMAS) -> bool:
        return abs(self.value - target) <= sigmas * self.standard_error


def estimate_correlators(sb: SampledBehavior) -> list[EstimateWithError]:
    freq = sb.counts / sb.shots
    sign = np.array([[1, -1], [-1, 1]])
    out = []
    for ctx in CONTEXTS:
        e = float((freq[_ctx_index(ctx)] * sign).sum())
        out.append(EstimateWithError(e, math.sqrt(max(1 - e * e, 0.0) / sb.shots)))
    return out


def estimate_chsh(sb: SampledBehavior) -> EstimateWithError:
    """CHSH from frequency correlators; errors combined as independent."""
    es = estimate_correlators(sb)
    value = chsh_value([e.value for e in es])
    return EstimateWithError(value, math.sqrt(sum(e.standard_error**2 for e in es)))


def statistical_marginal_check(sb: SampledBehavior, sigmas: float = STAT_SIGMAS) -> MarginalReport:
    """Marginal laws tested against ``sigmas`` pooled standard errors.

    Discrepancies use the same L1 measure as the exact check.  For each
    party/setting the two marginal frequencies of outcome ``+1`` are
    compared with a pooled two-proportion standard error; in L1 units the
    threshold is ``2 * sigmas * se``.  With fewer than 100 shots per
    context the verdict is withheld.
    """
    c = sb.counts
    n = sb.shots
    alice, bob, thresholds = {}, {}, {}
    for i, x in enumerate(ALICE):
        plus = c[i, :, 0, :].sum(axis=-1)  # Alice +1 counts under B, B'
        alice[x], thresholds[x] = _two_proportion(plus[0], plus[1], n, sigmas)
    for j, y in enumerate(BOB):
        plus = c[:, j, :, 0].sum(axis=-1)
        bob[y], thresholds[y] = _two_proportion(plus[0], plus[1], n, sigmas)
    return MarginalReport(
        alice,
        bob,
        tolerance=sigmas,
        thresholds=thresholds,
        insufficient_statistics=n < MIN_SHOTS,
        min_shots=MIN_SHOTS,
    )


def _two_proportion(k1: int, k2: int, n: int, sigmas: float) -> tuple[float, float]:
    p1, p2 = k1 / n, k2 / n
    pooled = (k1 + k2) / (2 * n)
    se = math.sqrt(pooled * (1 - pooled) * 2 / n)
    return 2 * abs(p1 - p2), 2 * sigmas * se
