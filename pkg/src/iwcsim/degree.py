"""Degree selection for coded symbols.

Two routes compute the degree used after a cumulative feedback:

* :func:`optimal_degree_bruteforce` enumerates the recovery-probability
  objective with exact integer binomials and returns the smallest maximiser.
* :func:`optimal_degree_closed` is the constant-time rule
  ``min(floor(gap / (beta - 1)), gap - beta)`` used by IWC.

The two do not always agree; see ``degree_disagreements``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import TYPE_CHECKING

from .core import PolicyKind

if TYPE_CHECKING:
    from .channel import RngStream


@dataclass(frozen=True, slots=True)
class DegreeContext:
    """``gap`` is ``i - u`` (window span including s_u); ``beta`` is the missing count."""

    gap: int
    beta: int

    def __post_init__(self):
        if not 1 < self.beta < self.gap:
            raise ValueError(f"need 1 < beta < gap, got gap={self.gap}, beta={self.beta}")

    @property
    def max_degree(self) -> int:
        return self.gap - self.beta


def objective(ctx: DegreeContext, d: int) -> Fraction:
    """Probability-style score of degree ``d``: C(beta-1, 1) C(gap-beta, d-1) / C(gap, d)."""
    if not 1 <= d <= ctx.max_degree:
        raise ValueError(f"degree {d} outside [1, {ctx.max_degree}]")
    return Fraction((ctx.beta - 1) * comb(ctx.gap - ctx.beta, d - 1), comb(ctx.gap, d))


@lru_cache(maxsize=8192)
def _argmax(gap: int, beta: int) -> int:
    ctx = DegreeContext(gap, beta)
    best_d, best = 1, objective(ctx, 1)
    for d in range(2, ctx.max_degree + 1):
        val = objective(ctx, d)
        if val > best:
            best_d, best = d, val
    return best_d


def optimal_degree_bruteforce(ctx: DegreeContext) -> int:
    """Smallest ``d`` in ``[1, gap - beta]`` maximising :func:`objective`."""
    return _argmax(ctx.gap, ctx.beta)


def optimal_degree_closed(ctx: DegreeContext) -> int:
    return min(ctx.gap // (ctx.beta - 1), ctx.gap - ctx.beta)


def no_feedback_degree(policy, coding_set_size: int, d_nf: int, rng: RngStream | None = None) -> int:
    """Degree for coded symbols sent after a transmission that drew no feedback.

    WC draws uniformly from ``1..coding_set_size``; every other coding policy
    uses ``d_nf`` capped at the coding-set size.
    """
    if coding_set_size < 1 or d_nf < 1:
        raise ValueError("coding_set_size and d_nf must be positive")
    if PolicyKind(policy) is PolicyKind.WC:
        if rng is None:
            raise ValueError("WC needs an rng")
        return 1 + rng.randbelow(coding_set_size)
    return min(d_nf, coding_set_size)


def degree_disagreements(max_gap: int = 64) -> list[tuple[int, int, int, int]]:
    """All ``(gap, beta, closed, bruteforce)`` where the closed form misses the maximum.

    Compared at the objective-value level, so ties are not reported.
    """
    out = []
    for gap in range(3, max_gap + 1):
        for beta in range(2, gap):
            ctx = DegreeContext(gap, beta)
            closed = optimal_degree_closed(ctx)
            brute = optimal_degree_bruteforce(ctx)
            if objective(ctx, closed) != objective(ctx, brute):
                out.append((gap, beta, closed, brute))
    return out
