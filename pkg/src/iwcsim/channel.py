"""Erasure channels, feedback reception, and the seeded random substreams behind them.

Every random decision in a run draws from a named substream derived from the
run seed, so e.g. changing ``p_fb`` never perturbs the uplink erasure pattern.
Substreams are Philox (counter-based) generators keyed by ``(seed, label)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, TypeVar

import numpy as np

T = TypeVar("T")

SUBSTREAMS = (
    "uplink",
    "feedback",
    "relay-uplink",
    "relay-downlink",
    "relay-feedback",
    "policy-coding",
    "relay-coding",
    "payload",
)

_BLOCK = 4096


class RngStream:
    """Buffered uniform draws from one Philox substream.

    Consumption is one uniform double per :meth:`random` or :meth:`randbelow`
    call, in call order.
    """

    __slots__ = ("label", "_gen", "_buf", "_pos")

    def __init__(self, seed: int, label: str):
        if label not in SUBSTREAMS:
            raise ValueError(f"unknown substream {label!r}")
        seq = np.random.SeedSequence(entropy=seed, spawn_key=(SUBSTREAMS.index(label),))
        self.label = label
        self._gen = np.random.Generator(np.random.Philox(seq))
        self._buf: list[float] = []
        self._pos = 0

    def random(self) -> float:
        pos = self._pos
        if pos >= len(self._buf):
            self._buf = self._gen.random(_BLOCK).tolist()
            pos = 0
        self._pos = pos + 1
        return self._buf[pos]

    def randbelow(self, n: int) -> int:
        return int(self.random() * n)

    def sample(self, population: Sequence[T], k: int) -> list[T]:
        """``k`` distinct items, uniform without replacement (partial Fisher-Yates)."""
        n = len(population)
        if not 0 <= k <= n:
            raise ValueError(f"cannot sample {k} of {n}")
        swapped: dict[int, int] = {}
        out = []
        for j in range(k):
            r = j + int(self.random() * (n - j))
            picked = swapped.get(r, r)
            swapped[r] = swapped.get(j, j)
            out.append(population[picked])
        return out

    def bits(self, width: int) -> int:
        """Uniform integer of ``width`` bits."""
        if width <= 52:
            return int(self.random() * (1 << width))
        words = (width + 31) // 32
        out = 0
        for w in self._gen.integers(0, 1 << 32, size=words, dtype=np.uint64).tolist():
            out = (out << 32) | w
        return out >> (words * 32 - width)


def make_streams(seed: int) -> dict[str, RngStream]:
    return {label: RngStream(seed, label) for label in SUBSTREAMS}


@dataclass(frozen=True)
class ChannelConfig:
    """Serializable channel description; ``p_s`` is used by Bernoulli only."""

    kind: str = "bernoulli"
    p_s: float = 0.7
    p_gb: float = 0.25
    p_bg: float = 0.5

    def __post_init__(self):
        if self.kind not in ("bernoulli", "ge"):
            raise ValueError(f"channel kind must be 'bernoulli' or 'ge', got {self.kind!r}")
        for name in ("p_s", "p_gb", "p_bg"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.kind == "ge" and self.p_gb + self.p_bg == 0:
            raise ValueError("GE channel needs p_gb + p_bg > 0")

    def stationary_success(self) -> float:
        if self.kind == "bernoulli":
            return self.p_s
        return self.p_bg / (self.p_gb + self.p_bg)


class BernoulliChannel:
    __slots__ = ("p_s", "rng")

    def __init__(self, p_s: float, rng: RngStream):
        self.p_s = p_s
        self.rng = rng

    def transmit(self) -> bool:
        return self.rng.random() < self.p_s


class GilbertElliottChannel:
    """Two-state Markov erasure channel; good delivers, bad erases.

    The initial state is drawn from the stationary distribution (one draw).
    Each :meth:`transmit` reports the current state, then takes one draw to
    decide the transition.
    """

    __slots__ = ("p_gb", "p_bg", "rng", "good")

    def __init__(self, p_gb: float, p_bg: float, rng: RngStream, good: bool | None = None):
        self.p_gb = p_gb
        self.p_bg = p_bg
        self.rng = rng
        if good is None:
            good = rng.random() < p_bg / (p_gb + p_bg)
        self.good = good

    def transmit(self) -> bool:
        delivered = self.good
        if delivered:
            self.good = not (self.rng.random() < self.p_gb)
        else:
            self.good = self.rng.random() < self.p_bg
        return delivered


ChannelModel = BernoulliChannel | GilbertElliottChannel


def make_channel(cfg: ChannelConfig, rng: RngStream) -> ChannelModel:
    if cfg.kind == "bernoulli":
        return BernoulliChannel(cfg.p_s, rng)
    return GilbertElliottChannel(cfg.p_gb, cfg.p_bg, rng)


def channel_transmit(ch: ChannelModel) -> bool:
    """True if the packet is delivered, False if erased."""
    return ch.transmit()


def feedback_arrives(p_fb: float, rng: RngStream) -> bool:
    if not 0.0 <= p_fb <= 1.0:
        raise ValueError(f"p_fb must be in [0, 1], got {p_fb}")
    return rng.random() < p_fb
