"""Shared domain types: symbols, payload entries, packets, feedback and window bookkeeping."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence


class ProtocolError(RuntimeError):
    """Raised when a packet violates the simulator's own protocol invariants."""


class EntryKind(enum.Enum):
    UNCODED = "uncoded"
    CODED = "coded"


class PolicyKind(enum.Enum):
    RR = "RR"
    WC = "WC"
    IWC = "IWC"
    IWC_MF = "IWC-MF"

    @property
    def feedback_form(self) -> "FeedbackForm":
        return FeedbackForm.BITMAP if self is PolicyKind.IWC_MF else FeedbackForm.CUMULATIVE


class RelayPolicy(enum.Enum):
    UC_R = "UC-R"
    IWC_R = "IWC-R"


class FeedbackForm(enum.Enum):
    CUMULATIVE = "cumulative"
    BITMAP = "bitmap"


@dataclass(frozen=True, slots=True)
class SymbolRecord:
    """One information symbol. ``payload`` holds ``width`` bits as an int."""

    seq: int
    payload: int
    width: int = 32

    def __post_init__(self):
        if self.seq < 0:
            raise ValueError(f"seq must be non-negative, got {self.seq}")
        if self.payload < 0 or self.payload >> self.width:
            raise ValueError(f"payload does not fit in {self.width} bits")


class PayloadEntry(NamedTuple):
    """A symbol slot in a packet.

    ``constituents`` lists the seq numbers XORed into ``payload``; a single
    constituent means the entry is the information symbol itself.
    """

    constituents: tuple[int, ...]
    payload: int
    width: int = 32

    @property
    def kind(self) -> EntryKind:
        return EntryKind.UNCODED if len(self.constituents) == 1 else EntryKind.CODED

    @property
    def degree(self) -> int:
        return len(self.constituents)

    @property
    def is_coded(self) -> bool:
        return len(self.constituents) > 1


@dataclass(frozen=True, slots=True)
class Packet:
    seq: int
    entries: tuple[PayloadEntry, ...]

    def __post_init__(self):
        if not self.entries:
            raise ValueError("packet needs at least the fresh symbol")
        if self.entries[0].constituents != (self.seq,):
            raise ValueError("first entry must carry the fresh symbol uncoded")


@dataclass(frozen=True, slots=True)
class FeedbackMsg:
    """Receiver report. ``u`` is the on-air field value (``u mod 2**l_o``)."""

    form: FeedbackForm
    u: int
    beta: int | None = None
    bitmap: tuple[bool, ...] | None = None

    @classmethod
    def cumulative(cls, u: int, beta: int, l_o: int, l_m: int) -> "FeedbackMsg":
        # beta saturates; u wraps
        return cls(FeedbackForm.CUMULATIVE, u % (1 << l_o), min(beta, (1 << l_m) - 1))

    @classmethod
    def with_bitmap(cls, u: int, bitmap: Sequence[bool], l_o: int) -> "FeedbackMsg":
        return cls(FeedbackForm.BITMAP, u % (1 << l_o), bitmap=tuple(bool(x) for x in bitmap))


def unwrap_seq(field_value: int, reference: int, l_o: int) -> int:
    """Recover a full seq from its ``l_o``-bit field.

    The true value is assumed to lie in ``(reference - 2**l_o, reference]``.
    """
    modulus = 1 << l_o
    return reference - ((reference - field_value) % modulus)


def xor_combine(symbols: Sequence[SymbolRecord]) -> PayloadEntry:
    """XOR a list of information symbols into one payload entry."""
    if not symbols:
        raise ValueError("xor_combine needs at least one symbol")
    width = symbols[0].width
    seqs = []
    acc = 0
    for sym in symbols:
        if sym.width != width:
            raise ValueError("payload lengths differ")
        acc ^= sym.payload
        seqs.append(sym.seq)
    if len(set(seqs)) != len(seqs):
        raise ValueError(f"duplicate seq in {seqs}")
    return PayloadEntry(tuple(seqs), acc, width)


@dataclass
class SenderState:
    delta: int = 16
    b: int = 3
    d_nf: int = 2
    l_m: int = 4
    l_o: int = 17
    symbol_log: dict[int, SymbolRecord] = field(default_factory=dict)
    # (message, step after whose packet it was sent)
    last_feedback: tuple[FeedbackMsg, int] | None = None

    def add_symbol(self, sym: SymbolRecord) -> None:
        self.symbol_log[sym.seq] = sym
        self.symbol_log.pop(sym.seq - self.delta - 1, None)

    def oldest_unexpired(self, i: int) -> int:
        return max(0, i - self.delta)


@dataclass
class ReceiverState:
    delta: int = 16
    current_time: int = 0
    delivered: set[int] = field(default_factory=set)
    payloads: dict[int, int] = field(default_factory=dict)

    @property
    def oldest_unexpired(self) -> int:
        return max(0, self.current_time - self.delta)

    def advance(self, t: int) -> None:
        """Move the clock to ``t`` and drop deliveries that have expired."""
        if t < self.current_time:
            raise ValueError("time cannot go backwards")
        lo_old = self.oldest_unexpired
        self.current_time = t
        lo_new = self.oldest_unexpired
        if lo_new - lo_old > 4 * self.delta:
            self.delivered = {s for s in self.delivered if s >= lo_new}
            self.payloads = {s: p for s, p in self.payloads.items() if s >= lo_new}
            return
        for s in range(lo_old, lo_new):
            self.delivered.discard(s)
            self.payloads.pop(s, None)

    def mark_delivered(self, seq: int, payload: int) -> bool:
        if seq < self.oldest_unexpired or seq in self.delivered:
            return False
        self.delivered.add(seq)
        self.payloads[seq] = payload
        return True


def oldest_undelivered(state: ReceiverState) -> tuple[int, int]:
    """Return ``(u, beta)`` over the receiver's unexpired window.

    With nothing missing, ``u`` is the next seq to be generated and beta is 0.
    """
    t = state.current_time
    delivered = state.delivered
    u = None
    beta = 0
    for s in range(state.oldest_unexpired, t + 1):
        if s not in delivered:
            if u is None:
                u = s
            beta += 1
    return (t + 1 if u is None else u), beta


def delivery_bitmap(state: ReceiverState, u: int, l_m: int) -> tuple[bool, ...]:
    """Delivery flags for ``u+1 .. u+l_m``; symbols not yet generated read as delivered."""
    if l_m < 1:
        raise ValueError("l_m must be at least 1")
    t = state.current_time
    delivered = state.delivered
    return tuple((j > t) or (j in delivered) for j in range(u + 1, u + 1 + l_m))
