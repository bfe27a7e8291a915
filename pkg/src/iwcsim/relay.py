"""Overhearing relay: uncoded forwarding (UC-R) and threshold-triggered coded forwarding (IWC-R)."""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field

from .channel import RngStream
from .core import FeedbackMsg, Packet, PayloadEntry, RelayPolicy, SymbolRecord, unwrap_seq, xor_combine


@dataclass
class RelayState:
    r_t: int = 2
    r_m: int = 16
    d_nf: int = 2
    delta: int = 16
    l_o: int = 17
    buffer: "OrderedDict[int, SymbolRecord]" = field(default_factory=OrderedDict)
    new_since_last_tx: int = 0
    last_overheard_u: int | None = None
    last_overheard_feedback_step: int | None = None
    # symbols buffered during the current step, for UC-R
    pending: list[SymbolRecord] = field(default_factory=list)

    def __post_init__(self):
        if self.r_t < 1 or self.r_m < 1:
            raise ValueError("relay threshold and memory must be positive")


def relay_overhear_packet(state: RelayState, pkt: Packet) -> int:
    """Buffer the packet's uncoded symbols; returns how many were new."""
    added = 0
    buf = state.buffer
    for e in pkt.entries:
        if e.is_coded:
            continue
        seq = e.constituents[0]
        if seq in buf:
            continue
        while len(buf) >= state.r_m:
            buf.popitem(last=False)
        rec = SymbolRecord(seq, e.payload, e.width)
        buf[seq] = rec
        state.pending.append(rec)
        added += 1
    state.new_since_last_tx += added
    return added


def relay_overhear_feedback(state: RelayState, fb: FeedbackMsg, step: int) -> None:
    state.last_overheard_u = unwrap_seq(fb.u, step + 1, state.l_o)
    state.last_overheard_feedback_step = step


def _prune_expired(state: RelayState, step: int) -> None:
    # insertion order is not seq order: a re-sent old s_u lands after newer symbols
    lo = step - state.delta
    for seq in [s for s in state.buffer if s < lo]:
        del state.buffer[seq]


def relay_forward_decision(
    policy: RelayPolicy, state: RelayState, step: int, rng: RngStream
) -> list[PayloadEntry]:
    """Entries the relay transmits this step, each as its own transmission.

    UC-R forwards everything buffered this step. IWC-R sends at most one
    entry once ``r_t`` new symbols have accumulated: the destination's oldest
    missing symbol when the feedback after the previous source packet was
    overheard and the symbol is buffered, else a coded symbol of degree
    ``min(d_nf, m)`` over the buffer.
    """
    policy = RelayPolicy(policy)
    pending, state.pending = state.pending, []
    if policy is RelayPolicy.UC_R:
        state.new_since_last_tx = 0
        return [PayloadEntry((r.seq,), r.payload, r.width) for r in pending]

    if state.new_since_last_tx < state.r_t:
        return []
    state.new_since_last_tx = 0
    _prune_expired(state, step)

    # p_step is the packet that completed the threshold; only the feedback
    # sent right after p_{step-1} counts
    u = state.last_overheard_u
    fresh = u is not None and state.last_overheard_feedback_step == step - 1
    if fresh and u in state.buffer:
        rec = state.buffer[u]
        return [PayloadEntry((u,), rec.payload, rec.width)]
    if not state.buffer:
        return []
    seqs = list(state.buffer)
    d = min(state.d_nf, len(seqs))
    picks = sorted(rng.sample(seqs, d))
    return [xor_combine([state.buffer[s] for s in picks])]
