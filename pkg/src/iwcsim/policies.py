"""Sender packet construction (RR, WC, IWC, IWC-MF) and receiver decoding/feedback."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .channel import RngStream
from .core import (
    FeedbackForm,
    FeedbackMsg,
    Packet,
    PayloadEntry,
    PolicyKind,
    ProtocolError,
    ReceiverState,
    SenderState,
    delivery_bitmap,
    oldest_undelivered,
    unwrap_seq,
)
from .degree import DegreeContext, no_feedback_degree, optimal_degree_bruteforce, optimal_degree_closed


@dataclass(frozen=True)
class PolicyOptions:
    """Interpretation switches for IWC-MF; defaults follow the published scheme."""

    iwcmf_exclude_confirmed: bool = True
    iwcmf_aggressive_fill: bool = False


DEFAULT_OPTIONS = PolicyOptions()


def _uncoded(state: SenderState, seq: int) -> PayloadEntry:
    sym = state.symbol_log[seq]
    return PayloadEntry((seq,), sym.payload, sym.width)


def _coded(state: SenderState, coding_set: list[int], degree: int, rng: RngStream) -> PayloadEntry:
    picks = sorted(rng.sample(coding_set, min(degree, len(coding_set))))
    log = state.symbol_log
    acc = 0
    for s in picks:
        acc ^= log[s].payload
    return PayloadEntry(tuple(picks), acc, log[picks[0]].width)


def _known_u(state: SenderState, msg: FeedbackMsg, fb_step: int) -> int:
    # true u lies in [fb_step - delta, fb_step + 1]
    return unwrap_seq(msg.u, fb_step + 1, state.l_o)


def _fresh_feedback(state: SenderState, i: int) -> tuple[FeedbackMsg, int] | None:
    fb = state.last_feedback
    if fb is not None and fb[1] == i - 1:
        return fb
    return None


def _no_feedback_window(state: SenderState, i: int, policy: PolicyKind, options: PolicyOptions) -> list[int]:
    u0 = state.oldest_unexpired(i)
    start = u0
    confirmed: set[int] = set()
    if state.last_feedback is not None:
        msg, fb_step = state.last_feedback
        u_l = _known_u(state, msg, fb_step)
        start = max(u0, u_l)
        if policy is PolicyKind.IWC_MF and options.iwcmf_exclude_confirmed and msg.bitmap is not None:
            # only bits for symbols that existed when the feedback was formed are real
            confirmed = {
                u_l + 1 + k for k, bit in enumerate(msg.bitmap) if bit and u_l + 1 + k <= fb_step
            }
    return [s for s in range(start, i) if s not in confirmed]


def build_packet(
    policy: PolicyKind,
    state: SenderState,
    i: int,
    rng: RngStream,
    options: PolicyOptions = DEFAULT_OPTIONS,
) -> Packet:
    """Build packet ``p_i``; ``state.symbol_log`` must already hold ``s_i``."""
    if not isinstance(policy, PolicyKind):
        policy = PolicyKind(policy)
    entries = [_uncoded(state, i)]
    fresh = _fresh_feedback(state, i)
    if fresh is None:
        _fill_without_feedback(policy, state, i, rng, options, entries)
    else:
        _fill_with_feedback(policy, state, i, rng, options, entries, *fresh)
    return Packet(i, tuple(entries))


def _fill_without_feedback(policy, state, i, rng, options, entries):
    slots = state.b - 1
    if slots <= 0:
        return
    w = _no_feedback_window(state, i, policy, options)
    if policy is PolicyKind.RR:
        entries.extend(_uncoded(state, s) for s in reversed(w[-slots:]))
        return
    if len(w) <= slots:
        entries.extend(_uncoded(state, s) for s in w)
        return
    if policy is PolicyKind.WC:
        # degree range is 1..i-u', the window before any exclusion
        for _ in range(slots):
            d = no_feedback_degree(policy, len(w), state.d_nf, rng)
            entries.append(_coded(state, w, d, rng))
    else:
        d = no_feedback_degree(policy, len(w), state.d_nf)
        for _ in range(slots):
            entries.append(_coded(state, w, d, rng))


def _fill_with_feedback(policy, state, i, rng, options, entries, msg: FeedbackMsg, fb_step: int):
    u = _known_u(state, msg, fb_step)
    if u >= i:
        return
    slots = state.b - 1
    # s_u may have expired between the feedback and now; its slot is then free
    if u >= state.oldest_unexpired(i) and slots > 0:
        entries.append(_uncoded(state, u))
        slots -= 1
    if slots <= 0:
        return
    window = list(range(u + 1, i))

    if policy is PolicyKind.RR:
        entries.extend(_uncoded(state, s) for s in reversed(window[-slots:]))
        return

    if policy is PolicyKind.IWC_MF:
        if msg.bitmap is None:
            raise ProtocolError("IWC-MF needs bitmap feedback")
        missing = [u + 1 + k for k, bit in enumerate(msg.bitmap) if not bit and u + 1 + k < i]
        take = missing[:slots]
        entries.extend(_uncoded(state, s) for s in take)
        slots -= len(take)
        if options.iwcmf_aggressive_fill and slots > 0:
            unknown = [s for s in window if s > u + len(msg.bitmap)]
            entries.extend(_uncoded(state, s) for s in unknown[:slots])
        return

    if msg.beta is None:
        raise ProtocolError(f"{policy.value} needs cumulative feedback")
    gap = i - u
    beta = min(msg.beta, gap)
    missing_in_window = beta - 1
    if missing_in_window <= 0:
        return
    if len(window) <= slots:
        entries.extend(_uncoded(state, s) for s in window)
    elif missing_in_window == len(window):
        entries.extend(_uncoded(state, s) for s in window[:slots])
    else:
        ctx = DegreeContext(gap, beta)
        if policy is PolicyKind.WC:
            d = optimal_degree_bruteforce(ctx)
        else:
            d = optimal_degree_closed(ctx)
        for _ in range(slots):
            entries.append(_coded(state, window, d, rng))


def receive_entries(state: ReceiverState, entries: Iterable[PayloadEntry]) -> list[int]:
    """Decode entries in order, single pass; returns seqs newly delivered.

    A coded entry recovers its one missing constituent when every other
    constituent is already delivered; otherwise it is dropped.
    """
    t = state.current_time
    lo = state.oldest_unexpired
    delivered = state.delivered
    payloads = state.payloads
    out = []
    for e in entries:
        cs = e.constituents
        for c in cs:
            if c < 0 or c > t:
                raise ProtocolError(f"entry references seq {c} outside [0, {t}]")
        if len(cs) == 1:
            s = cs[0]
            if s >= lo and s not in delivered:
                delivered.add(s)
                payloads[s] = e.payload
                out.append(s)
            continue
        missing = None
        for c in cs:
            if c not in delivered:
                if missing is not None:
                    missing = -1
                    break
                missing = c
        if missing is None or missing < lo:
            continue
        p = e.payload
        for c in cs:
            if c != missing:
                p ^= payloads[c]
        delivered.add(missing)
        payloads[missing] = p
        out.append(missing)
    return out


def receive_packet(state: ReceiverState, pkt: Packet) -> list[int]:
    return receive_entries(state, pkt.entries)


def make_feedback(policy: PolicyKind, state: ReceiverState, l_m: int = 4, l_o: int = 17) -> FeedbackMsg:
    u, beta = oldest_undelivered(state)
    if PolicyKind(policy).feedback_form is FeedbackForm.BITMAP:
        return FeedbackMsg.with_bitmap(u, delivery_bitmap(state, u, l_m), l_o)
    return FeedbackMsg.cumulative(u, beta, l_o, l_m)
