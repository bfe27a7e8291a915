"""Discrete-time engine: one source packet per step, optional relay, sporadic feedback.

Per step ``i``:

1. the source generates ``s_i`` and builds ``p_i`` from the feedback that
   followed ``p_{i-1}`` (if any);
2. the uplink channel decides whether the destination receives ``p_i``;
3. the relay (if any) overhears ``p_i`` on its own channel, and its
   forwarded entries cross the relay->destination channel;
4. if the destination received ``p_i`` it forms feedback, which reaches the
   source with probability ``p_fb`` and the relay over its overhear channel;
5. the expiry boundary advances.

Symbols whose delivery window is still open when the run ends (the last
``delta``) are left out of both N and M.
"""

from __future__ import annotations

import json
import math
import statistics
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Iterable, Sequence

from .channel import ChannelConfig, make_channel, make_streams
from .core import (
    FeedbackMsg,
    Packet,
    PolicyKind,
    ReceiverState,
    RelayPolicy,
    SenderState,
    SymbolRecord,
)
from .policies import PolicyOptions, build_packet, make_feedback, receive_entries
from .relay import RelayState, relay_forward_decision, relay_overhear_feedback, relay_overhear_packet

TRACE_FIELDS = ("step", "actor", "event", "entries", "outcome", "delivered", "feedback")


@dataclass(frozen=True)
class SimConfig:
    policy: PolicyKind = PolicyKind.IWC
    relay_policy: RelayPolicy | None = None
    n: int = 100_000
    delta: int = 16
    b: int = 3
    d_nf: int = 2
    l_m: int = 4
    l_o: int = 17
    l_s: int = 32
    r_t: int = 2
    r_m: int = 16
    p_fb: float = 0.25
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    # relay links default to ``channel`` when unset
    relay_uplink: ChannelConfig | None = None
    relay_downlink: ChannelConfig | None = None
    relay_feedback: ChannelConfig | None = None
    iwcmf_exclude_confirmed: bool = True
    iwcmf_aggressive_fill: bool = False
    seed: int = 0
    record_trace: bool = False
    trace_output: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "policy", PolicyKind(self.policy))
        if self.relay_policy is not None:
            object.__setattr__(self, "relay_policy", RelayPolicy(self.relay_policy))
        for name in ("channel", "relay_uplink", "relay_downlink", "relay_feedback"):
            v = getattr(self, name)
            if isinstance(v, dict):
                object.__setattr__(self, name, ChannelConfig(**v))
        self.validate()

    def validate(self) -> None:
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if self.delta < 1:
            raise ValueError("delta must be at least 1")
        if self.n <= self.delta:
            raise ValueError(f"n={self.n} must exceed delta={self.delta}: no symbol would complete its window")
        if self.b < 1:
            raise ValueError("b must be at least 1")
        if self.d_nf < 1:
            raise ValueError("d_nf must be at least 1")
        if self.l_m < 1:
            raise ValueError("l_m must be at least 1")
        if self.l_s < 1:
            raise ValueError("l_s must be at least 1")
        if (1 << self.l_o) < self.delta + 2:
            raise ValueError(f"l_o={self.l_o} bits cannot distinguish a window of delta={self.delta}")
        if self.r_t < 1 or self.r_m < 1:
            raise ValueError("r_t and r_m must be at least 1")
        if not 0.0 <= self.p_fb <= 1.0:
            raise ValueError("p_fb must be in [0, 1]")

    def link(self, name: str) -> ChannelConfig:
        v = getattr(self, name)
        return self.channel if v is None else v

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, (PolicyKind, RelayPolicy)):
                v = v.value
            elif isinstance(v, ChannelConfig):
                v = asdict(v)
            out[f.name] = v
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SimConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        return cls(**data)


@dataclass
class SimResult:
    n: int
    m: int
    generated: int
    source_tx: int = 0
    relay_tx: int = 0
    coded_entries: int = 0
    source_xors: int = 0
    relay_xors: int = 0
    feedbacks_sent: int = 0
    feedbacks_received: int = 0
    relay_buffered: int = 0
    trace: list[dict[str, Any]] | None = None
    delivered_payloads: dict[int, int] | None = None

    @property
    def dfr(self) -> float:
        return (self.n - self.m) / self.n

    @property
    def xor_ops(self) -> int:
        return self.source_xors + self.relay_xors


def _desc(entries) -> list[list[int]]:
    return [list(e.constituents) for e in entries]


def _fb_desc(fb: FeedbackMsg) -> dict[str, Any]:
    if fb.bitmap is not None:
        return {"u": fb.u, "bitmap": [int(x) for x in fb.bitmap]}
    return {"u": fb.u, "beta": fb.beta}


def _rec(step, actor, event, entries=None, outcome=None, delivered=None, feedback=None) -> dict[str, Any]:
    return {
        "step": step,
        "actor": actor,
        "event": event,
        "entries": entries,
        "outcome": outcome,
        "delivered": delivered,
        "feedback": feedback,
    }


def run(config: SimConfig, payloads: Sequence[int] | None = None, collect_payloads: bool = False) -> SimResult:
    """Simulate ``config.n`` steps. ``payloads`` replaces synthetic symbol contents."""
    config.validate()
    if payloads is not None and len(payloads) < config.n:
        raise ValueError(f"{len(payloads)} payloads for n={config.n} steps")
    cfg = config
    streams = make_streams(cfg.seed)
    uplink = make_channel(cfg.channel, streams["uplink"])
    fb_rng = streams["feedback"]
    coding_rng = streams["policy-coding"]
    payload_rng = streams["payload"]
    options = PolicyOptions(cfg.iwcmf_exclude_confirmed, cfg.iwcmf_aggressive_fill)

    sender = SenderState(delta=cfg.delta, b=cfg.b, d_nf=cfg.d_nf, l_m=cfg.l_m, l_o=cfg.l_o)
    receiver = ReceiverState(delta=cfg.delta)
    relay = None
    if cfg.relay_policy is not None:
        relay = RelayState(r_t=cfg.r_t, r_m=cfg.r_m, d_nf=cfg.d_nf, delta=cfg.delta, l_o=cfg.l_o)
        relay_up = make_channel(cfg.link("relay_uplink"), streams["relay-uplink"])
        relay_down = make_channel(cfg.link("relay_downlink"), streams["relay-downlink"])
        relay_fb = make_channel(cfg.link("relay_feedback"), streams["relay-feedback"])
        relay_rng = streams["relay-coding"]

    tracing = cfg.record_trace or cfg.trace_output is not None
    trace: list[dict[str, Any]] | None = [] if tracing else None
    if trace is not None:
        trace.append(_rec(-1, "run", "config", feedback=cfg.to_dict()))

    counted_last = cfg.n - 1 - cfg.delta
    mask = (1 << cfg.l_s) - 1
    m = 0
    res = SimResult(n=cfg.n - cfg.delta, m=0, generated=cfg.n)
    collected: dict[int, int] | None = {} if collect_payloads else None
    policy = cfg.policy
    relay_policy = cfg.relay_policy
    p_fb = cfg.p_fb

    for i in range(cfg.n):
        payload = (payloads[i] & mask) if payloads is not None else payload_rng.bits(cfg.l_s)
        sender.add_symbol(SymbolRecord(i, payload, cfg.l_s))
        receiver.advance(i)

        pkt = build_packet(policy, sender, i, coding_rng, options)
        res.source_tx += 1
        for e in pkt.entries:
            d = len(e.constituents)
            if d > 1:
                res.coded_entries += 1
                res.source_xors += d - 1

        got = uplink.transmit()
        new = receive_entries(receiver, pkt.entries) if got else []
        if trace is not None:
            trace.append(_rec(i, "source", "tx", _desc(pkt.entries), "delivered" if got else "erased", new))
        for s in new:
            if s <= counted_last:
                m += 1
            if collected is not None:
                collected[s] = receiver.payloads[s]

        if relay is not None:
            heard = relay_up.transmit()
            if heard:
                res.relay_buffered += relay_overhear_packet(relay, pkt)
            if trace is not None:
                trace.append(_rec(i, "relay", "overhear", outcome="delivered" if heard else "erased"))
            for e in relay_forward_decision(relay_policy, relay, i, relay_rng):
                res.relay_tx += 1
                if e.is_coded:
                    res.relay_xors += len(e.constituents) - 1
                ok = relay_down.transmit()
                rnew = receive_entries(receiver, (e,)) if ok else []
                if trace is not None:
                    trace.append(_rec(i, "relay", "tx", _desc((e,)), "delivered" if ok else "erased", rnew))
                for s in rnew:
                    if s <= counted_last:
                        m += 1
                    if collected is not None:
                        collected[s] = receiver.payloads[s]

        fb_ok = fb_rng.random() < p_fb
        if got:
            fb = make_feedback(policy, receiver, cfg.l_m, cfg.l_o)
            res.feedbacks_sent += 1
            if fb_ok:
                sender.last_feedback = (fb, i)
                res.feedbacks_received += 1
            relay_heard = False
            if relay is not None:
                relay_heard = relay_fb.transmit()
                if relay_heard:
                    relay_overhear_feedback(relay, fb, i)
            if trace is not None:
                trace.append(
                    _rec(
                        i,
                        "destination",
                        "feedback",
                        outcome={"source": fb_ok, "relay": relay_heard},
                        feedback=_fb_desc(fb),
                    )
                )

    res.m = m
    res.trace = trace
    res.delivered_payloads = collected
    if cfg.trace_output is not None and trace is not None:
        write_trace(trace, cfg.trace_output)
    return res


def write_trace(trace: Iterable[dict[str, Any]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in trace:
            fh.write(json.dumps({k: rec.get(k) for k in TRACE_FIELDS}, separators=(",", ":")))
            fh.write("\n")


def read_trace(path: str | Path) -> list[dict[str, Any]]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


@dataclass
class SweepRow:
    config: SimConfig
    seeds: tuple[int, ...]
    dfrs: tuple[float, ...]
    mean: float
    ci_low: float
    ci_high: float
    results: tuple[SimResult, ...] = ()


def mean_ci(values: Sequence[float], z: float = 1.96) -> tuple[float, float, float]:
    """Mean and normal-approximation 95% interval."""
    mu = statistics.fmean(values)
    if len(values) < 2:
        return mu, mu, mu
    half = z * statistics.stdev(values) / math.sqrt(len(values))
    return mu, mu - half, mu + half


def _run_one(cfg: SimConfig) -> SimResult:
    return run(cfg)


def sweep(grid: Sequence[SimConfig], seeds: Sequence[int], workers: int = 1) -> list[SweepRow]:
    """Run every (config, seed) pair; rows come back in grid order."""
    if not grid or not seeds:
        raise ValueError("sweep needs a non-empty grid and seed list")
    jobs = [replace(cfg, seed=s, record_trace=False, trace_output=None) for cfg in grid for s in seeds]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs, chunksize=1))
    else:
        results = [run(j) for j in jobs]
    rows = []
    k = len(seeds)
    for idx, cfg in enumerate(grid):
        chunk = results[idx * k : (idx + 1) * k]
        dfrs = tuple(r.dfr for r in chunk)
        mu, lo, hi = mean_ci(dfrs)
        for r in chunk:
            r.trace = None
        rows.append(SweepRow(cfg, tuple(seeds), dfrs, mu, lo, hi, tuple(chunk)))
    return rows
