"""Independent replay of a run trace.

The replay keeps its own delivery log (seq -> step delivered), re-decodes every
received entry with a naive rule and recomputes every feedback message by
enumerating the window. Any mismatch with what the engine recorded is reported
as a divergence. Structural packet invariants are checked on the way.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable


class MirrorDivergence(AssertionError):
    pass


@dataclass(frozen=True)
class Divergence:
    step: int
    kind: str
    detail: str

    def __str__(self) -> str:
        return f"step {self.step}: {self.kind}: {self.detail}"


@dataclass
class MirrorReport:
    steps: int = 0
    events: int = 0
    divergences: list[Divergence] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.divergences

    def raise_if_diverged(self) -> None:
        if self.divergences:
            shown = "\n".join(str(d) for d in self.divergences[:20])
            raise MirrorDivergence(f"{len(self.divergences)} divergence(s):\n{shown}")


def mirror_oracle_check(trace: Iterable[dict[str, Any]]) -> MirrorReport:
    records = list(trace)
    if not records or records[0].get("event") != "config":
        raise ValueError("trace must start with the run config record")
    cfg = records[0]["feedback"]
    delta, b, l_m, l_o = cfg["delta"], cfg["b"], cfg["l_m"], cfg["l_o"]
    bitmap_form = cfg["policy"] == "IWC-MF"

    report = MirrorReport()
    got_at: dict[int, int] = {}
    seen_delivered: set[int] = set()
    last_step = -1

    def bad(step, kind, detail):
        report.divergences.append(Divergence(step, kind, detail))

    def known(seq, step):
        return seq in got_at and seq >= step - delta

    def decode(entries, step):
        new = []
        for cons in entries:
            unknown = [c for c in cons if not known(c, step)]
            if len(unknown) == 1 and unknown[0] >= step - delta:
                got_at[unknown[0]] = step
                new.append(unknown[0])
        return new

    for rec in records[1:]:
        step, actor, event = rec["step"], rec["actor"], rec["event"]
        report.events += 1
        if step != last_step:
            report.steps += 1
            last_step = step

        if event == "tx":
            entries = rec["entries"]
            for cons in entries:
                if len(set(cons)) != len(cons):
                    bad(step, "duplicate-constituent", f"{cons}")
                for c in cons:
                    if c < step - delta:
                        bad(step, "expired-symbol-sent", f"{actor} sent seq {c} in {cons}")
                    if c > step:
                        bad(step, "future-symbol-sent", f"{actor} sent seq {c}")
            if actor == "source":
                if len(entries) > b:
                    bad(step, "packet-too-large", f"{len(entries)} entries > b={b}")
                if not entries or entries[0] != [step]:
                    bad(step, "fresh-symbol-missing", f"first entry {entries[:1]}")
            expected = decode(entries, step) if rec["outcome"] == "delivered" else []
            recorded = list(rec["delivered"] or [])
            if expected != recorded:
                bad(step, "delivery", f"{actor} entries {entries}: engine {recorded}, mirror {expected}")
            for s in recorded:
                if s in seen_delivered:
                    bad(step, "double-delivery", f"seq {s} delivered twice")
                seen_delivered.add(s)
            # keep the mirror on its own log even after a disagreement
        elif event == "feedback":
            fb = rec["feedback"]
            window = range(max(0, step - delta), step + 1)
            missing = [s for s in window if not known(s, step)]
            u = missing[0] if missing else step + 1
            if fb["u"] != u % (1 << l_o):
                bad(step, "feedback-u", f"engine {fb['u']}, mirror {u}")
            if bitmap_form:
                bits = [1 if (j > step or known(j, step)) else 0 for j in range(u + 1, u + 1 + l_m)]
                if fb.get("bitmap") != bits:
                    bad(step, "feedback-bitmap", f"engine {fb.get('bitmap')}, mirror {bits}")
            else:
                beta = min(len(missing), (1 << l_m) - 1)
                if fb.get("beta") != beta:
                    bad(step, "feedback-beta", f"engine {fb.get('beta')}, mirror {beta}")
    return report
