"""Trace-driven runs: real measurements as symbol payloads."""

from __future__ import annotations

import csv
import logging
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

from .sim import SimConfig, SimResult, run

log = logging.getLogger(__name__)


class IngestError(ValueError):
    def __init__(self, path, line: int, msg: str):
        super().__init__(f"{path}:{line}: {msg}")
        self.line = line


def encode_float32(value: float) -> int:
    return int.from_bytes(struct.pack(">f", value), "big")


def decode_float32(payload: int) -> float:
    return struct.unpack(">f", payload.to_bytes(4, "big"))[0]


def ingest_trace(path: str | Path) -> list[int]:
    """Read ``timestamp,value`` rows into 32-bit float payloads.

    A first line whose value column is not numeric is taken as a header.
    """
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 2:
                raise IngestError(path, lineno, f"expected timestamp,value but got {row!r}")
            raw = row[1].strip()
            try:
                value = float(raw)
            except ValueError:
                if lineno == 1 and not out:
                    continue
                raise IngestError(path, lineno, f"value {raw!r} is not numeric") from None
            try:
                out.append(encode_float32(value))
            except (OverflowError, struct.error):
                raise IngestError(path, lineno, f"value {raw!r} does not fit a 32-bit float") from None
    return out


@dataclass
class RecoveryReport:
    delivered: int = 0
    mismatched: list[int] = field(default_factory=list)
    undelivered: list[int] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatched


def recovery_report(result: SimResult, payloads: list[int]) -> RecoveryReport:
    rep = RecoveryReport()
    got = result.delivered_payloads or {}
    for seq in range(result.generated):
        if seq not in got:
            rep.undelivered.append(seq)
            continue
        rep.delivered += 1
        if got[seq].to_bytes(4, "big") != payloads[seq].to_bytes(4, "big"):
            rep.mismatched.append(seq)
    return rep


def run_ingested(config: SimConfig, path: str | Path) -> tuple[SimResult, RecoveryReport]:
    """Run ``config`` with payloads from a measurement file (forces ``l_s = 32``)."""
    payloads = ingest_trace(path)
    n = config.n
    if len(payloads) < n:
        log.warning("%s has %d rows; truncating run from %d to %d symbols", path, len(payloads), n, len(payloads))
        n = len(payloads)
    cfg = replace(config, n=n, l_s=32)
    result = run(cfg, payloads=payloads, collect_payloads=True)
    return result, recovery_report(result, payloads[:n])
