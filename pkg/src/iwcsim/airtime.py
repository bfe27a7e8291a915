"""LoRa frame airtime, duty cycle and minimum coding rate.

Airtime follows the frame-length expression used for the energy-monitoring use
case (preamble + 4.25, 8 fixed symbols, payload symbols). Its constants differ
from the Semtech datasheet formula (no CRC term, ``2bm`` payload factor); the
expression is implemented as written. Arithmetic is exact (``Fraction``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True)
class LoRaParams:
    sf: int = 7
    bandwidth_hz: int = 125_000
    n_preamble: int = 8
    header: int = 0
    low_dr_opt: int = 0
    coding_rate: int = 1
    bytes_per_symbol: int = 4
    period_ms: int = 60_000

    def __post_init__(self):
        if not 7 <= self.sf <= 12:
            raise ValueError(f"SF must be in 7..12, got {self.sf}")
        if self.bandwidth_hz <= 0 or self.period_ms <= 0:
            raise ValueError("bandwidth and period must be positive")
        if self.header not in (0, 1) or self.low_dr_opt not in (0, 1):
            raise ValueError("header and low-data-rate flags are 0 or 1")
        if not 1 <= self.coding_rate <= 4:
            raise ValueError("coding rate index must be in 1..4")
        if self.n_preamble < 0 or self.bytes_per_symbol < 1:
            raise ValueError("invalid preamble length or symbol size")


def frame_symbols(b: int, p: LoRaParams) -> Fraction:
    """Frame length in LoRa symbols for ``b`` application symbols."""
    if b < 1:
        raise ValueError("b must be at least 1")
    denom = p.sf - 2 * p.low_dr_opt
    if denom <= 0:
        raise ValueError("SF - 2q must be positive")
    numer = 2 * b * p.bytes_per_symbol - p.sf - 5 * p.header + 11
    payload = max(-(-numer // denom) * (p.coding_rate + 4), 0)
    return Fraction(p.n_preamble) + Fraction(17, 4) + 8 + payload


def frame_airtime(b: int, p: LoRaParams = LoRaParams()) -> Fraction:
    """Frame airtime in milliseconds."""
    return frame_symbols(b, p) * Fraction(1000 * 2**p.sf, p.bandwidth_hz)


def duty_cycle(b: int, p: LoRaParams = LoRaParams()) -> Fraction:
    return frame_airtime(b, p) / p.period_ms


def min_coding_rate(b: int) -> Fraction:
    if b < 1:
        raise ValueError("b must be at least 1")
    return Fraction(1, b)


def _round_half_up(x: Fraction, places: int) -> str:
    scaled = x * 10**places
    q = math.floor(scaled + Fraction(1, 2))
    s = str(q).rjust(places + 1, "0")
    return f"{s[:-places]}.{s[-places:]}" if places else s


def table_rows(bs=range(1, 7), p: LoRaParams = LoRaParams()) -> list[dict[str, str]]:
    """Rows formatted as printed: airtime 3 dp, MCR 2 dp, duty cycle in % to 3 dp."""
    rows = []
    for b in bs:
        rows.append(
            {
                "b": str(b),
                "airtime_ms": _round_half_up(frame_airtime(b, p), 3),
                "mcr": _round_half_up(min_coding_rate(b), 2),
                "duty_cycle_pct": _round_half_up(duty_cycle(b, p) * 100, 3),
            }
        )
    return rows
