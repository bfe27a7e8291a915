"""Experiment presets (one per published figure) and the CSV experiment runner."""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .channel import ChannelConfig
from .config import config_from_mapping, with_overrides
from .sim import SimConfig, sweep

CSV_TAIL = ("scheme", "mean_dfr", "ci_low", "ci_high", "n_seeds", "seeds")
DEFAULT_SEEDS = tuple(range(1, 11))


@dataclass(frozen=True)
class Scheme:
    label: str
    overrides: dict[str, Any] = field(default_factory=dict)


@dataclass
class ExperimentSpec:
    name: str
    base: SimConfig
    sweep: dict[str, list[Any]]
    schemes: list[Scheme]
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    out: str | None = None

    def __post_init__(self):
        if not self.schemes:
            raise ValueError("experiment needs at least one scheme")
        if not self.seeds:
            raise ValueError("experiment needs at least one seed")
        # surfaces unknown keys before any run starts
        for point in self.points():
            for scheme in self.schemes:
                self.config_for(point, scheme)

    def points(self) -> list[dict[str, Any]]:
        keys = list(self.sweep)
        return [dict(zip(keys, combo)) for combo in itertools.product(*(self.sweep[k] for k in keys))]

    def config_for(self, point: dict[str, Any], scheme: Scheme) -> SimConfig:
        return with_overrides(with_overrides(self.base, scheme.overrides), point)


RR = Scheme("RR", {"policy": "RR"})
WC = Scheme("WC", {"policy": "WC"})
IWC = Scheme("IWC", {"policy": "IWC"})
IWC_MF = Scheme("IWC-MF", {"policy": "IWC-MF"})
UC_R = Scheme("UC-R", {"policy": "IWC", "relay_policy": "UC-R"})


def _iwc_r(r_t: int) -> Scheme:
    return Scheme(f"IWC-R(R_t={r_t})", {"policy": "IWC", "relay_policy": "IWC-R", "r_t": r_t})


_BERN = SimConfig(channel=ChannelConfig(kind="bernoulli", p_s=0.7))
_GE = SimConfig(channel=ChannelConfig(kind="ge", p_gb=0.25, p_bg=0.5))

PRESETS: dict[str, dict[str, Any]] = {
    "fig-dfr-bernoulli": dict(
        base=_BERN,
        sweep={"channel.p_s": [0.5, 0.6, 0.7, 0.8, 0.9], "p_fb": [0.25, 0.75]},
        schemes=[RR, WC, IWC, IWC_MF],
    ),
    "fig-dfr-vs-b": dict(base=_BERN, sweep={"b": list(range(2, 9))}, schemes=[RR, WC, IWC, IWC_MF]),
    "fig-dfr-vs-nfd": dict(
        base=_BERN,
        sweep={"channel.p_s": [0.5, 0.7, 0.9], "d_nf": list(range(1, 9))},
        schemes=[IWC, IWC_MF],
    ),
    "fig-dfr-vs-lm": dict(base=_BERN, sweep={"l_m": list(range(1, 17))}, schemes=[IWC, IWC_MF]),
    "fig-relay-bernoulli": dict(
        base=_BERN,
        sweep={"channel.p_s": [0.5, 0.6, 0.7, 0.8, 0.9]},
        schemes=[RR, IWC, IWC_MF, UC_R, _iwc_r(2)],
    ),
    "fig-relay-ge": dict(
        base=_GE,
        sweep={"channel.p_bg": [0.25, 0.5, 0.75, 1.0]},
        schemes=[RR, IWC, IWC_MF, UC_R, _iwc_r(5)],
    ),
    "fig-dfr-vs-rt": dict(
        base=_GE,
        sweep={"channel.p_bg": [0.5, 0.75], "r_t": list(range(1, 17))},
        schemes=[Scheme("IWC-R", {"policy": "IWC", "relay_policy": "IWC-R"}), UC_R],
    ),
    "fig-dfr-vs-rm": dict(
        base=_GE,
        sweep={"r_m": list(range(5, 17))},
        schemes=[_iwc_r(5), _iwc_r(10), UC_R],
    ),
}


def preset(name: str, seeds=DEFAULT_SEEDS, n: int | None = None, out: str | None = None) -> ExperimentSpec:
    if name not in PRESETS:
        raise KeyError(name)
    p = PRESETS[name]
    base = p["base"] if n is None else with_overrides(p["base"], {"n": n})
    return ExperimentSpec(name, base, dict(p["sweep"]), list(p["schemes"]), tuple(seeds), out)


def load_experiment(path: str | Path) -> ExperimentSpec:
    """Experiment file: ``name``, ``base`` (config mapping), ``sweep``, ``schemes``, ``seeds``, ``out``."""
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    unknown = set(data) - {"name", "base", "sweep", "schemes", "seeds", "out"}
    if unknown:
        raise KeyError(sorted(unknown)[0])
    schemes = []
    for item in data.get("schemes") or [{"label": "IWC", "policy": "IWC"}]:
        item = dict(item)
        label = str(item.pop("label", item.get("policy", "scheme")))
        schemes.append(Scheme(label, item))
    return ExperimentSpec(
        name=str(data.get("name", Path(path).stem)),
        base=config_from_mapping(data.get("base")),
        sweep={str(k): list(v) for k, v in (data.get("sweep") or {}).items()},
        schemes=schemes,
        seeds=tuple(int(s) for s in data.get("seeds", DEFAULT_SEEDS)),
        out=data.get("out"),
    )


def _fmt(x: float) -> str:
    return format(x, ".10g")


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> str:
    """Run the grid and return CSV text (also written to ``spec.out`` when set)."""
    points = spec.points()
    grid = [spec.config_for(pt, sc) for pt in points for sc in spec.schemes]
    rows = sweep(grid, spec.seeds, workers=workers)
    keys = list(spec.sweep)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([*keys, *CSV_TAIL])
    it = iter(rows)
    for pt in points:
        for sc in spec.schemes:
            row = next(it)
            w.writerow(
                [
                    *(pt[k] for k in keys),
                    sc.label,
                    _fmt(row.mean),
                    _fmt(row.ci_low),
                    _fmt(row.ci_high),
                    len(row.seeds),
                    ";".join(str(s) for s in row.seeds),
                ]
            )
    text = buf.getvalue()
    if spec.out:
        Path(spec.out).write_text(text, encoding="utf-8")
    return text
