"""YAML config files for single runs; every default is written out explicitly."""

from __future__ import annotations

from dataclasses import fields, replace
from pathlib import Path
from typing import Any

import yaml

from .channel import ChannelConfig
from .sim import SimConfig

CHANNEL_KEYS = ("channel", "relay_uplink", "relay_downlink", "relay_feedback")


def with_overrides(cfg: SimConfig, overrides: dict[str, Any]) -> SimConfig:
    """Apply ``{field: value}`` updates; ``channel.p_s`` style keys reach into a link."""
    top: dict[str, Any] = {}
    nested: dict[str, dict[str, Any]] = {}
    names = {f.name for f in fields(SimConfig)}
    link_names = {f.name for f in fields(ChannelConfig)}
    for key, value in overrides.items():
        if "." in key:
            link, sub = key.split(".", 1)
            if link not in CHANNEL_KEYS or sub not in link_names:
                raise KeyError(key)
            nested.setdefault(link, {})[sub] = value
        elif key in names:
            if key in CHANNEL_KEYS and isinstance(value, dict):
                bad = set(value) - link_names
                if bad:
                    raise KeyError(f"{key}.{sorted(bad)[0]}")
                value = ChannelConfig(**value)
            top[key] = value
        else:
            raise KeyError(key)
    out = replace(cfg, **top) if top else cfg
    for link, sub in nested.items():
        current = getattr(out, link) or out.channel
        out = replace(out, **{link: replace(current, **sub)})
    return out


def config_from_mapping(data: dict[str, Any] | None) -> SimConfig:
    return with_overrides(SimConfig(), dict(data or {}))


def load_config(path: str | Path) -> SimConfig:
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if data is not None and not isinstance(data, dict):
        raise ValueError(f"{path}: expected a mapping at top level")
    return config_from_mapping(data)


def dump_config(cfg: SimConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)
