"""Flat configuration with layered precedence.

Config files are plain text, one `section.key = value` per line, with # for
comments. Values are resolved as: command-line overrides, then environment
variables, then the config file, then built-in defaults. Unknown keys are
rejected outright; a typo should fail loudly, not silently fall back to a
default.
"""

import os
from pathlib import Path

from .errors import ParseError, SchemaError
from .model import TrustConfig

DEFAULTS: dict = {
    "provider.kind": "mock",
    "provider.base_url": "http://localhost:11434",
    "provider.api_key": "",
    "provider.chat_model": "gemma2",
    "provider.embed_model": "mxbai-embed-large",
    "provider.timeout": 60.0,
    "provider.max_retries": 2,
    "provider.temperature": 0.0,
    "provider.max_in_flight": 4,
    "provider.seed": 0,
    "provider.dim": 64,
    "trust.alpha": 0.85,
    "trust.tolerance": 1e-6,
    "trust.max_iterations": 1000,
    "trust.initial_unknown": 0.5,
    "trust.initial_trusted": 1.0,
    "rerank.lambda": 0.5,
    "pairs.top_k": 4036,
    "eval.retrieve_limit": 10,
    "eval.context_size": 3,
}

ENV_KEYS = {
    "CLAIMRANK_API_BASE": "provider.base_url",
    "CLAIMRANK_API_KEY": "provider.api_key",
}


def _coerce(key: str, value, lineno: int | None = None):
    expected = type(DEFAULTS[key])
    if isinstance(value, expected) and not (expected is float and isinstance(value, bool)):
        return value
    text = str(value).strip()
    try:
        if expected is int:
            return int(text)
        if expected is float:
            return float(text)
    except ValueError as exc:
        raise ParseError(f"{key} expects {expected.__name__}, got {value!r}", line=lineno) from exc
    return text


def load_config_file(path: str | Path) -> dict:
    settings: dict = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError("expected 'section.key = value'", line=lineno)
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in DEFAULTS:
                raise SchemaError(f"unknown config key {key!r} (line {lineno})")
            settings[key] = _coerce(key, value.strip(), lineno)
    return settings


def resolve(
    path: str | Path | None = None,
    env: dict | None = None,
    overrides: dict | None = None,
) -> dict:
    """Merge all four layers into one flat settings dict."""
    settings = dict(DEFAULTS)
    if path is not None:
        settings.update(load_config_file(path))
    env = os.environ if env is None else env
    for env_name, key in ENV_KEYS.items():
        if env_name in env:
            settings[key] = _coerce(key, env[env_name])
    for key, value in (overrides or {}).items():
        if key not in DEFAULTS:
            raise SchemaError(f"unknown config key {key!r}")
        settings[key] = _coerce(key, value)
    return settings


def section(settings: dict, prefix: str) -> dict:
    """Project one section out, with the prefix stripped from the keys."""
    start = prefix + "."
    return {key[len(start):]: value for key, value in settings.items() if key.startswith(start)}


def trust_config_from(settings: dict) -> TrustConfig:
    return TrustConfig(
        alpha=settings["trust.alpha"],
        tolerance=settings["trust.tolerance"],
        max_iterations=settings["trust.max_iterations"],
        initial_unknown=settings["trust.initial_unknown"],
        initial_trusted=settings["trust.initial_trusted"],
    )
