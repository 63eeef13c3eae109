"""Config files, CSV tables, and run manifests.

Configs are JSON objects validated strictly: a typo'd or unknown key
raises ConfigInvalid instead of being ignored, since silently dropped
physics parameters are the main operational hazard.  CSV output follows
RFC 4180 (CRLF line endings, '.' decimal point, no locale) with floats
rendered through a fixed %.12g format so reruns are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import numbers
import os

from .errors import ConfigInvalid

__all__ = [
    "load_config",
    "require_keys",
    "as_number",
    "as_int",
    "write_csv",
    "file_checksum",
    "write_manifest",
]


def load_config(path: str) -> dict:
    """Parse a JSON config file into a dict, with diagnostics."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigInvalid(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(
            f"{path}: invalid JSON at line {exc.lineno}, "
            f"column {exc.colno}: {exc.msg}")
    if not isinstance(data, dict):
        raise ConfigInvalid(f"{path}: top level must be a JSON object")
    return data


def require_keys(block, required, optional=(), context="config"):
    """Strict schema check: every required key present, nothing extra."""
    if not isinstance(block, dict):
        raise ConfigInvalid(f"{context}: expected an object")
    unknown = sorted(set(block) - set(required) - set(optional))
    if unknown:
        raise ConfigInvalid(f"{context}: unknown keys {unknown}")
    missing = [k for k in required if k not in block]
    if missing:
        raise ConfigInvalid(f"{context}: missing keys {missing}")


def as_number(block, key, context="config"):
    val = block[key]
    if isinstance(val, bool) or not isinstance(val, numbers.Real):
        raise ConfigInvalid(f"{context}: key '{key}' must be a number")
    return float(val)


def as_int(block, key, context="config"):
    val = block[key]
    if isinstance(val, bool) or not isinstance(val, numbers.Integral):
        raise ConfigInvalid(f"{context}: key '{key}' must be an integer")
    return int(val)


def _render(value) -> str:
    if isinstance(value, str):
        if any(c in value for c in ',"\r\n'):
            return '"' + value.replace('"', '""') + '"'
        return value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, numbers.Integral):
        return str(int(value))
    return "%.12g" % float(value)


def write_csv(path: str, header, rows) -> None:
    """RFC 4180 table; floats go through %.12g for reproducibility."""
    lines = [",".join(_render(c) for c in header)]
    for row in rows:
        lines.append(",".join(_render(c) for c in row))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\r\n".join(lines) + "\r\n")


def file_checksum(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path: str, payload: dict) -> None:
    """JSON manifest written atomically (tmp file + rename)."""
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    os.replace(tmp, path)
