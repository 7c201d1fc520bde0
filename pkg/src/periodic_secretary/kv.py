"""Minimal key = value config file reading and writing."""

from __future__ import annotations

from pathlib import Path

__all__ = ["read_kv_file", "write_kv_file", "format_kv"]


def read_kv_file(path: "str | Path") -> dict[str, str]:
    """Parse 'key = value' lines; blank lines and # comments are ignored."""
    entries: dict[str, str] = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}: malformed line {raw!r}, expected 'key = value'")
        key, _, value = line.partition("=")
        entries[key.strip()] = value.strip()
    return entries


def format_kv(entries: dict[str, str]) -> str:
    return "".join(f"{k} = {v}\n" for k, v in entries.items())


def write_kv_file(entries: dict[str, str], path: "str | Path") -> None:
    Path(path).write_text(format_kv(entries), encoding="utf-8")
