"""Duration parsing and time-unit constants.

All pipeline timestamps and durations are integer nanoseconds.
"""

from __future__ import annotations

NS_PER_US = 1_000
NS_PER_MS = 1_000_000
NS_PER_S = 1_000_000_000


def parse_duration(value) -> int:
    """Parse a duration into integer nanoseconds.

    Accepts ``<int>s``, ``<int>ms`` (CLI/config syntax) or a bare number,
    which is read as seconds.
    """
    if isinstance(value, bool):
        raise ValueError(f"not a duration: {value!r}")
    if isinstance(value, (int, float)):
        ns = int(round(value * NS_PER_S))
    elif isinstance(value, str):
        text = value.strip()
        if text.endswith("ms"):
            ns = int(text[:-2]) * NS_PER_MS
        elif text.endswith("s"):
            ns = int(text[:-1]) * NS_PER_S
        else:
            ns = int(text) * NS_PER_S
    else:
        raise ValueError(f"not a duration: {value!r}")
    if ns <= 0:
        raise ValueError(f"duration must be positive: {value!r}")
    return ns


def format_duration(ns: int) -> str:
    """Render nanoseconds using the CLI syntax (whole seconds or milliseconds)."""
    if ns % NS_PER_S == 0:
        return f"{ns // NS_PER_S}s"
    if ns % NS_PER_MS == 0:
        return f"{ns // NS_PER_MS}ms"
    return str(ns)
