"""Small numeric helpers shared across modules."""

from __future__ import annotations

import math


def ceil_pow(n: float, exponent: float) -> int:
    """``ceil(n ** exponent)`` that ignores floating noise at exact integers.

    ``10 ** (5 * 0.2)`` evaluates to ``10.000000000000002``; a bare ``ceil``
    would turn that into 11.
    """
    value = float(n) ** exponent
    nearest = round(value)
    if abs(value - nearest) <= 1e-9 * max(1.0, value):
        return int(nearest)
    return math.ceil(value)


def fmt(x: float | int) -> str:
    """Render a number with 10 significant digits (CSV/JSON text output)."""
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return f"{x:.10g}"


def parse_params(text: str, what: str) -> tuple[str, dict[str, str]]:
    """Split ``kind:key=value,key=value`` into its kind and parameter dict."""
    text = text.strip()
    if not text:
        raise ValueError(f"empty {what} string")
    kind, _, rest = text.partition(":")
    params: dict[str, str] = {}
    if rest:
        for item in rest.split(","):
            key, sep, value = item.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or not key or not value:
                raise ValueError(f"malformed {what} parameter {item!r} in {text!r}")
            if key in params:
                raise ValueError(f"duplicate {what} parameter {key!r}")
            params[key] = value
    return kind.strip().lower(), params
