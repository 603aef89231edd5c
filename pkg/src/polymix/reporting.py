"""Deterministic report serialization.

Reports must be byte-identical across runs with the same configuration:
JSON keys are sorted, floats are printed with 17 significant digits, and
CSV rows carry the tool version and resolved config as comment lines.
"""

from __future__ import annotations

import json

TOOL_NAME = "polymix"
TOOL_VERSION = "0.1.0"


def fmt_float(x):
    return format(float(x), ".17g")


def _encode(obj, indent, level):
    pad = " " * (indent * level)
    pad_in = " " * (indent * (level + 1))
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return fmt_float(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        parts = []
        for key in sorted(obj):
            parts.append("%s%s: %s" % (pad_in, json.dumps(str(key)),
                                       _encode(obj[key], indent, level + 1)))
        return "{\n" + ",\n".join(parts) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        parts = ["%s%s" % (pad_in, _encode(v, indent, level + 1)) for v in obj]
        return "[\n" + ",\n".join(parts) + "\n" + pad + "]"
    raise TypeError("cannot serialize %r deterministically" % type(obj))


def json_report(result, config=None):
    """Full JSON report text with tool/version/config provenance."""
    doc = {
        "tool": TOOL_NAME,
        "version": TOOL_VERSION,
        "config": config if config is not None else {},
        "result": result,
    }
    return _encode(doc, 2, 0) + "\n"


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return fmt_float(v)
    return str(v)


def csv_report(header, rows, config=None):
    """CSV text with '#' provenance comment lines above the header."""
    lines = ["# tool=%s version=%s" % (TOOL_NAME, TOOL_VERSION)]
    if config:
        compact = json.dumps(
            {k: (fmt_float(v) if isinstance(v, float) else v) for k, v in sorted(config.items())},
            sort_keys=True,
        )
        lines.append("# config=%s" % compact)
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    return "\n".join(lines) + "\n"
