"""Deterministic serialization of response models to CSV and JSON.

Both formats carry the full validated configuration, so any emitted file
can be re-run exactly.  Formatting is fixed (sorted keys, 17 significant
digits) so that repeated runs of the same configuration are byte-identical.
"""

from __future__ import annotations

import json


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def to_json(resp, indent: int = 2) -> str:
    return json.dumps(resp.model_dump(), sort_keys=True, indent=indent) + "\n"


def to_csv(resp) -> str:
    """Comment lines (config, derived scalars, failures), header, data rows.

    Responses without a row table (single-result commands) serialize their
    scalar payload as a one-row table.
    """
    data = resp.model_dump()
    meta = data.pop("meta")
    failures = data.pop("failures", [])
    rows = data.pop("rows", None)
    if rows is None:
        rows, data = [data], {}
    lines = ["# " + json.dumps(meta, sort_keys=True)]
    if data:
        lines.append("# " + json.dumps(data, sort_keys=True))
    for item in failures:
        lines.append("# failure: " + item)
    if rows:
        header = list(rows[0].keys())
        lines.append(",".join(header))
        for row in rows:
            lines.append(",".join(_cell(row[key]) for key in header))
    return "\n".join(lines) + "\n"
