"""Deterministic report serialization.

Reports must be byte-identical across runs with the same input and
seed, so JSON is emitted by hand: keys sorted, floats printed with 17
significant digits (enough to round-trip IEEE doubles), no whitespace
variation, trailing newline.  JSON has no infinities, so non-finite
floats become the strings "inf", "-inf" and "nan"; they only appear in
sign-evidence bounds, never in trajectories.
"""

from __future__ import annotations

import json
import math
import numbers
import os
import sys
import tempfile

__all__ = ["canonical_json", "float_text", "write_text"]


def float_text(v: float) -> str:
    """Fixed 17-significant-digit rendering of a finite float."""
    return format(float(v), ".17g")


def _float_json(v: float) -> str:
    if math.isnan(v):
        return '"nan"'
    if math.isinf(v):
        return '"inf"' if v > 0 else '"-inf"'
    return float_text(v)


def _emit(obj, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, numbers.Integral):
        out.append(str(int(obj)))
    elif isinstance(obj, numbers.Real):
        out.append(_float_json(float(obj)))
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise TypeError(f"JSON object keys must be strings: {key!r}")
            if i:
                out.append(",")
            out.append(json.dumps(key))
            out.append(":")
            _emit(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _emit(item, out)
        out.append("]")
    elif hasattr(obj, "tolist"):
        _emit(obj.tolist(), out)
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def canonical_json(obj) -> str:
    out: list[str] = []
    _emit(obj, out)
    out.append("\n")
    return "".join(out)


def write_text(path: str | None, text: str) -> None:
    """Write to path atomically, or to stdout when path is None."""
    if path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".signflow-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
