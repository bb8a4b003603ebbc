"""Deterministic artifact writers: 17-significant-digit CSV, sorted JSON,
atomic replace."""

from __future__ import annotations

import json
import os
import tempfile


def fmt(x):
    return f"{float(x):.17g}"


def write_atomic(path, data):
    if isinstance(data, str):
        data = data.encode("utf-8")
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, columns):
    rows = zip(*columns)
    lines = [",".join(header)]
    lines.extend(",".join(fmt(x) for x in row) for row in rows)
    write_atomic(path, "\n".join(lines) + "\n")


def write_json(path, obj):
    write_atomic(path, json.dumps(obj, sort_keys=True, indent=1) + "\n")
