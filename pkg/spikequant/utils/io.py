#!/usr/bin/env python3

import json
import os
import tempfile

from .errors import FormatError


def atomic_write(path, data):
    """
    Write `data` (bytes or str) to `path` through a temporary file in the same directory,
    then rename it over the destination. Readers never observe a partially written file.
    """
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp_path = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
    return path


def dumps_json(obj):
    """Serialize with a fixed layout (insertion key order, two-space indent, trailing newline)."""
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def write_json(path, obj):
    return atomic_write(path, dumps_json(obj))


def read_json(path, schema_version=None):
    """
    Read a JSON artifact. If `schema_version` is given, the file must carry a matching
    `schema_version` field.
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            obj = json.load(f)
    except json.JSONDecodeError as e:
        raise FormatError(f"{path} is not valid JSON: {e}")
    if schema_version is not None:
        found = obj.get("schema_version") if isinstance(obj, dict) else None
        if found != schema_version:
            raise FormatError(f"{path} has schema_version {found!r}, expected {schema_version!r}")
    return obj
