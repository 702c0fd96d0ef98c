"""Atomic, schema-ordered CSV and JSON writers."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from importlib import resources

import yaml

from . import __version__


def load_schema() -> dict:
    text = resources.files("dilutebose").joinpath("data/columns.yaml").read_text()
    return {k: [c["name"] for c in cols] for k, cols in yaml.safe_load(text).items()}


def atomic_write(path, text: str):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_csv(table: str, rows, meta: dict) -> str:
    cols = load_schema()[table]
    buf = io.StringIO()
    for k, v in meta.items():
        buf.write(f"# {k}: {v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        missing = [c for c in cols if c not in row]
        if missing:
            raise KeyError(f"{table}: row lacks columns {missing}")
        w.writerow([_fmt(row[c]) for c in cols])
    return buf.getvalue()


def render_doc(table: str, rows, meta: dict) -> str:
    cols = load_schema()[table]
    doc = {"meta": meta, "table": table,
           "rows": [{c: row[c] for c in cols} for row in rows]}
    return json.dumps(doc, indent=2, sort_keys=False, default=float) + "\n"


def write_table(out_dir, table: str, rows, cfg_hash: str, fmt: str = "csv") -> str:
    """Write ``rows`` as <out_dir>/<table>.csv or .json; returns the path."""
    meta = {"config_sha256": cfg_hash, "version": __version__}
    if fmt == "csv":
        path = os.path.join(out_dir, f"{table}.csv")
        atomic_write(path, render_csv(table, rows, meta))
    else:
        path = os.path.join(out_dir, f"{table}.json")
        atomic_write(path, render_doc(table, rows, meta))
    return path
