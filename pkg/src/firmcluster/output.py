"""Writing result tables, manifests and run records to disk.

CSV files are UTF-8 with ``\\n`` line endings and numbers printed with up to
12 significant digits, so identical results always give identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np
import pandas as pd

from .designs import format_number
from .indicators import INDICATORS

SCHEMA_VERSION = 1
RUN_COLUMNS = ("t", *INDICATORS)


def table_to_csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(columns))
    for row in rows:
        writer.writerow([format_number(v) for v in row])
    return buf.getvalue()


def frame_to_csv(frame: pd.DataFrame) -> str:
    return table_to_csv(frame.columns, frame.itertuples(index=False, name=None))


def _write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_json(path, doc) -> None:
    _write_text(Path(path), json.dumps(doc, indent=2, allow_nan=False, default=_json_default) + "\n")


def _json_default(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"not JSON serialisable: {type(value).__name__}")


def write_results(tables: dict, out_dir, manifest: dict | None = None) -> list[Path]:
    """Write ``{name: DataFrame | csv text}`` as ``name.csv`` files plus an optional manifest.

    Returns the written paths in name order.
    """
    out = Path(out_dir)
    written = []
    for name in sorted(tables):
        table = tables[name]
        text = table if isinstance(table, str) else frame_to_csv(table)
        path = out / f"{name}.csv"
        _write_text(path, text)
        written.append(path)
    if manifest is not None:
        doc = dict(manifest)
        doc["files"] = sorted(p.name for p in written)
        path = out / "manifest.json"
        write_json(path, doc)
        written.append(path)
    return written


def build_manifest(spec, seeds: dict | None = None, extra: dict | None = None) -> dict:
    from . import __version__

    doc = {
        "schema_version": SCHEMA_VERSION,
        "package": "firmcluster",
        "version": __version__,
        "kind": spec.kind,
        "config": spec.to_dict(),
        "seeds": {"base": spec.seed, **(seeds or {})},
    }
    if extra:
        doc.update(extra)
    return doc


def run_table(result) -> str:
    """Per-tick indicator CSV of a :class:`~firmcluster.model.SimulationResult`."""
    return table_to_csv(RUN_COLUMNS, result.rows())


def read_table(path) -> pd.DataFrame:
    try:
        return pd.read_csv(path, keep_default_na=True)
    except FileNotFoundError:
        raise FileNotFoundError(f"no such table: {path}") from None
    except pd.errors.EmptyDataError:
        return pd.DataFrame()
