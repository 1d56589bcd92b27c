"""CSV / JSON writers with embedded provenance.

Every CSV starts with one ``#`` comment line carrying the library version,
the config hash and a SHA-256 of the data rows that follow (header included).
Numbers are written with 17 significant digits.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path

from . import __version__


def fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def content_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def write_csv(path, header, rows, config_hash: str = "") -> str:
    """Write a provenance-stamped CSV and return the content hash."""
    body = csv_text(header, rows)
    digest = content_hash(body)
    stamp = f"# moire-spectra {__version__} config={config_hash} content={digest}\r\n"
    Path(path).write_text(stamp + body, encoding="utf-8", newline="")
    return digest


def read_csv(path):
    """Rows of a stamped CSV as dicts (the stamp line is skipped)."""
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(lines))


def write_json(path, payload, config_hash: str = "") -> None:
    body = json.dumps(payload, indent=2, sort_keys=True, default=_jsonable)
    doc = {"version": __version__, "config_hash": config_hash,
           "content_hash": content_hash(body), "content": json.loads(body)}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _jsonable(obj):
    if hasattr(obj, "tolist"):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def spectra_rows(model_id, L, param, eigs):
    return [(model_id, float(L), float(param), j, float(e)) for j, e in enumerate(eigs)]


SPECTRA_HEADER = ("model_id", "L", "b_or_theta", "index", "eigenvalue")
