"""Deterministic CSV, JSON, and PGM writers for the command line.

Floats are formatted with repr, the shortest string that round-trips,
so identical inputs give byte-identical files.  All writes go through a
temp file in the target directory followed by an atomic replace.
"""

import json
import os
import tempfile

import numpy as np


def cell_text(value):
    """One CSV cell.  No quoting; the schemas here never need commas."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def csv_text(rows, fields, comments=()):
    """CSV as a string: comment lines, header, then one line per row.

    Rows are dicts keyed by the field names.  An empty row list gives a
    header-only table.
    """
    lines = ["# " + c for c in comments]
    lines.append(",".join(fields))
    for row in rows:
        lines.append(",".join(cell_text(row[f]) for f in fields))
    return "\n".join(lines) + "\n"


def jsonable(value):
    """Recursively convert numpy scalars, arrays and sets for json."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, (set, frozenset)):
        return sorted(jsonable(v) for v in value)
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def json_text(value):
    return json.dumps(jsonable(value), indent=1) + "\n"


def pgm_bytes(frame, comments=()):
    """Binary PGM (P5, maxval 255) of a 2-D array.

    Values are treated as levels in [0, 1] and scaled to round(255 v);
    integer 0/1 grids therefore come out black and white.
    """
    arr = np.asarray(frame, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("frame must be 2-D")
    data = np.rint(255.0 * arr).clip(0, 255).astype(np.uint8)
    head = ["P5"]
    head.extend("# " + c for c in comments)
    head.append("%d %d" % (data.shape[1], data.shape[0]))
    head.append("255")
    return ("\n".join(head) + "\n").encode("ascii") + data.tobytes()


def _atomic_write(path, data):
    target = os.path.abspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(target), prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, target)
    except BaseException:
        os.unlink(tmp)
        raise


def write_csv(path, rows, fields, comments=()):
    _atomic_write(path, csv_text(rows, fields, comments).encode("ascii"))


def write_json(path, value):
    _atomic_write(path, json_text(value).encode("ascii"))


def write_pgm(path, frame, comments=()):
    _atomic_write(path, pgm_bytes(frame, comments))
