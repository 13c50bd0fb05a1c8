"""CSV serialization of run records.

The first line carries the schema version and run name, the second the
column header. Floats are written with 17 significant digits so a record
survives a write/read round trip bit for bit. The allocator's 18-vector
terms u_y and u_j are not written; records read back carry NaN there.
"""

import csv
from pathlib import Path

import numpy as np

from .actuation import STATE_NAMES
from .dynamics import PLATFORM_STATE_NAMES
from .simulation import RunRecord

SCHEMA = "dualtilt-record"
SCHEMA_VERSION = 1

WRENCH_NAMES = ("fx", "fy", "fz", "tx", "ty", "tz")

# (record attribute, column names)
_BLOCKS = (
    ("t", ("t",)),
    ("platform", PLATFORM_STATE_NAMES),
    ("actuators", STATE_NAMES),
    ("u_star", tuple(f"{w}_cmd" for w in WRENCH_NAMES)),
    ("u_star_dot", tuple(f"{w}_cmd_rate" for w in WRENCH_NAMES)),
    ("u_v", WRENCH_NAMES),
    ("u_vc", tuple(f"{w}_ref" for w in WRENCH_NAMES)),
    ("objective", ("J",)),
    ("sigma_min", ("sigma_min",)),
    ("stiffness", ("stiffness",)),
    ("substeps", ("substeps",)),
    ("damped", ("damped",)),
    ("saturated", tuple(f"sat_{n}" for n in STATE_NAMES)),
)

COLUMNS = tuple(name for _, names in _BLOCKS for name in names)


def record_columns(record):
    """Ordered mapping column name -> 1-D array for ``record``."""
    out = {}
    for attr, names in _BLOCKS:
        data = np.asarray(getattr(record, attr))
        if data.ndim == 1:
            out[names[0]] = data
        else:
            for j, name in enumerate(names):
                out[name] = data[:, j]
    return out


def _format(value):
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_record(record, path, stride=1):
    """Write ``record`` as CSV, keeping every ``stride``-th row (and the last)."""
    path = Path(path)
    cols = record_columns(record)
    n = len(record)
    rows = list(range(0, n, stride))
    if rows and rows[-1] != n - 1:
        rows.append(n - 1)
    with path.open("w", newline="") as fh:
        fh.write(f"# {SCHEMA} v{SCHEMA_VERSION} name={record.name}\n")
        writer = csv.writer(fh)
        writer.writerow(COLUMNS)
        arrays = [cols[c] for c in COLUMNS]
        for k in rows:
            writer.writerow([_format(a[k]) for a in arrays])
    return path


def read_record(path):
    """Read a record CSV written by ``write_record``."""
    path = Path(path)
    with path.open(newline="") as fh:
        first = fh.readline().strip()
        parts = first.lstrip("# ").split()
        if len(parts) < 2 or parts[0] != SCHEMA:
            raise ValueError(f"{path}: not a {SCHEMA} file")
        version = int(parts[1].lstrip("v"))
        if version != SCHEMA_VERSION:
            raise ValueError(f"{path}: unsupported schema version {version}")
        name = "run"
        for token in parts[2:]:
            if token.startswith("name="):
                name = token[5:]
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != COLUMNS:
            raise ValueError(f"{path}: column header does not match schema v{version}")
        data = np.array([[float(v) for v in row] for row in reader], dtype=float)
    if data.size == 0:
        data = data.reshape(0, len(COLUMNS))

    record = RunRecord.allocate(len(data), name=name)
    col = 0
    for attr, names in _BLOCKS:
        block = data[:, col:col + len(names)]
        col += len(names)
        target = getattr(record, attr)
        target[...] = block.reshape(target.shape).astype(target.dtype)
    record.u_y[:] = np.nan
    record.u_j[:] = np.nan
    return record
