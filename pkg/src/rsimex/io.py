"""Field output: CSV (canonical, round-trippable) and legacy VTK."""
import csv
import os

import numpy as np

from .core_state import Field, conserved_from_primitive_values, mach_numbers, to_primitives
from .eos import eval_thermo

CSV_COLUMNS = ("x", "y", "alpha1", "rho1", "rho2", "v1x", "v1y", "v2x", "v2y", "wx", "wy", "T",
               "p_mix", "M_mix")
REPORT_FORMAT = "{:.17g}"


def _fmt(v):
    return REPORT_FORMAT.format(float(v))


def field_columns(f, eos):
    """Per-cell output columns (flattened row-major over interior cells)."""
    q = f.interior
    X, Y = f.grid.centers()
    pr = to_primitives(q, eos, check=False)
    th = eval_thermo(pr.rho1, pr.rho2, pr.T, eos, q[0])
    _, _, M = mach_numbers(pr, eos)
    w = pr.w
    cols = {
        "x": X, "y": Y, "alpha1": q[0], "rho1": pr.rho1, "rho2": pr.rho2,
        "v1x": pr.v1[0], "v1y": pr.v1[1], "v2x": pr.v2[0], "v2y": pr.v2[1],
        "wx": w[0], "wy": w[1], "T": pr.T, "p_mix": th.p_mix, "M_mix": M,
    }
    return {k: np.asarray(cols[k], dtype=float).ravel() for k in CSV_COLUMNS}


def write_field_csv(f, eos, path):
    """One row per interior cell with 17 significant digits."""
    cols = field_columns(f, eos)
    n = cols["x"].size
    _ensure_dir(path)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(CSV_COLUMNS)
        for k in range(n):
            wr.writerow([_fmt(cols[c][k]) for c in CSV_COLUMNS])
    return path


def read_field_csv(path):
    """Columns of a field CSV as float arrays keyed by header name."""
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        rows = [[float(v) for v in r] for r in rd if r]
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return {h: data[:, k].copy() for k, h in enumerate(header)}


def field_from_csv(path, grid, eos):
    """Rebuild a :class:`Field` on ``grid`` from a field CSV (ghosts left 0)."""
    c = read_field_csv(path)
    shape = (grid.ny, grid.nx)
    if c["x"].size != grid.nx * grid.ny:
        raise ValueError(f"{path}: {c['x'].size} rows do not match grid {grid.nx}x{grid.ny}")

    def g(k):
        return c[k].reshape(shape)

    q = conserved_from_primitive_values(
        g("alpha1"), g("rho1"), g("rho2"), np.stack([g("v1x"), g("v1y")]),
        np.stack([g("v2x"), g("v2y")]), g("T"), eos)
    return Field.from_interior(grid, q)


def diagonal_slice(cols, grid, tol=None):
    """Rows with x == y (cell centres on the main diagonal of a square grid).

    Returns the arc-length coordinate ``s`` from the lower-left corner and the
    selected columns.
    """
    tol = 1e-9 * max(grid.dx, grid.dy) if tol is None else tol
    mask = np.abs(cols["x"] - cols["y"]) <= tol
    x0, y0 = grid.extent[0], grid.extent[2]
    s = np.hypot(cols["x"][mask] - x0, cols["y"][mask] - y0)
    order = np.argsort(s)
    return s[order], {k: v[mask][order] for k, v in cols.items()}


def write_vtk(f, eos, path, title="two-fluid field"):
    """Legacy ASCII STRUCTURED_POINTS file with cell-centred point data."""
    g = f.grid
    cols = field_columns(f, eos)
    nx, ny = g.nx, g.ny
    X, Y = g.centers()
    _ensure_dir(path)
    lines = [
        "# vtk DataFile Version 3.0",
        title[:255],
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {nx} {ny} 1",
        f"ORIGIN {_fmt(X.flat[0])} {_fmt(Y.flat[0])} 0",
        f"SPACING {_fmt(g.dx)} {_fmt(g.dy)} 1",
        f"POINT_DATA {nx * ny}",
    ]
    for name in ("alpha1", "rho1", "rho2", "T", "p_mix", "M_mix"):
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [_fmt(v) for v in cols[name]]
    for name, (a, b) in (("v1", ("v1x", "v1y")), ("v2", ("v2x", "v2y")), ("w", ("wx", "wy"))):
        lines.append(f"VECTORS {name} double")
        lines += [f"{_fmt(u)} {_fmt(v)} 0" for u, v in zip(cols[a], cols[b])]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def write_reports_csv(reports, path):
    """Diagnostics time series, one row per report."""
    from .diagnostics import FieldReport

    _ensure_dir(path)
    err_keys = sorted({k for r in reports for k in r.errors})
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(list(FieldReport.HEADER) + [f"l1_{k}" for k in err_keys])
        for r in reports:
            row = [_fmt(v) if isinstance(v, float) else v for v in r.row()]
            wr.writerow(row + [_fmt(r.errors[k]) if k in r.errors else "" for k in err_keys])
    return path


def _ensure_dir(path):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
