"""Benchmark output files: result tables as CSV, fields as legacy VTK.

Numbers are written with 12 significant digits through ``format(x,
".12g")``, which is deterministic across runs, so identical inputs give
byte-identical files.
"""

import csv

import numpy as np

from ..errors import InvalidArgumentError


def _cell(value):
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".12g")
    return str(value)


def write_csv(rows, path):
    """Write benchmark rows (dicts) with a union header in first-seen order.

    Rows missing a column leave the cell empty.  An empty row list still
    produces a (header-only, possibly empty) file.
    """
    header = []
    for row in rows:
        for key in row:
            if key not in header:
                header.append(key)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(row[k]) if k in row else ""
                             for k in header])
    return path


def read_csv(path):
    """Read a ``write_csv`` file back into dicts, parsing numbers."""
    rows = []
    with open(path, newline="") as fh:
        for raw in csv.DictReader(fh):
            row = {}
            for key, text in raw.items():
                if text == "" or text is None:
                    continue
                try:
                    num = float(text)
                except ValueError:
                    row[key] = text
                    continue
                row[key] = int(num) if num.is_integer() and "." not in text \
                    and "e" not in text.lower() else num
            rows.append(row)
    return rows


def _vertex_values(space, w, name):
    field = space.field(name)
    nv = space.mesh.vertices.shape[0]
    if field.degree < 1:
        return None
    # Scalar dofs number mesh vertices first for every Lagrange degree.
    off = space.offsets[name]
    idx = off + field.ncomp * np.arange(nv)[:, None] \
        + np.arange(field.ncomp)[None, :]
    return w[idx]


def _cell_values(space, w, name):
    field = space.field(name)
    vals = w[space.offsets[name]:space.offsets[name]
             + field.ncomp * space.scalar_ndofs(name)]
    return vals.reshape(-1, field.ncomp)


def write_vtk(space, w, path, fields=None):
    """Write fields as a legacy ASCII VTK unstructured grid.

    Vertex-based fields become POINT_DATA (vectors for two components,
    scalars otherwise); degree-0 fields become CELL_DATA.  Curved
    geometry is exported through its vertices only.
    """
    mesh = space.mesh
    w = np.asarray(w, float)
    names = list(fields) if fields is not None \
        else [f.name for f in space.fields]
    for name in names:
        if name not in space.offsets:
            raise InvalidArgumentError(f"unknown field {name!r}")
    nv = mesh.vertices.shape[0]
    nc = mesh.cells.shape[0]
    lines = ["# vtk DataFile Version 2.0", "weakslip fields", "ASCII",
             "DATASET UNSTRUCTURED_GRID", f"POINTS {nv} double"]
    for x, y in mesh.vertices:
        lines.append(f"{format(x, '.12g')} {format(y, '.12g')} 0")
    lines.append(f"CELLS {nc} {4 * nc}")
    for a, b, c in mesh.cells:
        lines.append(f"3 {a} {b} {c}")
    lines.append(f"CELL_TYPES {nc}")
    lines.extend(["5"] * nc)

    point_fields = [n for n in names if space.field(n).degree >= 1]
    cell_fields = [n for n in names if space.field(n).degree < 1]
    if point_fields:
        lines.append(f"POINT_DATA {nv}")
        for name in point_fields:
            vals = _vertex_values(space, w, name)
            if vals.shape[1] == 2:
                lines.append(f"VECTORS {name} double")
                for vx, vy in vals:
                    lines.append(f"{format(vx, '.12g')} "
                                 f"{format(vy, '.12g')} 0")
            else:
                lines.append(f"SCALARS {name} double")
                lines.append("LOOKUP_TABLE default")
                lines.extend(format(v, ".12g") for v in vals[:, 0])
    if cell_fields:
        lines.append(f"CELL_DATA {nc}")
        for name in cell_fields:
            vals = _cell_values(space, w, name)
            lines.append(f"SCALARS {name} double")
            lines.append("LOOKUP_TABLE default")
            lines.extend(format(v, ".12g") for v in vals[:, 0])
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path
