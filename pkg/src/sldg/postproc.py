"""Error norms, convergence tables, line sampling and file export."""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .assembly import DgParams, energy_norm, geometry
from .constitutive import ModelParams, strain_from_stress, stress_from_gradient
from .dgspace import Solution

ExactFn = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]

ERROR_EXTRA_DEGREE = 4


@dataclass
class ConvergenceRecord:
    label: str
    h: float
    degree: int
    ndof: int
    l2_error: float
    eoc_l2: float | None
    energy_error: float
    eoc_energy: float | None
    rel_l2_percent: float
    rel_energy_percent: float
    picard_iterations: int
    converged: bool


RECORD_COLUMNS = tuple(f.name for f in fields(ConvergenceRecord))
SAMPLE_COLUMNS = ("x", "y", "u", "T13", "T23", "eps13", "eps23")


def error_l2(sol: Solution, exact: Callable[[np.ndarray], np.ndarray],
             dg: DgParams | None = None) -> float:
    """||u_h - u||_L2 with a volume rule 4 degrees above the assembly rule."""
    geo = geometry(sol.space, dg or DgParams(), ERROR_EXTRA_DEGREE)
    vals, _ = sol.at_reference_points(geo.vol_rule.points)
    ex = np.asarray(exact(geo.x_vol), dtype=float)
    return float(np.sqrt(np.sum(geo.wdet * (vals - ex) ** 2)))


def error_energy(sol: Solution, exact: ExactFn, dg: DgParams) -> float:
    """Energy norm of u - u_h; boundary jumps are measured against the exact trace."""
    return energy_norm(sol.space, dg, sol, exact, extra_degree=ERROR_EXTRA_DEGREE)


def eoc(errors: Sequence[float], hs: Sequence[float]) -> list[float]:
    errors = np.asarray(errors, dtype=float)
    hs = np.asarray(hs, dtype=float)
    if errors.shape != hs.shape or errors.size < 2:
        raise ValueError("eoc needs two equally long sequences of length >= 2")
    if np.any(errors <= 0) or np.any(hs <= 0):
        raise ValueError("errors and mesh sizes must be positive")
    le, lh = np.log(errors), np.log(hs)
    return list((le[1:] - le[:-1]) / (lh[1:] - lh[:-1]))


def relative_percent(err: float, norm_of_u: float) -> float:
    if not norm_of_u > 0:
        raise ValueError("reference norm must be positive")
    return 100.0 * err / norm_of_u


def sample_line(sol: Solution, segment, count: int, params: ModelParams,
                y_offset: float = 0.0, endpoint: bool = False) -> np.ndarray:
    """Sample u, stress and strain at ``count`` points along ``segment``.

    Returns an array with columns ``SAMPLE_COLUMNS``.  Points on the crack
    are nudged 1e-9 below it when no offset is requested.
    """
    (x0, y0), (x1, y1) = segment
    t = np.linspace(0.0, 1.0, count, endpoint=endpoint)
    pts = np.column_stack([x0 + t * (x1 - x0), y0 + t * (y1 - y0) + y_offset])
    mesh = sol.space.mesh
    if mesh.crack is not None and y_offset == 0.0:
        (cx0, cy), (cx1, _) = mesh.crack
        on = (np.abs(pts[:, 1] - cy) < 1e-12) & (pts[:, 0] >= cx0) & (pts[:, 0] <= cx1)
        pts[on, 1] -= 1e-9
    elems = mesh.locate(pts)
    if np.any(elems < 0):
        raise ValueError(f"sample point {pts[np.argmax(elems < 0)]} lies outside the mesh")
    ref = mesh.to_reference(elems, pts)
    ref = np.clip(ref, 0.0, 1.0)
    u, g = sol.at_element_points(elems, ref)
    T = stress_from_gradient(g)
    eps = strain_from_stress(T, params)
    return np.column_stack([pts, u, T, eps])


# -- export -------------------------------------------------------------
def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    v = float(v)
    if math.isnan(v):
        return ""
    return f"{v:.12e}"


def export_csv(data, path, columns: Sequence[str] | None = None) -> Path:
    """Write ConvergenceRecords or a sample array (rows) with a header row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows: Iterable[Sequence]
    if isinstance(data, np.ndarray):
        columns = columns or SAMPLE_COLUMNS
        rows = data.tolist()
    else:
        data = list(data)
        columns = columns or RECORD_COLUMNS
        rows = [[asdict(r)[c] for c in columns] if isinstance(r, ConvergenceRecord) else r
                for r in data]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _lattice(k: int):
    pts = [(i / k, j / k) for j in range(k + 1) for i in range(k + 1 - j)]

    def idx(i, j):
        return j * (k + 1) - j * (j - 1) // 2 + i

    tris = []
    for j in range(k):
        for i in range(k - j):
            tris.append((idx(i, j), idx(i + 1, j), idx(i, j + 1)))
            if i + j < k - 1:
                tris.append((idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)))
    return np.array(pts), np.array(tris)


def _write_vtk(path, title, points, cells, point_data, cell_data) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(f"{title}\nASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {len(points)} double\n")
        for x, y in points:
            fh.write(f"{x:.15g} {y:.15g} 0\n")
        fh.write(f"CELLS {len(cells)} {4 * len(cells)}\n")
        for a, b, c in cells:
            fh.write(f"3 {a} {b} {c}\n")
        fh.write(f"CELL_TYPES {len(cells)}\n")
        fh.write("5\n" * len(cells))
        if cell_data:
            fh.write(f"CELL_DATA {len(cells)}\n")
            for name, vals in cell_data.items():
                fh.write(f"SCALARS {name} int 1\nLOOKUP_TABLE default\n")
                fh.write("\n".join(str(int(v)) for v in vals) + "\n")
        if point_data:
            fh.write(f"POINT_DATA {len(points)}\n")
            for name, vals in point_data.items():
                fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                fh.write("\n".join(f"{v:.12e}" for v in vals) + "\n")
    return path


def export_vtk(sol: Solution, path, params: ModelParams | None = None) -> Path:
    """Discontinuous field dump: each element is split into degree**2 cells."""
    params = params or ModelParams()
    sp = sol.space
    mesh = sp.mesh
    points, cells, owner, degree_of_cell = [], [], [], []
    el_ids, ref_pts = [], []
    base = 0
    for e in range(mesh.n_elements):
        k = int(sp.degrees[e])
        lp, lt = _lattice(k)
        ref_pts.append(lp)
        el_ids.append(np.full(len(lp), e))
        cells.append(lt + base)
        owner.append(np.full(len(lt), e))
        degree_of_cell.append(np.full(len(lt), k))
        base += len(lp)
    el_ids = np.concatenate(el_ids)
    ref = np.vstack(ref_pts)
    points = mesh.to_physical(el_ids, ref)
    u, g = sol.at_element_points(el_ids, ref)
    T = stress_from_gradient(g)
    eps = strain_from_stress(T, params)
    pdata = {"u": u, "grad_norm": np.linalg.norm(g, axis=1), "T13": T[:, 0], "T23": T[:, 1],
             "eps13": eps[:, 0], "eps23": eps[:, 1]}
    cdata = {"degree": np.concatenate(degree_of_cell), "element": np.concatenate(owner)}
    return _write_vtk(path, "sldg solution", points, np.vstack(cells), pdata, cdata)


def export_mesh_vtk(mesh, path) -> Path:
    return _write_vtk(path, "sldg mesh", mesh.vertices, mesh.elements, {},
                      {"level": mesh.level, "element": np.arange(mesh.n_elements)})
