"""Labeled hexahedral tensor-product grid.

The grid is structured: node lines along each axis are given by 1D coordinate
arrays, elements are the cells between consecutive lines.  All geometry
operations (tagging, lead carving, probe placement) work on this structured
indexing, which keeps mesh construction deterministic and conforming by
construction.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np


class RegionTag(IntEnum):
    IVS_MYO = 1
    LBB = 2
    FIBROUS = 3
    BLOOD_LV = 4
    BLOOD_RV = 5
    TIP_ELECTRODE = 6
    RING_ELECTRODE = 7
    LEAD_BODY = 8
    LUMEN_BLOOD = 9


TISSUE_TAGS = (RegionTag.IVS_MYO, RegionTag.LBB)
BATH_TAGS = (RegionTag.FIBROUS, RegionTag.BLOOD_LV, RegionTag.BLOOD_RV,
             RegionTag.LUMEN_BLOOD)
LEAD_TAGS = (RegionTag.TIP_ELECTRODE, RegionTag.RING_ELECTRODE,
             RegionTag.LEAD_BODY)
ELECTRODE_TAGS = (RegionTag.TIP_ELECTRODE, RegionTag.RING_ELECTRODE)

# Local node order of a hexahedron: x fastest, then y, then z.
_CORNER_OFFSETS = np.array(
    [(0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 0),
     (0, 0, 1), (1, 0, 1), (0, 1, 1), (1, 1, 1)], dtype=np.int64)

# VTK_HEXAHEDRON corner order relative to _CORNER_OFFSETS.
_VTK_HEX_ORDER = (0, 1, 3, 2, 4, 5, 7, 6)


class GeometryError(ValueError):
    """Raised for unresolvable or inconsistent geometry requests."""


@dataclass
class Mesh:
    """Structured hexahedral mesh with region tags and fiber triads.

    Coordinates are in mm.  ``tags`` / ``fibers`` / ``cable_id`` are
    per-element, node sets are named arrays of global node indices.
    """

    xs: np.ndarray                # node lines, shape (nx+1,)
    ys: np.ndarray
    zs: np.ndarray
    tags: np.ndarray              # (nel,) uint8
    fibers: np.ndarray            # (nel, 3, 3) rows: fiber, sheet, normal
    cable_id: np.ndarray          # (nel,) int32, -1 outside the LBB
    node_sets: dict[str, np.ndarray] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    # ---- sizes and indexing -------------------------------------------------

    @property
    def shape(self) -> tuple[int, int, int]:
        return (len(self.xs) - 1, len(self.ys) - 1, len(self.zs) - 1)

    @property
    def n_elements(self) -> int:
        nx, ny, nz = self.shape
        return nx * ny * nz

    @property
    def n_nodes(self) -> int:
        nx, ny, nz = self.shape
        return (nx + 1) * (ny + 1) * (nz + 1)

    def node_index(self, i, j, k):
        nx, ny, _ = self.shape
        return np.asarray(i) + (nx + 1) * (np.asarray(j) + (ny + 1) * np.asarray(k))

    def element_index(self, i, j, k):
        nx, ny, _ = self.shape
        return np.asarray(i) + nx * (np.asarray(j) + ny * np.asarray(k))

    def element_ijk(self, e):
        nx, ny, _ = self.shape
        e = np.asarray(e)
        return e % nx, (e // nx) % ny, e // (nx * ny)

    def node_coords(self) -> np.ndarray:
        """(n_nodes, 3) array of node positions."""
        X, Y, Z = np.meshgrid(self.xs, self.ys, self.zs, indexing="ij")
        out = np.empty((self.n_nodes, 3))
        # transpose so that x varies fastest, matching node_index
        out[:, 0] = X.transpose(2, 1, 0).ravel()
        out[:, 1] = Y.transpose(2, 1, 0).ravel()
        out[:, 2] = Z.transpose(2, 1, 0).ravel()
        return out

    def element_centers(self) -> np.ndarray:
        cx = 0.5 * (self.xs[:-1] + self.xs[1:])
        cy = 0.5 * (self.ys[:-1] + self.ys[1:])
        cz = 0.5 * (self.zs[:-1] + self.zs[1:])
        X, Y, Z = np.meshgrid(cx, cy, cz, indexing="ij")
        out = np.empty((self.n_elements, 3))
        out[:, 0] = X.transpose(2, 1, 0).ravel()
        out[:, 1] = Y.transpose(2, 1, 0).ravel()
        out[:, 2] = Z.transpose(2, 1, 0).ravel()
        return out

    def element_sizes(self) -> np.ndarray:
        """(nel, 3) element edge lengths (hx, hy, hz)."""
        hx = np.diff(self.xs)
        hy = np.diff(self.ys)
        hz = np.diff(self.zs)
        HX, HY, HZ = np.meshgrid(hx, hy, hz, indexing="ij")
        out = np.empty((self.n_elements, 3))
        out[:, 0] = HX.transpose(2, 1, 0).ravel()
        out[:, 1] = HY.transpose(2, 1, 0).ravel()
        out[:, 2] = HZ.transpose(2, 1, 0).ravel()
        return out

    def element_volumes(self) -> np.ndarray:
        h = self.element_sizes()
        return h[:, 0] * h[:, 1] * h[:, 2]

    def element_nodes(self, elements=None) -> np.ndarray:
        """(m, 8) global node indices of each element's corners."""
        if elements is None:
            elements = np.arange(self.n_elements)
        i, j, k = self.element_ijk(elements)
        corners = _CORNER_OFFSETS
        return self.node_index(i[:, None] + corners[:, 0],
                               j[:, None] + corners[:, 1],
                               k[:, None] + corners[:, 2])

    # ---- queries ------------------------------------------------------------

    def elements_with_tag(self, *tags: RegionTag) -> np.ndarray:
        vals = np.array([int(t) for t in tags], dtype=self.tags.dtype)
        return np.flatnonzero(np.isin(self.tags, vals))

    def nodes_of_elements(self, elements) -> np.ndarray:
        return np.unique(self.element_nodes(np.asarray(elements)))

    def nearest_node(self, point) -> int:
        i = int(np.argmin(np.abs(self.xs - point[0])))
        j = int(np.argmin(np.abs(self.ys - point[1])))
        k = int(np.argmin(np.abs(self.zs - point[2])))
        return int(self.node_index(i, j, k))

    def face_neighbors(self, e: int) -> list[tuple[int, float]]:
        """Face-adjacent elements of ``e`` with shared face areas."""
        i, j, k = (int(v) for v in self.element_ijk(e))
        nx, ny, nz = self.shape
        hx = self.xs[i + 1] - self.xs[i]
        hy = self.ys[j + 1] - self.ys[j]
        hz = self.zs[k + 1] - self.zs[k]
        out = []
        for di, dj, dk, area in ((-1, 0, 0, hy * hz), (1, 0, 0, hy * hz),
                                 (0, -1, 0, hx * hz), (0, 1, 0, hx * hz),
                                 (0, 0, -1, hx * hy), (0, 0, 1, hx * hy)):
            ii, jj, kk = i + di, j + dj, k + dk
            if 0 <= ii < nx and 0 <= jj < ny and 0 <= kk < nz:
                out.append((int(self.element_index(ii, jj, kk)), float(area)))
        return out

    def content_hash(self) -> str:
        h = hashlib.sha256()
        for arr in (self.xs, self.ys, self.zs, self.tags, self.cable_id):
            h.update(np.ascontiguousarray(arr).tobytes())
        h.update(np.ascontiguousarray(self.fibers).tobytes())
        for name in sorted(self.node_sets):
            h.update(name.encode())
            h.update(np.ascontiguousarray(self.node_sets[name]).tobytes())
        return h.hexdigest()

    # ---- export -------------------------------------------------------------

    def write_vtk(self, path, point_data: dict[str, np.ndarray] | None = None) -> None:
        """Write a legacy-ASCII VTK unstructured grid (cells, tags, fibers)."""
        coords = self.node_coords()
        conn = self.element_nodes()[:, _VTK_HEX_ORDER]
        nel = self.n_elements
        with open(path, "w") as f:
            f.write("# vtk DataFile Version 3.0\nseptapace mesh\nASCII\n")
            f.write("DATASET UNSTRUCTURED_GRID\n")
            f.write(f"POINTS {self.n_nodes} double\n")
            np.savetxt(f, coords, fmt="%.9g")
            f.write(f"CELLS {nel} {nel * 9}\n")
            cells = np.hstack([np.full((nel, 1), 8, dtype=np.int64), conn])
            np.savetxt(f, cells, fmt="%d")
            f.write(f"CELL_TYPES {nel}\n")
            np.savetxt(f, np.full(nel, 12, dtype=np.int64)[:, None], fmt="%d")
            f.write(f"CELL_DATA {nel}\n")
            f.write("SCALARS region_tag int 1\nLOOKUP_TABLE default\n")
            np.savetxt(f, self.tags[:, None], fmt="%d")
            f.write("SCALARS cable_id int 1\nLOOKUP_TABLE default\n")
            np.savetxt(f, self.cable_id[:, None], fmt="%d")
            f.write("VECTORS fiber double\n")
            np.savetxt(f, self.fibers[:, 0, :], fmt="%.9g")
            if point_data:
                f.write(f"POINT_DATA {self.n_nodes}\n")
                for name, values in point_data.items():
                    f.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                    np.savetxt(f, np.asarray(values, dtype=float)[:, None], fmt="%.9g")


def graded_line(start: float, stop: float, h0: float, growth: float = 1.0,
                h_max: float | None = None) -> np.ndarray:
    """Node line from ``start`` to ``stop`` with spacing h0 growing by
    ``growth`` per cell up to ``h_max``; the last cell absorbs rounding."""
    if stop <= start:
        raise GeometryError(f"empty axis segment [{start}, {stop}]")
    hs = []
    pos, h = start, h0
    while pos + h < stop - 1e-9:
        hs.append(h)
        pos += h
        h = min(h * growth, h_max if h_max is not None else h * growth)
    hs.append(stop - pos)
    pts = np.concatenate([[start], start + np.cumsum(hs)])
    pts[-1] = stop
    return pts


def uniform_count(start: float, stop: float, h: float) -> int:
    """Number of cells of target size ``h`` filling [start, stop] (rounded)."""
    n = max(1, int(round((stop - start) / h)))
    return n


def uniform_line(start: float, stop: float, h: float) -> np.ndarray:
    return np.linspace(start, stop, uniform_count(start, stop, h) + 1)
