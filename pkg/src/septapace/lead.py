"""Parametric pacing lead: deployment into the wedge, complications, probes.

The lead is an idealized cylinder advanced from the RV blood pool along a
(possibly tilted) axis.  The distal segment is the tip electrode, followed by
an insulated gap and the ring electrode; the remaining shaft is insulated
body.  Elements whose centers fall inside the cylinder are retagged, electrode
surface node sets are registered, and sentinel probe nodes are placed for
capture classification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .mesh import (GeometryError, LEAD_TAGS, Mesh, RegionTag)

DEPTH_PRESETS = {"z1": 1.8, "z2": 5.0, "z3": 10.0}


class DeploymentError(GeometryError):
    """Raised when a lead deployment cannot be realized on the mesh."""


@dataclass(frozen=True)
class LeadSpec:
    """Idealized lead dimensions (mm)."""

    tip_length: float = 1.8
    tip_radius: float = 0.55
    ring_length: float = 2.5
    ring_radius: float = 0.7
    tip_to_ring: float = 9.0     # distal tip-electrode end to ring leading edge
    body_radius: float = 0.7

    def validate(self) -> None:
        for name in ("tip_length", "tip_radius", "ring_length", "ring_radius",
                     "tip_to_ring", "body_radius"):
            if getattr(self, name) <= 0:
                raise DeploymentError(f"lead {name} must be > 0")
        if self.tip_to_ring <= self.tip_length:
            raise DeploymentError("tip_to_ring spacing must exceed the tip length")


@dataclass(frozen=True)
class DeploymentConfig:
    """Where and how the lead sits in the wedge."""

    x: float | None = None           # antero-posterior tip position, mm
    y: float | None = None           # apico-basal tip position, mm
    depth: float | str = "z3"        # tip-end depth from the RV endocardium
    tilt_long: float = 0.0           # deg, tilt within the (y, z) plane
    tilt_trans: float = 0.0          # deg, tilt within the (x, z) plane
    polarity: str = "cathodal"       # tip polarity during the pulse
    perforation: bool = False
    dislodgement: bool = False
    lumen_thickness: float = 0.45    # mm, dislodgement blood sleeve
    coverage: dict[str, float] | None = None   # tip-contact fractions request
    packing: str = "insulated-cables"
    sheath_lv_removed: bool = False  # expose the band directly to the LV pool
    label: str = ""

    def depth_mm(self) -> float:
        if isinstance(self.depth, str):
            try:
                return DEPTH_PRESETS[self.depth]
            except KeyError:
                raise DeploymentError(f"unknown depth preset {self.depth!r}") from None
        return float(self.depth)

    def validate(self) -> None:
        if self.polarity not in ("cathodal", "anodal"):
            raise DeploymentError(f"unknown polarity {self.polarity!r}")
        if self.perforation and self.dislodgement:
            raise DeploymentError("perforation and dislodgement are mutually exclusive")
        if abs(self.tilt_long) > 45 or abs(self.tilt_trans) > 45:
            raise DeploymentError("tilt angles are limited to 45 degrees")
        if self.coverage is not None:
            total = sum(self.coverage.values())
            if abs(total - 1.0) > 1e-9:
                raise DeploymentError(f"coverage fractions sum to {total}, expected 1")
            unknown = set(self.coverage) - {"FIBROUS", "IVS_MYO", "LBB"}
            if unknown:
                raise DeploymentError(f"coverage tags not supported: {sorted(unknown)}")


def advance_direction(config: DeploymentConfig) -> np.ndarray:
    """Unit advance direction (RV toward LV) after applying both tilts."""
    al = math.radians(config.tilt_long)
    at = math.radians(config.tilt_trans)
    d = np.array([math.sin(at), math.sin(al) * math.cos(at),
                  math.cos(al) * math.cos(at)])
    return d / np.linalg.norm(d)


def deploy_lead(mesh: Mesh, spec: LeadSpec = LeadSpec(),
                config: DeploymentConfig = DeploymentConfig()) -> Mesh:
    """Carve the lead into ``mesh`` in place and register electrode node sets
    and sentinel probes.  Returns the mesh for chaining."""
    spec.validate()
    config.validate()
    params = mesh.meta["params"]
    Lx, Ly, Lz = params.dimensions
    x_tip = config.x if config.x is not None else Lx / 2
    y_tip = config.y if config.y is not None else Ly / 2
    depth = config.depth_mm()
    if config.perforation:
        # helical tip protrudes entirely into the LV pool
        depth = Lz + spec.tip_length
    if not (0 < x_tip < Lx and 0 < y_tip < Ly):
        raise DeploymentError("deployment out of bounds: tip target outside domain")
    if depth > Lz + params.blood_depth:
        raise DeploymentError("deployment out of bounds: tip beyond the LV pool")

    d = advance_direction(config)
    tip_end = np.array([x_tip, y_tip, depth])

    centers = mesh.element_centers()
    rel = centers - tip_end
    s = -(rel @ d)                        # arclength back along the shaft
    radial = rel + np.outer(s, d)
    rho = np.linalg.norm(radial, axis=1)

    shaft_len = _shaft_length(tip_end, d, params)
    in_tip = (s >= 0) & (s <= spec.tip_length) & (rho <= spec.tip_radius)
    ring_lo = spec.tip_to_ring
    ring_hi = spec.tip_to_ring + spec.ring_length
    in_ring = (s > ring_lo) & (s <= ring_hi) & (rho <= spec.ring_radius)
    in_body = ((s > spec.tip_length) & (s <= shaft_len) & (rho <= spec.body_radius)
               & ~in_ring)

    entry = tip_end - shaft_len * d
    if not (0 <= entry[0] <= Lx and 0 <= entry[1] <= Ly):
        raise DeploymentError("deployment out of bounds: shaft exits a lateral face")
    if not in_tip.any():
        raise DeploymentError("deployment out of bounds: tip not resolvable on mesh")

    mesh.tags[in_body] = int(RegionTag.LEAD_BODY)
    mesh.tags[in_ring] = int(RegionTag.RING_ELECTRODE)
    mesh.tags[in_tip] = int(RegionTag.TIP_ELECTRODE)
    mesh.cable_id[in_tip | in_ring | in_body] = -1

    if config.sheath_lv_removed:
        _remove_lv_facing_sheath(mesh)
    if config.dislodgement:
        _carve_lumen(mesh, spec, config, tip_end, d, s, rho)
    if config.coverage is not None:
        _apply_coverage(mesh, config.coverage, tip_end, d)

    _register_electrode_sets(mesh)
    _place_probes(mesh, tip_end)
    ring_embedded = bool(np.all(
        centers[in_ring, 2] > 0)) if in_ring.any() else False
    mesh.meta["deployment"] = {
        "config": config, "spec": spec, "tip_end": tip_end, "direction": d,
        "ring_embedded": ring_embedded, "ring_present": bool(in_ring.any()),
    }
    return mesh


def _shaft_length(tip_end, d, params) -> float:
    """Shaft runs from the tip back out through the RV pool boundary."""
    z_exit = -params.blood_depth
    return (tip_end[2] - z_exit) / max(d[2], 1e-6)


def _remove_lv_facing_sheath(mesh: Mesh) -> None:
    layers = mesh.meta["layers"]
    cz = 0.5 * (mesh.zs[:-1] + mesh.zs[1:])
    in_top = (cz > layers["z_cable_hi"]) & (cz < layers["z_lv"])
    nx, ny, nz = mesh.shape
    tag3 = mesh.tags.reshape(nz, ny, nx)
    sel = tag3[in_top, :, :] == int(RegionTag.FIBROUS)
    sub = tag3[in_top, :, :]
    sub[sel] = int(RegionTag.BLOOD_LV)
    tag3[in_top, :, :] = sub


def _carve_lumen(mesh, spec, config, tip_end, d, s, rho) -> None:
    """Blood sleeve around the tip sides; the distal end keeps tissue contact."""
    th = config.lumen_thickness
    tissue = np.isin(mesh.tags, (int(RegionTag.IVS_MYO), int(RegionTag.FIBROUS)))
    sleeve = ((s >= 0.35) & (s <= spec.tip_length + th)
              & (rho > spec.tip_radius) & (rho <= spec.tip_radius + th))
    mesh.tags[sleeve & tissue] = int(RegionTag.LUMEN_BLOOD)
    mesh.cable_id[sleeve & tissue] = -1


def tip_contact_faces(mesh: Mesh) -> list[tuple[int, int, float]]:
    """(tip_element, neighbor_element, face_area) over the exposed tip surface."""
    out = []
    for e in mesh.elements_with_tag(RegionTag.TIP_ELECTRODE):
        for nb, area in mesh.face_neighbors(int(e)):
            if mesh.tags[nb] not in (int(RegionTag.TIP_ELECTRODE),
                                     int(RegionTag.RING_ELECTRODE),
                                     int(RegionTag.LEAD_BODY)):
                out.append((int(e), nb, area))
    return out


def composition_report(mesh: Mesh) -> dict[str, float]:
    """Fractions of the tip-electrode surface facing each region tag."""
    faces = tip_contact_faces(mesh)
    if not faces:
        raise DeploymentError("no lead deployed: tip surface is empty")
    totals: dict[str, float] = {}
    for _, nb, area in faces:
        name = RegionTag(mesh.tags[nb]).name
        totals[name] = totals.get(name, 0.0) + area
    total = sum(totals.values())
    return {k: v / total for k, v in sorted(totals.items())}


def _apply_coverage(mesh: Mesh, coverage: dict[str, float], tip_end, d) -> None:
    """Retag tip-adjacent tissue to approach the requested contact fractions.

    Myocardium and fibrous faces trade places freely; a zero LBB request
    interposes fibrous where the tip touches cables (local contact break).
    LBB contact cannot be increased beyond what the geometry provides.
    """
    faces = tip_contact_faces(mesh)
    want_lbb = coverage.get("LBB", 0.0)
    if want_lbb == 0.0:
        for _, nb, _ in faces:
            if mesh.tags[nb] == int(RegionTag.LBB):
                mesh.tags[nb] = int(RegionTag.FIBROUS)
                mesh.cable_id[nb] = -1
        faces = tip_contact_faces(mesh)

    swappable = [(e, nb, a) for e, nb, a in faces
                 if mesh.tags[nb] in (int(RegionTag.IVS_MYO), int(RegionTag.FIBROUS))]
    total = sum(a for _, _, a in tip_contact_faces(mesh))
    other = sum(a for _, nb, a in tip_contact_faces(mesh)
                if mesh.tags[nb] not in (int(RegionTag.IVS_MYO), int(RegionTag.FIBROUS)))
    pool = total - other
    if pool <= 0:
        return
    want_f = coverage.get("FIBROUS", 0.0)
    want_m = coverage.get("IVS_MYO", 0.0)
    # renormalize the myo/fibrous split over the swappable pool
    frac_f = want_f / max(want_f + want_m, 1e-12)
    target_f = frac_f * pool

    # deterministic order: proximal-to-distal along the shaft, then by angle
    centers = mesh.element_centers()

    def sort_key(item):
        e, nb, a = item
        c = centers[nb] - tip_end
        s = -(c @ d)
        radial = c + s * d
        ang = math.atan2(radial[1], radial[0])
        return (round(s, 6), round(ang, 6), nb)

    swappable.sort(key=sort_key)
    seen: dict[int, float] = {}
    for _, nb, a in swappable:
        seen[nb] = seen.get(nb, 0.0) + a
    acc = 0.0
    for nb in sorted(seen, key=lambda n: (sort_key((0, n, 0.0)))):
        tag = RegionTag.FIBROUS if acc < target_f - 1e-12 else RegionTag.IVS_MYO
        if mesh.tags[nb] != int(tag):
            mesh.tags[nb] = int(tag)
            mesh.cable_id[nb] = -1
        if tag is RegionTag.FIBROUS:
            acc += seen[nb]


def _register_electrode_sets(mesh: Mesh) -> None:
    lead_vals = tuple(int(t) for t in LEAD_TAGS)
    for name, tag in (("tip_surface", RegionTag.TIP_ELECTRODE),
                      ("ring_surface", RegionTag.RING_ELECTRODE)):
        nodes: set[int] = set()
        for e in mesh.elements_with_tag(tag):
            i, j, k = (int(v) for v in mesh.element_ijk(int(e)))
            for nb, _ in mesh.face_neighbors(int(e)):
                if mesh.tags[nb] not in lead_vals:
                    ii, jj, kk = (int(v) for v in mesh.element_ijk(nb))
                    nodes.update(_shared_face_nodes(mesh, (i, j, k), (ii, jj, kk)))
        mesh.node_sets[name] = np.array(sorted(nodes), dtype=np.int64)
    tip = set(mesh.node_sets["tip_surface"])
    ring = set(mesh.node_sets["ring_surface"])
    both = tip & ring
    if both:
        mesh.node_sets["ring_surface"] = np.array(
            sorted(ring - both), dtype=np.int64)
    if len(mesh.node_sets["tip_surface"]) == 0:
        raise DeploymentError("tip electrode surface is empty")


def _shared_face_nodes(mesh, ijk_a, ijk_b):
    i, j, k = ijk_a
    ii, jj, kk = ijk_b
    di, dj, dk = ii - i, jj - j, kk - k
    fi = i + max(di, 0)
    fj = j + max(dj, 0)
    fk = k + max(dk, 0)
    if di != 0:
        return [int(mesh.node_index(fi, j + b, k + c)) for b in (0, 1) for c in (0, 1)]
    if dj != 0:
        return [int(mesh.node_index(i + b, fj, k + c)) for b in (0, 1) for c in (0, 1)]
    return [int(mesh.node_index(i + b, j + c, fk)) for b in (0, 1) for c in (0, 1)]


def _place_probes(mesh: Mesh, tip_end) -> None:
    """Sentinel nodes: both ends of every cable, plus two myocardial probes
    at >= 5 mm from the tip (one near each endocardium)."""
    params = mesh.meta["params"]
    Lx, Ly, Lz = params.dimensions
    nx, ny, nz = mesh.shape
    cable3 = mesh.cable_id.reshape(nz, ny, nx)
    n_cables = params.lbb.bundle_count
    lo_nodes = np.full(n_cables, -1, dtype=np.int64)
    hi_nodes = np.full(n_cables, -1, dtype=np.int64)
    for cid in range(n_cables):
        ks, js, is_ = np.nonzero(cable3 == cid)
        if len(js) == 0:
            continue
        j_lo, j_hi = js.min(), js.max()
        sel_lo = js == j_lo
        sel_hi = js == j_hi
        # node at the centroid corner of the end element, inner face
        lo_nodes[cid] = mesh.node_index(int(is_[sel_lo].min()), int(j_lo),
                                        int(ks[sel_lo].min()))
        hi_nodes[cid] = mesh.node_index(int(is_[sel_hi].min()), int(j_hi) + 1,
                                        int(ks[sel_hi].min()))
    mesh.node_sets["probe_lbb_lo"] = lo_nodes
    mesh.node_sets["probe_lbb_hi"] = hi_nodes

    offset = 6.0
    side = -1.0 if tip_end[0] - offset > 0.5 else 1.0
    x_probe = min(max(tip_end[0] + side * offset, 0.5), Lx - 0.5)
    layers = mesh.meta["layers"]
    z_lv = layers["z_band_lo"] - 0.5
    probes = {
        "probe_ivs_lv": (x_probe, tip_end[1], z_lv),
        "probe_ivs_rv": (x_probe, tip_end[1], min(1.0, Lz / 4)),
    }
    for name, p in probes.items():
        node = _nearest_tissue_node(mesh, p, RegionTag.IVS_MYO)
        mesh.node_sets[name] = np.array([node], dtype=np.int64)


def _nearest_tissue_node(mesh: Mesh, point, tag: RegionTag) -> int:
    elems = mesh.elements_with_tag(tag)
    centers = mesh.element_centers()[elems]
    e = elems[int(np.argmin(np.sum((centers - np.asarray(point)) ** 2, axis=1)))]
    return int(mesh.element_nodes(np.array([e]))[0, 0])


def position_config(x: float, depth: float | str, y: float | None = None,
                    **kwargs) -> DeploymentConfig:
    return DeploymentConfig(x=x, y=y, depth=depth, **kwargs)


def describe(config: DeploymentConfig) -> str:
    bits = [f"x={config.x}", f"depth={config.depth}", config.polarity]
    if config.tilt_long:
        bits.append(f"tilt_long={config.tilt_long}")
    if config.tilt_trans:
        bits.append(f"tilt_trans={config.tilt_trans}")
    for flag in ("perforation", "dislodgement", "sheath_lv_removed"):
        if getattr(config, flag):
            bits.append(flag)
    if config.packing != "insulated-cables":
        bits.append(config.packing)
    return ", ".join(bits)
