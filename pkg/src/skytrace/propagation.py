"""Specular propagation paths between transmitter and receiver.

Paths are enumerated with the image method: mirroring the transmitter
across candidate facet planes yields, for reflection orders up to two,
exactly the specular path set that launch-and-bounce tracing converges to
over planar facets, with no ray-count or reception-sphere tuning. Per-path
complex amplitudes combine spherical spreading over the unfolded path
length, Fresnel reflection with the field decomposed per bounce into
components perpendicular and parallel to the plane of incidence, and the
propagation phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .geometry import Scene, is_inside_building
from .materials import Material

SPEED_OF_LIGHT = 299792458.0
VACUUM_PERMITTIVITY = 8.8541878128e-12

# Receiver classification: covered (paths exist), Z (outdoors, no paths),
# B (inside a building, not traced).
FLAG_COVERED = "covered"
FLAG_Z = "Z"
FLAG_B = "B"


@dataclass(frozen=True)
class PropPath:
    """One specular path from TX to RX.

    ``points`` runs TX, bounce points..., RX; ``amplitude`` is the complex
    field ratio (None until attached). A passive path can never amplify:
    |amplitude| <= wavelength / (4 pi length).
    """

    points: np.ndarray
    length: float
    dep_dir: np.ndarray
    arr_dir: np.ndarray
    order: int
    facet_ids: tuple[int, ...]
    amplitude: complex | None = None


@dataclass(frozen=True)
class PathSet:
    """All unblocked specular paths to one receiver, or the reason there are none."""

    paths: tuple[PropPath, ...]
    flag: str

    @property
    def covered(self) -> bool:
        return self.flag == FLAG_COVERED


def fresnel_gamma(material: Material, cos_theta_i: float, pol: str, freq_hz: float) -> complex:
    """Complex Fresnel reflection coefficient for one bounce.

    ``cos_theta_i`` is the cosine of the incidence angle measured from the
    surface normal, in (0, 1]. The parallel coefficient is expressed in the
    mirrored-basis convention (the parallel unit vector is reflected across
    the surface plane together with the ray), so both polarizations reduce
    to (1 - sqrt(eps)) / (1 + sqrt(eps)) at normal incidence and a perfect
    reflector returns -1 for both.
    """
    if not 0.0 < cos_theta_i <= 1.0 + 1e-12:
        raise ValueError(f"cos_theta_i must be in (0, 1], got {cos_theta_i}")
    if freq_hz <= 0:
        raise ValueError("freq_hz must be > 0")
    if material.perfect_reflector:
        return -1.0 + 0.0j
    cos_t = min(cos_theta_i, 1.0)
    eps_c = material.rel_permittivity - 1j * material.conductivity_s_m / (
        2.0 * math.pi * freq_hz * VACUUM_PERMITTIVITY
    )
    sin2 = 1.0 - cos_t * cos_t
    root = np.sqrt(eps_c - sin2)
    if pol == "perpendicular":
        return complex((cos_t - root) / (cos_t + root))
    if pol == "parallel":
        return complex((root - eps_c * cos_t) / (root + eps_c * cos_t))
    raise ValueError(f"pol must be 'perpendicular' or 'parallel', got {pol!r}")


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def initial_polarization(dep_dir: np.ndarray) -> np.ndarray:
    """Vertical transverse polarization at departure (x-fallback for vertical rays)."""
    for ref in (np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0])):
        t = ref - (ref @ dep_dir) * dep_dir
        norm = np.linalg.norm(t)
        if norm > 1e-9:
            return t / norm
    raise ValueError("degenerate departure direction")


def path_amplitude(path: PropPath, scene: Scene, wavelength: float) -> complex:
    """Complex field ratio of one path.

    Spherical spreading acts over the full unfolded length (exact for
    planar reflectors, where the product of per-bounce divergence factors
    collapses to 1/d). The transmitted field starts vertically polarized;
    each bounce splits it into perpendicular/parallel components, applies
    the Fresnel coefficients, and recombines in the mirrored basis. The
    scalar amplitude is the final field projected on the reflection-mapped
    initial polarization, so an isotropic element senses magnitude and
    phase along the propagated polarization.
    """
    freq_hz = SPEED_OF_LIGHT / wavelength
    k_dir = path.dep_dir
    field = initial_polarization(k_dir).astype(complex)
    ref_pol = field.real.copy()

    for j, fid in enumerate(path.facet_ids):
        k_in = _unit(path.points[j + 1] - path.points[j])
        normal = scene.facet_normals[fid]
        if k_in @ normal > 0:
            normal = -normal
        cos_i = float(-(k_in @ normal))
        e_s = np.cross(k_in, normal)
        s_norm = np.linalg.norm(e_s)
        if s_norm < 1e-9:
            # Normal incidence: the incidence plane is undefined and both
            # coefficients coincide, so any transverse basis works.
            e_s = initial_polarization(k_in)
        else:
            e_s = e_s / s_norm
        e_p_in = np.cross(e_s, k_in)
        e_p_out = e_p_in - 2.0 * (e_p_in @ normal) * normal

        material = scene.facet_materials[fid]
        g_s = fresnel_gamma(material, cos_i, "perpendicular", freq_hz)
        g_p = fresnel_gamma(material, cos_i, "parallel", freq_hz)

        field = (field @ e_s) * g_s * e_s + (field @ e_p_in) * g_p * e_p_out
        ref_pol = ref_pol - 2.0 * (ref_pol @ normal) * normal

    pol_factor = complex(field @ ref_pol)
    spreading = wavelength / (4.0 * math.pi * path.length)
    phase = np.exp(-2j * math.pi * path.length / wavelength)
    return spreading * pol_factor * phase


def attach_amplitudes(pathset: PathSet, scene: Scene, wavelength: float) -> PathSet:
    """Return a copy of the path set with per-path amplitudes filled in."""
    paths = tuple(
        replace(p, amplitude=path_amplitude(p, scene, wavelength)) for p in pathset.paths
    )
    return PathSet(paths, pathset.flag)


def rssi(pathset: PathSet, tx_power_w: float, mode: str = "coherent") -> float | None:
    """Received power in dBm, or None when the path set is empty.

    Coherent mode sums the complex field ratios before squaring (ray
    superposition); incoherent mode sums per-path powers. Exact phasor
    cancellation yields -inf dBm.
    """
    if tx_power_w <= 0:
        raise ValueError("tx_power_w must be > 0")
    if mode not in ("coherent", "incoherent"):
        raise ValueError(f"mode must be 'coherent' or 'incoherent', got {mode!r}")
    if not pathset.paths:
        return None
    amps = np.array([p.amplitude for p in pathset.paths])
    if any(a is None for a in amps):
        raise ValueError("path amplitudes not attached; call attach_amplitudes first")
    if mode == "coherent":
        power_w = tx_power_w * abs(np.sum(amps)) ** 2
    else:
        power_w = tx_power_w * float(np.sum(np.abs(amps) ** 2))
    if power_w == 0.0:
        return -math.inf
    return 10.0 * math.log10(power_w * 1000.0)


class PathEnumerator:
    """Image-method specular path solver for one transmitter in one scene.

    Transmitter images across every facet plane (and, at order two, across
    every admissible plane pair) are precomputed once; each receiver query
    is then a vectorized intersection test plus occlusion checks on the few
    surviving candidates. Same-plane pairs are pruned up front: a ray that
    just left a plane can never return to it, so they contribute nothing.
    """

    def __init__(self, scene: Scene, tx, max_order: int = 2):
        if not 0 <= max_order <= 2:
            raise ValueError("max_order must be 0, 1, or 2")
        self.scene = scene
        self.tx = np.asarray(tx, dtype=float)
        self.max_order = max_order
        if self.tx[2] <= 0:
            raise ValueError("transmitter must sit above ground (z > 0)")
        if is_inside_building(self.tx, scene):
            raise ValueError("transmitter is inside a building")

        n, d = scene.facet_normals, scene.facet_offsets
        ht = n @ self.tx - d
        self.img1 = self.tx - 2.0 * ht[:, None] * n
        self.valid1 = np.abs(ht) > 1e-9

        if max_order >= 2:
            dot_nn = n @ n.T
            d_mismatch = np.abs(d[:, None] - dot_nn * d[None, :])
            same_plane = (np.abs(dot_nn) > 1.0 - 1e-12) & (d_mismatch < 1e-9)
            h2 = self.img1 @ n.T - d[None, :]
            pair_ok = self.valid1[:, None] & (np.abs(h2) > 1e-9) & ~same_plane
            np.fill_diagonal(pair_ok, False)

            f1, f2 = np.nonzero(pair_ok)  # row-major: sorted by (f1, f2)
            self.pair_f1, self.pair_f2 = f1, f2
            img2 = self.img1[:, None, :] - 2.0 * h2[:, :, None] * n[None, :, :]
            self.img2 = img2[pair_ok]
            self.pair_n1, self.pair_d1 = n[f1], d[f1]
            self.pair_n2, self.pair_d2 = n[f2], d[f2]
            self.pair_img1 = self.img1[f1]

    def paths_to(self, rx) -> PathSet:
        """All unblocked specular paths from the transmitter to ``rx``.

        Paths are ordered by reflection order, then facet ids, so results
        are deterministic. Receivers inside buildings are flagged B without
        tracing; outdoor receivers with no paths are flagged Z.
        """
        rx = np.asarray(rx, dtype=float)
        scene, tx = self.scene, self.tx
        if np.linalg.norm(rx - tx) < 1e-9:
            raise ValueError("receiver coincides with transmitter")
        if is_inside_building(rx, scene):
            return PathSet((), FLAG_B)

        # Geometric candidates first (specular points on their facets, legs
        # non-degenerate), then one batched occlusion pass over every
        # segment of every candidate.
        candidates: list[tuple[list[np.ndarray], tuple[int, ...]]] = [([tx, rx], ())]
        if self.max_order >= 1:
            candidates.extend(self._order1_candidates(rx))
        if self.max_order >= 2:
            candidates.extend(self._order2_candidates(rx))

        seg_p, seg_q, seg_excl, seg_owner = [], [], [], []
        for ci, (pts, fids) in enumerate(candidates):
            for k in range(len(pts) - 1):
                excl = set()
                if k > 0:
                    excl.add(fids[k - 1])
                if k < len(fids):
                    excl.add(fids[k])
                seg_p.append(pts[k])
                seg_q.append(pts[k + 1])
                seg_excl.append(tuple(excl))
                seg_owner.append(ci)
        hit = scene.segments_occluded(np.array(seg_p), np.array(seg_q), seg_excl)
        blocked = {seg_owner[i] for i in np.flatnonzero(hit)}

        paths = tuple(
            self._make_path(pts, fids)
            for ci, (pts, fids) in enumerate(candidates)
            if ci not in blocked
        )
        return PathSet(paths, FLAG_COVERED if paths else FLAG_Z)

    def _order1_candidates(self, rx: np.ndarray):
        scene, tx = self.scene, self.tx
        n, d = scene.facet_normals, scene.facet_offsets
        to_img = self.img1 - rx
        denom = np.einsum("fv,fv->f", n, to_img)
        num = d - n @ rx
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(np.abs(denom) > 1e-300, num / denom, np.inf)
        cand = self.valid1 & np.isfinite(t) & (t > 1e-12) & (t < 1.0 - 1e-12)
        if not np.any(cand):
            return []
        ids = np.flatnonzero(cand)
        pts = rx + t[ids, None] * to_img[ids]
        inside = scene.points_in_facets(pts, ids)

        out = []
        for fid, p in zip(ids[inside], pts[inside]):
            if np.linalg.norm(p - tx) < 1e-9 or np.linalg.norm(rx - p) < 1e-9:
                continue
            out.append(([tx, p, rx], (int(fid),)))
        return out

    def _order2_candidates(self, rx: np.ndarray):
        if len(self.pair_f1) == 0:
            return []
        scene, tx = self.scene, self.tx
        to_img2 = self.img2 - rx
        den2 = np.einsum("pv,pv->p", self.pair_n2, to_img2)
        num2 = self.pair_d2 - self.pair_n2 @ rx
        with np.errstate(divide="ignore", invalid="ignore"):
            t2 = np.where(np.abs(den2) > 1e-300, num2 / den2, np.inf)
        cand = np.isfinite(t2) & (t2 > 1e-12) & (t2 < 1.0 - 1e-12)
        if not np.any(cand):
            return []
        sel = np.flatnonzero(cand)
        p2 = rx + t2[sel, None] * to_img2[sel]
        keep = scene.points_in_facets(p2, self.pair_f2[sel])
        sel, p2 = sel[keep], p2[keep]
        if len(sel) == 0:
            return []

        to_img1 = self.pair_img1[sel] - p2
        den1 = np.einsum("pv,pv->p", self.pair_n1[sel], to_img1)
        num1 = self.pair_d1[sel] - np.einsum("pv,pv->p", self.pair_n1[sel], p2)
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = np.where(np.abs(den1) > 1e-300, num1 / den1, np.inf)
        ok = np.isfinite(t1) & (t1 > 1e-12) & (t1 < 1.0 - 1e-12)
        sel, t1, to_img1, p2 = sel[ok], t1[ok], to_img1[ok], p2[ok]
        if len(sel) == 0:
            return []
        p1 = p2 + t1[:, None] * to_img1
        ok = scene.points_in_facets(p1, self.pair_f1[sel])
        sel, p1, p2 = sel[ok], p1[ok], p2[ok]

        out = []
        for idx in range(len(sel)):
            f1 = int(self.pair_f1[sel[idx]])
            f2 = int(self.pair_f2[sel[idx]])
            a, b = p1[idx], p2[idx]
            legs = (np.linalg.norm(a - tx), np.linalg.norm(b - a), np.linalg.norm(rx - b))
            if min(legs) < 1e-9:
                continue
            out.append(([tx, a, b, rx], (f1, f2)))
        return out

    def _make_path(self, points: list[np.ndarray], facet_ids: tuple[int, ...]) -> PropPath:
        pts = np.array(points, dtype=float)
        segs = np.diff(pts, axis=0)
        length = float(np.sum(np.linalg.norm(segs, axis=1)))
        return PropPath(
            points=pts,
            length=length,
            dep_dir=_unit(segs[0]),
            arr_dir=_unit(segs[-1]),
            order=len(pts) - 2,
            facet_ids=facet_ids,
        )


def enumerate_paths(tx, rx, scene: Scene, max_order: int = 2) -> PathSet:
    """One-shot specular path enumeration (builds a fresh image cache).

    Sweeps over many receivers should construct a :class:`PathEnumerator`
    once and reuse it; the per-transmitter image tables dominate setup.
    """
    return PathEnumerator(scene, tx, max_order).paths_to(rx)
