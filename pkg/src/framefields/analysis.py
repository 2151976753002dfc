"""Post-processing: singular sets, winding indices, surface index sums,
loop homotopy reports, and the bent-core quartic potential analyzer."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import ndimage, optimize

from . import domain as dom, quat, solver, tensors

W_ZERO = {2: 2.0 * (9.0 / 8.0) ** 2, 3: 1024.0 / 243.0}  # W at Q = 0


def default_threshold(n: int) -> float:
    return 0.5 * W_ZERO[n]


@dataclass
class Cluster:
    cells: np.ndarray  # (k, dim) grid indices
    centroid: np.ndarray  # physical coordinates
    interior: bool  # touches no boundary node
    winding: float | None = None  # MB fields
    loop_class: str | None = None  # tetrahedral-valued 2D fields


@dataclass
class SingularSetReport:
    threshold: float
    n_cells: int
    clusters: list
    boundary_index_sum: float | None = None


def singular_cells(f: solver.TensorField, w_threshold: float | None = None,
                   interior_only: bool = False) -> SingularSetReport:
    """Cells with W above threshold, clustered by grid adjacency."""
    thr = default_threshold(f.n) if w_threshold is None else w_threshold
    w = tensors.potential_w(f.values, f.n)
    flagged = (w > thr) & f.domain.inside
    structure = np.ones((3,) * f.domain.dim, dtype=bool)
    lab, count = ndimage.label(flagged, structure=structure)
    clusters = []
    coords = f.domain.coords()
    # interior = not touching (within one cell of) the domain boundary;
    # corner artifacts of discontinuous Dirichlet data are boundary clusters
    near_bdry = ndimage.binary_dilation(
        f.domain.mask != dom.INTERIOR, structure=structure)
    for k in range(1, count + 1):
        cells = np.argwhere(lab == k)
        cent = coords[tuple(cells.T)].mean(axis=0)
        interior = not bool(np.any(near_bdry[tuple(cells.T)]))
        clusters.append(Cluster(cells=cells, centroid=cent, interior=interior))
    if interior_only:
        clusters = [c for c in clusters if c.interior]
    return SingularSetReport(threshold=thr, n_cells=int(flagged.sum()),
                             clusters=clusters)


def grid_ring(center: np.ndarray, radius: int) -> np.ndarray:
    """Ordered (counterclockwise) square ring of grid cells around center."""
    ci, cj = int(round(center[0])), int(round(center[1]))
    r = int(radius)
    ring = []
    for j in range(cj - r, cj + r):  # bottom edge, +i side handled below
        ring.append((ci + r, j))
    for i in range(ci + r, ci - r, -1):
        ring.append((i, cj + r))
    for j in range(cj + r, cj - r, -1):
        ring.append((ci - r, j))
    for i in range(ci - r, ci + r):
        ring.append((i, cj - r))
    return np.array(ring)


def circle_loop(d: dom.GridDomain, center: np.ndarray, radius: float,
                samples: int = 256) -> np.ndarray:
    """Closed loop of nearest grid nodes along a circle (2D domains)."""
    t = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
    pts = np.asarray(center) + radius * np.stack([np.cos(t), np.sin(t)], axis=-1)
    cells = np.rint((pts - d.origin) / d.h).astype(int)
    if np.any(cells < 0) or np.any(cells >= np.array(d.shape)) or \
            not d.inside[tuple(cells.T)].all():
        raise ValueError("circle loop leaves the domain")
    return cells


def _ring_in_domain(d: dom.GridDomain, cells: np.ndarray, radius: int,
                    avoid: np.ndarray) -> np.ndarray:
    """A ring around a cluster that stays inside and avoids flagged cells."""
    center = cells.mean(axis=0)
    half_extent = int(np.max(cells.max(axis=0) - cells.min(axis=0)) // 2)
    candidates = sorted(range(half_extent + 1, radius + 7),
                        key=lambda r: abs(r - radius))
    for r in candidates:
        ring = grid_ring(center, r)
        ok = np.all((ring >= 0) & (ring < np.array(d.shape)), axis=1)
        if not ok.all():
            continue
        if not d.inside[tuple(ring.T)].all():
            continue
        if avoid[tuple(ring.T)].any():
            continue
        return ring
    raise ValueError("no valid loop found around the cluster")


def winding_index_2d(f: solver.TensorField, loop: np.ndarray) -> float:
    """Index (in thirds) of an MB field along an ordered closed node loop."""
    if f.n != 2:
        raise ValueError("winding indices are defined for MB fields")
    loop = np.asarray(loop)
    q = f.values[tuple(loop.T)]
    norms = np.linalg.norm(q, axis=1)
    if np.min(norms) < 1e-12:
        raise ValueError("loop passes through a vanishing tensor")
    phase = np.arctan2(q[:, 1], q[:, 0])
    closed = np.concatenate([phase, phase[:1]])
    steps = np.diff(closed)
    steps = (steps + np.pi) % (2.0 * np.pi) - np.pi
    if np.max(np.abs(steps)) > np.pi - 1e-9:
        raise ValueError("phase step too large; refine the loop")
    total = float(np.sum(steps)) / (2.0 * np.pi)
    # total is the winding of the 3-fold phase; index = total / 3
    idx3 = round(total)
    if abs(total - idx3) > 0.1:
        raise ValueError(f"winding {total:.3f} does not snap to an integer")
    return idx3 / 3.0


def cluster_windings(f: solver.TensorField, report: SingularSetReport,
                     ring_radius: int = 3,
                     class_tol: float = 1e-2) -> SingularSetReport:
    """Attach winding indices (MB) or loop classes (tetrahedral) per cluster.

    class_tol is the variety-membership tolerance for loop classification;
    broad tetrahedral cores need a looser value (the ring sits in the tail
    of the core) together with a larger ring_radius.
    """
    w = tensors.potential_w(f.values, f.n)
    avoid = (w > report.threshold) & f.domain.inside
    for cl in report.clusters:
        ring = _ring_in_domain(f.domain, cl.cells, ring_radius, avoid)
        if f.n == 2:
            cl.winding = winding_index_2d(f, ring)
        else:
            cl.loop_class = quat.classify_loop(f.values[tuple(ring.T)],
                                               tol=class_tol)
    return report


def loop_tensors(f: solver.TensorField, loop: np.ndarray) -> np.ndarray:
    return f.values[tuple(np.asarray(loop).T)]


# ---------------------------------------------------------------------------
# surface reduction on a sphere boundary (3D weak-BC runs)


def _sphere_loop_points(center_dir: np.ndarray, ang_radius: float,
                        samples: int) -> np.ndarray:
    """Circle of directions at angular distance ang_radius around center_dir,
    ordered counterclockwise as seen from outside along center_dir."""
    r0 = solver.rotation_to_normal(center_dir)
    t = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
    circ = np.stack([np.sin(ang_radius) * np.cos(t),
                     np.sin(ang_radius) * np.sin(t),
                     np.full_like(t, np.cos(ang_radius))], axis=-1)
    return circ @ r0.T


def tangential_phase(q: np.ndarray, nu: np.ndarray) -> float:
    """3-fold tangential phase of a near-variety tensor in the nu-adapted
    frame (the atan2 of the (a, b) pair of the boundary-aligned form); it is
    three times the angle of the in-frame tangent directions."""
    r0 = solver.rotation_to_normal(np.asarray(nu, dtype=float))
    qa = tensors.rotate(np.asarray(q, dtype=float), r0.T, 3)
    return float(np.arctan2(qa[1], qa[0]))


@dataclass
class SurfaceReport:
    clusters: list  # Cluster with .winding = surface index (thirds)
    index_sum: float
    target: float  # 2 - 2g


def surface_mb_reduction(f: solver.TensorField, w_threshold: float | None = None,
                         genus: int = 0, ring_cells: float = 3.0,
                         samples: int = 96,
                         collar_cells: float = 3.0) -> SurfaceReport:
    """Surface singularities of the tangential MB reduction on a sphere
    boundary and their (1/3-integer) indices; the sum targets 2 - 2g.

    Singular patches are detected in a collar of depth collar_cells grid
    cells below the boundary: with weak (penalized) alignment the defect
    endpoints detach from the outermost node layer and sit a cell or two
    inside, leaving the shell itself on-variety.
    """
    d = f.domain
    if d.dim != 3 or f.n != 3:
        raise ValueError("surface reduction needs a 3D tetrahedral field")
    radius = solver._domain_radius(d)
    thr = default_threshold(3) if w_threshold is None else w_threshold
    collar = d.inside & (d.sdf > -(collar_cells + 0.5) * d.h)
    w = tensors.potential_w(f.values, 3)
    flagged = collar & (w > thr)
    lab, count = ndimage.label(flagged, structure=np.ones((3, 3, 3), dtype=bool))
    coords = d.coords()
    # sample the field at the nearest inside node of each requested point
    inside_idx = np.argwhere(d.inside)
    from scipy.spatial import cKDTree
    tree = cKDTree(coords[d.inside])
    vals_inside = f.values[d.inside]

    clusters = []
    total = 0.0
    for k in range(1, count + 1):
        cells = np.argwhere(lab == k)
        cent = coords[tuple(cells.T)].mean(axis=0)
        nu0 = cent / np.linalg.norm(cent)
        spread = 0.0
        if len(cells) > 1:
            pts = coords[tuple(cells.T)]
            spread = np.max(np.linalg.norm(pts - cent, axis=1))
        ang = (spread + ring_cells * d.h) / radius
        dirs = _sphere_loop_points(nu0, ang, samples)
        _, nearest = tree.query(dirs * radius)
        q_loop = vals_inside[nearest]
        phases = np.unwrap([tangential_phase(q, p)
                            for q, p in zip(q_loop, dirs)])
        closing = tangential_phase(q_loop[0], dirs[0]) - phases[-1]
        closing = (closing + np.pi) % (2.0 * np.pi) - np.pi
        winding = (phases[-1] - phases[0] + closing) / (2.0 * np.pi)
        snapped = round(winding)
        if abs(winding - snapped) > 0.25:
            raise ValueError(
                f"surface winding {winding:.3f} does not snap to an integer")
        idx = snapped / 3.0
        clusters.append(Cluster(cells=cells, centroid=cent, interior=False,
                                winding=idx))
        total += idx
    return SurfaceReport(clusters=clusters, index_sum=total,
                         target=2.0 - 2.0 * genus)


# ---------------------------------------------------------------------------
# triple junction report (descriptive)


@dataclass
class JunctionReport:
    clusters: list
    adjacency: np.ndarray  # cluster-cluster touching (dilated) matrix
    degrees: np.ndarray


def junction_graph(f: solver.TensorField, w_threshold: float | None = None) -> JunctionReport:
    """Descriptive singular-voxel graph: clusters, adjacency, degrees."""
    rep = singular_cells(f, w_threshold)
    n = len(rep.clusters)
    adj = np.zeros((n, n), dtype=bool)
    boxes = []
    for cl in rep.clusters:
        boxes.append((cl.cells.min(axis=0), cl.cells.max(axis=0)))
    for i in range(n):
        for j in range(i + 1, n):
            gap = np.maximum(boxes[i][0] - boxes[j][1],
                             boxes[j][0] - boxes[i][1])
            adj[i, j] = adj[j, i] = bool(np.all(gap <= 2))
    return JunctionReport(clusters=rep.clusters, adjacency=adj,
                          degrees=adj.sum(axis=0))


# ---------------------------------------------------------------------------
# bent-core potential (quartic in the block norms)


@dataclass
class BentCoreReport:
    alpha: float
    beta: float
    minimizer_type: str  # zero | tetrahedral | mb | sphere | unbounded
    lam: np.ndarray | None
    omega: float | None
    numeric_lam: np.ndarray | None = None
    numeric_omega: float | None = None


def bentcore_omega(lam, alpha: float, beta: float) -> float:
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValueError("block norms must be nonnegative")
    s = float(np.sum(lam))
    return 0.25 * s * s - 0.5 * alpha * s + 0.25 * beta * float(np.sum(lam**2))


def _feasible_constraints():
    def g(i, j, k):
        return lambda lam: (lam[k] * (lam[i] + lam[j] - 2.0 * lam[k] / 3.0)
                            - 0.25 * (lam[i] - lam[j]) ** 2)
    return [g(0, 1, 2), g(1, 2, 0), g(0, 2, 1)]


def _numeric_minimize(alpha: float, beta: float, n_starts: int = 6):
    """Minimize the quartic over actual tensors q in R^7 (multistart BFGS).

    The cross terms <Q_i, Q_j> vanish in the eigenbasis of the gram matrix,
    so this equals minimizing omega over the *realizable* block norms — a
    strictly smaller set than the three-inequality region, which admits
    spurious lower values as beta approaches -29/15.
    """
    basis = tensors.BASIS_MAT[3]

    def fun_jac(q):
        m = np.einsum("m,mia->ia", q, basis)
        g = m @ m.T
        s = np.trace(g)
        val = 0.25 * s * s - 0.5 * alpha * s + 0.25 * beta * np.sum(g * g)
        gm = (s - alpha) * m + beta * (g @ m)
        return val, np.einsum("ia,mia->m", gm, basis)

    rng = np.random.default_rng(20240517)
    scale = np.sqrt(max(abs(alpha), 1.0))
    best = None
    for k in range(n_starts):
        q0 = rng.normal(size=7) * scale
        res = optimize.minimize(fun_jac, q0, jac=True, method="BFGS",
                                options={"maxiter": 2000, "gtol": 1e-12})
        if best is None or res.fun < best.fun:
            best = res
    m = np.einsum("m,mia->ia", best.x, basis)
    lam = np.sort(np.linalg.eigvalsh(m @ m.T))[::-1]
    lam = np.maximum(lam, 0.0)
    return lam, float(best.fun)


def bentcore_minimize(alpha: float, beta: float, numeric: bool = True) -> BentCoreReport:
    """Global minimizer of the bent-core quartic over feasible block norms.

    Classification: tetrahedral for beta > 0, rank-2 (MB) for
    -29/15 < beta < 0 (alpha > 0), sphere for beta = 0 with alpha > 0,
    zero when alpha <= 0 (beta > -29/15), unbounded for beta <= -29/15.
    """
    if beta <= -29.0 / 15.0:
        return BentCoreReport(alpha, beta, "unbounded", None, None)
    if alpha <= 0.0:
        return BentCoreReport(alpha, beta, "zero", np.zeros(3), 0.0)
    if beta == 0.0:
        lam = np.full(3, alpha / 3.0)
        rep = BentCoreReport(alpha, beta, "sphere", lam, -alpha * alpha / 4.0)
    elif beta > 0.0:
        lam = np.full(3, alpha / (3.0 + beta))
        rep = BentCoreReport(alpha, beta, "tetrahedral", lam,
                             -3.0 * alpha * alpha / (4.0 * (3.0 + beta)))
    else:
        lam = np.array([alpha / (2.0 + beta), alpha / (2.0 + beta), 0.0])
        rep = BentCoreReport(alpha, beta, "mb", lam,
                             -alpha * alpha / (2.0 * (2.0 + beta)))
    if numeric:
        rep.numeric_lam, rep.numeric_omega = _numeric_minimize(alpha, beta)
    return rep
