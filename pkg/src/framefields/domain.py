"""Masked uniform grids from signed distance functions.

Domains are described by an analytic SDF (negative inside); nodes are
classified interior / boundary / exterior, and boundary nodes carry outward
unit normals from the normalized SDF gradient.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

EXTERIOR, INTERIOR, BOUNDARY = 0, 1, 2


def _sdf_circle(x: np.ndarray, radius: float) -> np.ndarray:
    return np.linalg.norm(x, axis=-1) - radius


def _sdf_box(x: np.ndarray, half: np.ndarray) -> np.ndarray:
    d = np.abs(x) - half
    outside = np.linalg.norm(np.maximum(d, 0.0), axis=-1)
    inside = np.minimum(np.max(d, axis=-1), 0.0)
    return outside + inside


def _sdf_polygon(x: np.ndarray, verts: np.ndarray) -> np.ndarray:
    """Exact signed distance to a simple polygon (negative inside)."""
    p = x[..., None, :]  # (..., 1, 2)
    a = verts
    b = np.roll(verts, -1, axis=0)
    e = b - a  # (V, 2)
    w = p - a  # (..., V, 2)
    t = np.clip(np.einsum("...vi,vi->...v", w, e) / np.einsum("vi,vi->v", e, e), 0.0, 1.0)
    proj = w - t[..., None] * e
    d = np.min(np.linalg.norm(proj, axis=-1), axis=-1)
    # even-odd crossing test for the sign
    px, py = x[..., 0], x[..., 1]
    inside = np.zeros(px.shape, dtype=bool)
    for (ax, ay), (bx, by) in zip(a, b):
        cond = (ay > py) != (by > py)
        xi = ax + (py - ay) * (bx - ax) / (by - ay)
        inside ^= cond & (px < xi)
    return np.where(inside, -d, d)


def _triangle_verts(circumradius: float) -> np.ndarray:
    ang = np.pi / 2.0 + 2.0 * np.pi * np.arange(3) / 3.0
    return circumradius * np.stack([np.cos(ang), np.sin(ang)], axis=-1)


class Shape:
    """An analytic SDF with a bounding box and a canonical spec string."""

    def __init__(self, name: str, dim: int, sdf, bounds: np.ndarray, spec: str):
        self.name = name
        self.dim = dim
        self.sdf = sdf
        self.bounds = bounds  # (2, dim): lo, hi
        self.spec = spec


def make_shape(name: str, **params) -> Shape:
    if name == "disk":
        r = float(params.pop("radius", 1.0))
        if params or r <= 0:
            raise ValueError(f"bad disk parameters: radius={r}, extra {params}")
        b = np.array([[-r, -r], [r, r]])
        return Shape("disk", 2, lambda x: _sdf_circle(x, r), b, f"disk radius={r:.17g}")
    if name == "ball":
        r = float(params.pop("radius", 1.0))
        if params or r <= 0:
            raise ValueError(f"bad ball parameters: radius={r}, extra {params}")
        b = np.array([[-r] * 3, [r] * 3])
        return Shape("ball", 3, lambda x: _sdf_circle(x, r), b, f"ball radius={r:.17g}")
    if name == "rectangle":
        wx = float(params.pop("half_width", 1.0))
        wy = float(params.pop("half_height", 1.0))
        if params or wx <= 0 or wy <= 0:
            raise ValueError(f"bad rectangle parameters: {wx}, {wy}, extra {params}")
        half = np.array([wx, wy])
        b = np.array([[-wx, -wy], [wx, wy]])
        return Shape("rectangle", 2, lambda x: _sdf_box(x, half), b,
                     f"rectangle half_width={wx:.17g} half_height={wy:.17g}")
    if name == "triangle_with_hole":
        cr = float(params.pop("circumradius", 1.0))
        hr = float(params.pop("hole_radius", 0.25))
        if params or cr <= 0:
            raise ValueError(f"bad triangle parameters: extra {params}")
        if not 0.0 < hr < 0.5 * cr:  # inradius of the triangle is cr/2
            raise ValueError("hole must sit strictly inside the triangle")
        verts = _triangle_verts(cr)

        def sdf(x):
            return np.maximum(_sdf_polygon(x, verts), -_sdf_circle(x, hr))

        b = np.array([[-cr, -cr], [cr, cr]])
        return Shape("triangle_with_hole", 2, sdf, b,
                     f"triangle_with_hole circumradius={cr:.17g} hole_radius={hr:.17g}")
    if name == "box_minus_ball":
        half = float(params.pop("half_width", 2.0))
        r = float(params.pop("radius", 1.0))
        if params or half <= 0:
            raise ValueError(f"bad box_minus_ball parameters: extra {params}")
        if r >= half:
            raise ValueError("ball must sit strictly inside the box")
        hv = np.array([half] * 3)

        def sdf(x):
            return np.maximum(_sdf_box(x, hv), -_sdf_circle(x, r))

        b = np.array([[-half] * 3, [half] * 3])
        return Shape("box_minus_ball", 3, sdf, b,
                     f"box_minus_ball half_width={half:.17g} radius={r:.17g}")
    raise ValueError(f"unknown shape {name!r}")


def shape_from_spec(spec: str) -> Shape:
    """Inverse of Shape.spec: 'name key=value ...'."""
    parts = spec.split()
    params = {}
    for p in parts[1:]:
        k, _, v = p.partition("=")
        params[k] = float(v)
    return make_shape(parts[0], **params)


@dataclass
class GridDomain:
    dim: int
    h: float
    origin: np.ndarray  # position of node (0, ..., 0)
    shape: tuple  # grid node counts, length dim
    sdf: np.ndarray  # (shape,) signed distance per node
    mask: np.ndarray  # (shape,) EXTERIOR / INTERIOR / BOUNDARY
    normals: np.ndarray  # (shape, dim), outward unit on boundary nodes, else 0
    spec: str = ""

    def coords(self) -> np.ndarray:
        """Node positions, array of shape self.shape + (dim,)."""
        axes = [self.origin[d] + self.h * np.arange(self.shape[d])
                for d in range(self.dim)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    @property
    def inside(self) -> np.ndarray:
        return self.mask != EXTERIOR

    def check(self):
        b = self.mask == BOUNDARY
        if np.any(np.abs(self.sdf[b]) > self.h * (1.0 + 1e-9)):
            raise AssertionError("boundary node further than h from the surface")
        nn = np.linalg.norm(self.normals[b], axis=-1)
        if b.any() and np.max(np.abs(nn - 1.0)) > 1e-10:
            raise AssertionError("boundary normals not unit")


def build_domain(shape, h: float, **params) -> GridDomain:
    """Grid a shape (by name + params, spec string, or Shape) at spacing h."""
    if h <= 0:
        raise ValueError("h must be positive")
    if isinstance(shape, Shape):
        shp = shape
    elif params or " " not in str(shape):
        shp = make_shape(str(shape), **params)
    else:
        shp = shape_from_spec(str(shape))
    lo = np.floor(shp.bounds[0] / h).astype(int) - 2
    hi = np.ceil(shp.bounds[1] / h).astype(int) + 2
    counts = tuple(int(n) for n in (hi - lo + 1))
    origin = lo * h
    axes = [origin[d] + h * np.arange(counts[d]) for d in range(shp.dim)]
    x = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    sdf = shp.sdf(x)
    inside = sdf < 0.0
    # boundary = inside node with an outside face neighbor
    bdry = np.zeros_like(inside)
    for d in range(shp.dim):
        out_hi = np.ones_like(inside)
        sl_in = [slice(None)] * shp.dim
        sl_out = [slice(None)] * shp.dim
        sl_in[d] = slice(0, -1)
        sl_out[d] = slice(1, None)
        out_hi[tuple(sl_in)] = ~inside[tuple(sl_out)]
        bdry |= inside & out_hi
        out_lo = np.ones_like(inside)
        out_lo[tuple(sl_out)] = ~inside[tuple(sl_in)]
        bdry |= inside & out_lo
    mask = np.where(bdry, BOUNDARY, np.where(inside, INTERIOR, EXTERIOR)).astype(np.int8)
    normals = np.zeros(counts + (shp.dim,))
    bidx = np.argwhere(bdry)
    if len(bidx):
        pos = origin + h * bidx
        step = 1e-5
        grad = np.empty((len(bidx), shp.dim))
        for d in range(shp.dim):
            e = np.zeros(shp.dim)
            e[d] = step
            grad[:, d] = (shp.sdf(pos + e) - shp.sdf(pos - e)) / (2.0 * step)
        grad /= np.linalg.norm(grad, axis=-1, keepdims=True)
        normals[tuple(bidx.T)] = grad
    dom = GridDomain(dim=shp.dim, h=h, origin=origin, shape=counts, sdf=sdf,
                     mask=mask, normals=normals, spec=shp.spec)
    dom.check()
    return dom
