"""Field import/export: CSV, legacy VTK, binary checkpoints, energy history.

CSV layout: one row per inside (interior or boundary) node, columns
x,y[,z],q1..qm,W,flag with flag = 1 where W exceeds the singularity
threshold, else 0. Floats are printed with repr-exact %.17g so an
export/import round trip reproduces the values bitwise.

Checkpoint layout (fixed-width, little-endian):
  offset  size  field
  0       8     magic b"TFCHKPT1"
  8       4     uint32 dim (2 or 3)
  12      4     uint32 n (target symmetry: 2 MB, 3 tetrahedral)
  16      8     uint64 iteration
  24      8     float64 h
  32      8     float64 eps
  40      8     float64 delta1
  48      8     float64 delta2
  56      4     uint32 bc_mode (0 strong, 1 weak)
  60      4     uint32 reserved (0)
  64      192   shape spec string, UTF-8, NUL padded
  256     -     float64 node values, inside nodes in grid scan order,
                m components per node
The grid (and hence the node order) is rebuilt deterministically from the
shape spec and h, so only inside-node values are stored. Strong-mode
boundary data is recovered from the stored boundary node values.
"""

from __future__ import annotations

import struct

import numpy as np

from . import analysis, domain as dom, recovery, solver, tensors

_MAGIC = b"TFCHKPT1"
_SPEC_BYTES = 192
_HEADER_BYTES = 256


def _fmt(x: float) -> str:
    return "%.17g" % x


def write_field_csv(f: solver.TensorField, path, w_threshold: float | None = None):
    d = f.domain
    m = tensors.N_COMP[f.n]
    thr = analysis.default_threshold(f.n) if w_threshold is None else w_threshold
    coords = d.coords()[d.inside]
    q = f.values[d.inside]
    w = tensors.potential_w(q, f.n)
    flag = (w > thr).astype(int)
    axes = ["x", "y", "z"][: d.dim]
    header = axes + [f"q{i + 1}" for i in range(m)] + ["W", "flag"]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(len(q)):
            row = ([_fmt(v) for v in coords[i]]
                   + [_fmt(v) for v in q[i]]
                   + [_fmt(w[i]), str(flag[i])])
            fh.write(",".join(row) + "\n")


def read_field_csv(path):
    """Returns (coords (N,dim), q (N,m), w (N,), flag (N,))."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    dim = sum(1 for c in header if c in ("x", "y", "z"))
    m = sum(1 for c in header if c.startswith("q"))
    data = np.array([[float(v) for v in r] for r in rows])
    return (data[:, :dim], data[:, dim:dim + m],
            data[:, dim + m], data[:, dim + m + 1].astype(int))


def field_frames(f: solver.TensorField, w_threshold: float | None = None):
    """Per-node recovered frame vectors, zero-filled at singular nodes.

    Returns (vectors (*grid, k, 3), ok (*grid,) bool) where k = 4 (n=3) or
    3 (n=2); 2D MB vectors are padded with a zero third component.
    """
    d = f.domain
    thr = analysis.default_threshold(f.n) if w_threshold is None else w_threshold
    q = f.values[d.inside]
    w = tensors.potential_w(q, f.n)
    ok = w < thr
    k = 4 if f.n == 3 else 3
    vecs = np.zeros((len(q), k, 3))
    if f.n == 3:
        if np.any(ok):
            idx = np.flatnonzero(ok)
            try:
                frames, _, _ = recovery.recover_tetra_batch(q[idx], tol=np.inf)
                vecs[idx] = frames
            except recovery.RecoveryError:
                # transient fields can sit below the W threshold yet too far
                # from the variety to recover; drop those nodes individually
                for i in idx:
                    try:
                        fr, _, _ = recovery.recover_tetra_batch(
                            q[i][None], tol=np.inf)
                        vecs[i] = fr[0]
                    except recovery.RecoveryError:
                        ok[i] = False
    else:
        th = np.arctan2(q[:, 1], q[:, 0]) / 3.0
        ang = th[:, None] + 2.0 * np.pi * np.arange(3)[None, :] / 3.0
        vecs[:, :, 0] = np.cos(ang)
        vecs[:, :, 1] = np.sin(ang)
        vecs[~ok] = 0.0
    full = np.zeros(d.shape + (k, 3))
    full[d.inside] = vecs
    ok_full = np.zeros(d.shape, dtype=bool)
    ok_full[d.inside] = ok
    return full, ok_full


def write_vtk(f: solver.TensorField, path, w_threshold: float | None = None,
              frames: bool = True):
    """Legacy ASCII VTK STRUCTURED_POINTS export over the full grid.

    Point data: scalar W (zero at exterior nodes) and, if frames is true,
    one vector field per recovered frame vector (zero at exterior or
    singular nodes).
    """
    d = f.domain
    counts = d.shape + (1,) * (3 - d.dim)
    origin = tuple(d.origin) + (0.0,) * (3 - d.dim)
    w = np.zeros(d.shape)
    w[d.inside] = tensors.potential_w(f.values[d.inside], f.n)

    def scan(a):
        # VTK point order: x fastest, then y, then z
        full = a.reshape(counts + a.shape[d.dim:])
        return np.moveaxis(full, (0, 1, 2), (2, 1, 0)).reshape(
            (-1,) + a.shape[d.dim:])

    lines = ["# vtk DataFile Version 3.0",
             f"tensor field n={f.n} eps={_fmt(f.eps)} {d.spec}",
             "ASCII",
             "DATASET STRUCTURED_POINTS",
             f"DIMENSIONS {counts[0]} {counts[1]} {counts[2]}",
             f"ORIGIN {_fmt(origin[0])} {_fmt(origin[1])} {_fmt(origin[2])}",
             f"SPACING {_fmt(d.h)} {_fmt(d.h)} {_fmt(d.h)}",
             f"POINT_DATA {int(np.prod(counts))}",
             "SCALARS W double 1",
             "LOOKUP_TABLE default"]
    lines += [_fmt(v) for v in scan(w)]
    if frames:
        vecs, _ = field_frames(f, w_threshold)
        for k in range(vecs.shape[d.dim]):
            lines.append(f"VECTORS frame{k + 1} double")
            lines += [" ".join(_fmt(c) for c in v) for v in scan(vecs[..., k, :])]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_history_csv(report: solver.ConvergenceReport, path):
    with open(path, "w") as fh:
        fh.write("iteration,dirichlet,bulk,surface\n")
        for row in report.energy_history:
            fh.write(f"{int(row[0])},{_fmt(row[1])},{_fmt(row[2])},"
                     f"{_fmt(row[3])}\n")


def write_checkpoint(f: solver.TensorField, path):
    d = f.domain
    if not d.spec:
        raise ValueError("checkpointing needs a domain with a shape spec")
    spec = d.spec.encode("utf-8")
    if len(spec) > _SPEC_BYTES:
        raise ValueError("shape spec too long for checkpoint header")
    header = (_MAGIC
              + struct.pack("<IIQddddII", d.dim, f.n, f.iteration, d.h,
                            f.eps, f.delta1, f.delta2,
                            0 if f.bc_mode == "strong" else 1, 0)
              + spec.ljust(_SPEC_BYTES, b"\x00"))
    assert len(header) == _HEADER_BYTES
    body = np.ascontiguousarray(f.values[d.inside], dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body.tobytes())


def read_checkpoint(path) -> solver.TensorField:
    with open(path, "rb") as fh:
        header = fh.read(_HEADER_BYTES)
        body = fh.read()
    if header[:8] != _MAGIC:
        raise ValueError(f"{path}: not a checkpoint file")
    dim, n, iteration, h, eps, d1, d2, bc, _ = struct.unpack(
        "<IIQddddII", header[8:64])
    spec = header[64:_HEADER_BYTES].rstrip(b"\x00").decode("utf-8")
    d = dom.build_domain(spec, h)
    if d.dim != dim:
        raise ValueError(f"{path}: header dim does not match shape spec")
    m = tensors.N_COMP[n]
    vals = np.frombuffer(body, dtype="<f8").astype(float)
    ni = int(d.inside.sum())
    if vals.size != ni * m:
        raise ValueError(f"{path}: node payload size mismatch")
    values = np.zeros(d.shape + (m,))
    values[d.inside] = vals.reshape(ni, m)
    bc_mode = "strong" if bc == 0 else "weak"
    bc_values = None
    if bc_mode == "strong":
        bc_values = np.zeros_like(values)
        b = d.mask == dom.BOUNDARY
        bc_values[b] = values[b]
    f = solver.TensorField(d, int(n), values, eps, d1, d2, bc_mode, bc_values)
    f.iteration = int(iteration)
    return f
