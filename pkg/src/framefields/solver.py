"""Ginzburg-Landau gradient flow for tensor fields on masked grids.

Fields store the minimal q-parameters per node; the flow itself runs in
orthonormalized coordinates (q = K c) so the discrete Dirichlet energy and
the potential gradients use the tensor Frobenius metric consistently.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import _kernels, domain as dom, maps, quat, tensors

MU = tensors.MU_BOUNDARY


def stable_dt(h: float, dim: int, eps: float) -> float:
    return 0.2 * min(h * h / (2.0 * dim), eps * eps / 8.0)


def amplitude_bound(gamma: float) -> float:
    """A-priori Frobenius bound on critical points of the weak energy."""
    return max(8.0 / 3.0, (8.0 * gamma / 3.0) ** (1.0 / 3.0))


@dataclass
class SolverConfig:
    dt: float | None = None
    max_iters: int = 200_000
    rel_energy_tol: float = 1e-8
    energy_every: int = 20
    implicit_boundary: bool = True  # weak mode: implicit Euler on penalties
    newton_iters: int = 3
    semi_implicit_laplacian: bool = False
    checkpoint_every: int = 0


@dataclass
class ConvergenceReport:
    iterations: int
    converged: bool
    energy_history: np.ndarray  # rows (iter, dirichlet, bulk, surface)
    max_norm: float  # largest nodal Frobenius norm seen at energy checks
    reason: str = ""


@dataclass
class TensorField:
    domain: dom.GridDomain
    n: int  # target symmetry dimension: 2 (MB) or 3 (tetrahedral)
    values: np.ndarray  # (*grid, m) q-parameters, zero at exterior nodes
    eps: float
    delta1: float = 0.0
    delta2: float = 0.0
    bc_mode: str = "strong"
    bc_values: np.ndarray | None = None  # strong-mode boundary data
    iteration: int = 0

    def __post_init__(self):
        m = tensors.N_COMP[self.n]
        if self.values.shape != self.domain.shape + (m,):
            raise ValueError("values shape does not match domain/symmetry")
        if self.bc_mode not in ("strong", "weak"):
            raise ValueError(f"unknown bc_mode {self.bc_mode!r}")
        if self.bc_mode == "strong":
            if self.bc_values is None:
                raise ValueError("strong mode needs bc_values")
            b = self.domain.mask == dom.BOUNDARY
            self.values[b] = self.bc_values[b]
        elif self.delta1 <= 0 or self.delta2 <= 0:
            raise ValueError("weak mode needs positive delta1, delta2")

    @property
    def gamma(self) -> float:
        return (self.delta2 / self.delta1) ** 2 if self.bc_mode == "weak" else 0.0

    def copy(self) -> "TensorField":
        return TensorField(self.domain, self.n, self.values.copy(), self.eps,
                           self.delta1, self.delta2, self.bc_mode,
                           None if self.bc_values is None else self.bc_values.copy(),
                           self.iteration)


class _Compact:
    """Flattened inside-node arrays + neighbor table for the kernels."""

    def __init__(self, d: dom.GridDomain, n: int):
        inside = d.inside
        self.grid_idx = np.argwhere(inside)  # (Ni, dim)
        flat = np.ravel_multi_index(self.grid_idx.T, d.shape)
        inv = -np.ones(int(np.prod(d.shape)), dtype=np.int64)
        inv[flat] = np.arange(len(flat))
        ni = len(flat)
        self.nbr = -np.ones((ni, 2 * d.dim), dtype=np.int64)
        for axis in range(d.dim):
            for s, off in ((0, 1), (1, -1)):  # slot 2*axis: forward
                shifted = self.grid_idx.copy()
                shifted[:, axis] += off
                ok = (shifted[:, axis] >= 0) & (shifted[:, axis] < d.shape[axis])
                fl = np.ravel_multi_index(shifted[ok].T, d.shape)
                self.nbr[ok, 2 * axis + s] = inv[fl]
        self.bdry = (d.mask[inside] == dom.BOUNDARY)
        nrm = d.normals[inside]
        if nrm.shape[1] < n:  # 2D domain with 3D-target field: in-plane normal
            nrm = np.concatenate(
                [nrm, np.zeros((ni, n - nrm.shape[1]))], axis=1)
        self.normals = np.ascontiguousarray(nrm)
        self.inside = inside
        # kernel precomputes: basis contracted with K, boundary penalty data
        basis = tensors.BASIS_MAT[n]
        k_mat = tensors.Q_FROM_C[n]
        self.cb = np.ascontiguousarray(
            np.einsum("pm,pia->mia", k_mat, basis))
        self.lam2 = tensors.LAMBDA_SQ[n]
        e = self.cb
        k4 = (np.einsum("ria,pib,sjb,tja->prst", e, e, e, e, optimize=True)
              + np.einsum("ria,sib,pjb,tja->prst", e, e, e, e, optimize=True)
              + np.einsum("ria,sib,tjb,pja->prst", e, e, e, e, optimize=True))
        self.k4 = np.ascontiguousarray(0.5 * (k4 + k4.transpose(0, 1, 3, 2)))
        self.bnodes = np.flatnonzero(self.bdry).astype(np.int64)
        self.binv = -np.ones(ni, dtype=np.int64)
        self.binv[self.bnodes] = np.arange(len(self.bnodes))
        bn = self.normals[self.bnodes]  # (Nb, n)
        x = np.einsum("bi,bj->bij", bn, bn).reshape(len(bn), -1)
        a_mat = np.einsum("pia,ba->bip", basis, x)  # (Nb, n, m)
        self.a_c = np.ascontiguousarray(a_mat @ k_mat)
        self.hv = np.ascontiguousarray(
            np.einsum("bip,biq->bpq", self.a_c, self.a_c))
        self.munu = np.ascontiguousarray(MU[n] * bn)

    def gather(self, grid_values: np.ndarray) -> np.ndarray:
        return np.ascontiguousarray(grid_values[self.inside])

    def scatter(self, compact: np.ndarray, grid_values: np.ndarray):
        grid_values[self.inside] = compact


def _kernel_args(f: TensorField, c: _Compact):
    inv_d12 = 1.0 / f.delta1**2 if f.delta1 > 0 else 0.0
    inv_d22 = 1.0 / f.delta2**2 if f.delta2 > 0 else 0.0
    return (c.nbr, c.binv, c.a_c, c.munu, c.cb, c.lam2,
            1.0 / f.domain.h**2, 1.0 / f.eps**2, 1.0 / f.domain.h,
            inv_d12, inv_d22)


def _to_c(f: TensorField, c: _Compact) -> np.ndarray:
    return np.ascontiguousarray(c.gather(f.values) @ tensors.C_FROM_Q[f.n].T)


def _from_c(cvals: np.ndarray, f: TensorField, c: _Compact):
    c.scatter(cvals @ tensors.Q_FROM_C[f.n].T, f.values)


def energy(f: TensorField, compact: _Compact | None = None):
    """(dirichlet, bulk, surface) pieces of the discrete energy."""
    c = compact or _Compact(f.domain, f.n)
    cv = _to_c(f, c)
    args = _kernel_args(f, c)
    per_node = np.empty((cv.shape[0], 4))
    _kernels.energy_parts(cv, *args[:6], per_node)
    h, d = f.domain.h, f.domain.dim
    dirichlet = 0.5 * float(np.sum(per_node[:, 0])) / h**2 * h**d
    bulk = float(np.sum(per_node[:, 1])) / f.eps**2 * h**d
    surface = 0.0
    if f.bc_mode == "weak":
        b = c.bdry
        surface = float(np.sum(per_node[b, 2]) / f.delta1**2
                        + np.sum(per_node[b, 1]) / f.delta2**2) * h**(d - 1)
    return dirichlet, bulk, surface


def discrete_gradient(f: TensorField, compact: _Compact | None = None) -> np.ndarray:
    """Flow-form gradient dE/dA scaled by h^-dim, on the full grid, q coords.

    The descent dynamics is values <- values - dt * discrete_gradient; in
    strong mode the entries at boundary nodes are reported but held fixed by
    step(). The q-coordinate gradient returned here is metric-corrected, i.e.
    finite differences of energy() against q match it through the basis Gram
    matrix (equivalently: it is the plain gradient in orthonormal coords).
    """
    c = compact or _Compact(f.domain, f.n)
    cv = _to_c(f, c)
    out = np.empty_like(cv)
    _kernels.gradient(cv, *_kernel_args(f, c), f.bc_mode == "weak", out)
    full = np.zeros_like(f.values)
    c.scatter(out @ tensors.Q_FROM_C[f.n].T, full)
    return full


def step(f: TensorField, dt: float | None = None,
         implicit_boundary: bool = False, newton_iters: int = 3,
         compact: _Compact | None = None) -> TensorField:
    """One explicit Euler step of the gradient flow (functional)."""
    out = f.copy()
    c = compact or _Compact(f.domain, f.n)
    cv = _to_c(f, c)
    _step_inplace(out, cv, c, dt if dt is not None else
                  stable_dt(f.domain.h, f.domain.dim, f.eps),
                  implicit_boundary, newton_iters)
    _from_c(cv, out, c)
    out.iteration = f.iteration + 1
    if not np.all(np.isfinite(cv)):
        raise FloatingPointError("field diverged: non-finite values after step")
    return out


def _step_inplace(f: TensorField, cv: np.ndarray, c: _Compact, dt: float,
                  implicit_boundary: bool, newton_iters: int):
    args = _kernel_args(f, c)
    strong = f.bc_mode == "strong"
    weak = f.bc_mode == "weak"
    c_new = np.empty_like(cv)
    _kernels.step_explicit(cv, c_new, *args, dt, strong,
                           weak and not implicit_boundary)
    if weak and implicit_boundary:
        h = f.domain.h
        _kernels.boundary_implicit(c_new, c.bnodes, c.a_c, c.hv, c.munu,
                                   c.cb, c.k4, c.lam2,
                                   dt / (h * f.delta1**2),
                                   dt / (h * f.delta2**2), newton_iters)
    cv[:] = c_new


def relax(f: TensorField, config: SolverConfig | None = None,
          callback=None) -> tuple[TensorField, ConvergenceReport]:
    """Run the flow until the energy stalls (see SolverConfig) or max_iters.

    callback(iteration, field) fires every checkpoint_every iterations.
    """
    config = config or SolverConfig()
    out = f.copy()
    c = _Compact(f.domain, f.n)
    cv = _to_c(out, c)
    dt = config.dt if config.dt is not None else stable_dt(
        f.domain.h, f.domain.dim, f.eps)
    lap_solve = None
    if config.semi_implicit_laplacian:
        lap_solve = _laplacian_solver(out, c, dt)
    history = []
    window = max(1, int(np.ceil(100 / config.energy_every)))
    max_norm = 0.0
    converged = False
    reason = "max_iters reached"
    it = 0
    while it < config.max_iters:
        if it % config.energy_every == 0:
            _from_c(cv, out, c)
            e = energy(out, c)
            total = sum(e)
            if not np.isfinite(total):
                raise FloatingPointError(
                    f"field diverged at iteration {out.iteration}")
            max_norm = max(max_norm, float(
                np.sqrt(np.max(np.einsum("ni,ni->n", cv, cv)))))
            history.append((out.iteration, *e))
            if len(history) > window:
                prev = sum(history[-1 - window][1:])
                if prev - total < config.rel_energy_tol * max(abs(total), 1e-30):
                    converged = True
                    reason = "energy stalled"
                    break
        if callback is not None and config.checkpoint_every and \
                it % config.checkpoint_every == 0:
            _from_c(cv, out, c)
            callback(out.iteration, out)
        if lap_solve is None:
            _step_inplace(out, cv, c, dt, config.implicit_boundary,
                          config.newton_iters)
        else:
            _semi_implicit_step(out, cv, c, dt, lap_solve, config)
        out.iteration += 1
        it += 1
    _from_c(cv, out, c)
    report = ConvergenceReport(out.iteration, converged,
                               np.array(history), max_norm, reason)
    return out, report


def _laplacian_solver(f: TensorField, c: _Compact, dt: float):
    """Prefactorized (I + dt/h^2 L) on inside nodes (strong: interior only)."""
    from scipy.sparse import csr_matrix, identity
    from scipy.sparse.linalg import factorized

    ni = c.nbr.shape[0]
    free = np.ones(ni, dtype=bool)
    if f.bc_mode == "strong":
        free = ~c.bdry
    rows, cols, vals = [], [], []
    deg = np.zeros(ni)
    for s in range(c.nbr.shape[1]):
        j = c.nbr[:, s]
        ok = (j >= 0) & free
        deg[ok] += 1.0
        rows.append(np.nonzero(ok)[0])
        cols.append(j[ok])
        vals.append(-np.ones(int(ok.sum())))
    rows.append(np.arange(ni))
    cols.append(np.arange(ni))
    vals.append(deg)
    lap = csr_matrix((np.concatenate(vals),
                      (np.concatenate(rows), np.concatenate(cols))),
                     shape=(ni, ni))
    a = identity(ni, format="csr") + (dt / f.domain.h**2) * lap
    return factorized(a.tocsc()), free


def _semi_implicit_step(f: TensorField, cv: np.ndarray, c: _Compact,
                        dt: float, lap_solve, config: SolverConfig):
    solve, free = lap_solve
    args = _kernel_args(f, c)
    grad = np.empty_like(cv)
    _kernels.gradient(cv, *args, f.bc_mode == "weak", grad)
    # remove the Laplacian part (it is treated implicitly)
    lap = np.zeros_like(cv)
    for s in range(c.nbr.shape[1]):
        j = c.nbr[:, s]
        ok = j >= 0
        lap[ok] += cv[ok] - cv[j[ok]]
    rhs = cv - dt * (grad - lap / f.domain.h**2)
    if f.bc_mode == "strong":
        rhs[c.bdry] = cv[c.bdry]
    for p in range(cv.shape[1]):
        cv[:, p] = solve(rhs[:, p])
    if f.bc_mode == "strong":
        cv[c.bdry] = rhs[c.bdry]


# ---------------------------------------------------------------------------
# boundary data


def boundary_system(nu: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """The 6x7 linear system expressing that nu belongs to the frame of Q."""
    n1, n2, n3 = np.asarray(nu, dtype=float)
    a = np.array([
        [n1, n2, n3, 0, 0, 0, 0],
        [0, n1, 0, n2, n3, 0, 0],
        [-n3, 0, n1, -n3, n2, 0, 0],
        [0, 0, 0, n1, 0, n2, n3],
        [0, -n3, 0, 0, n1, -n3, n2],
        [-n1, -n2, -n3, -n1, 0, -n2, -n3],
    ])
    rhs = (4.0 / 3.0) * np.array(
        [n1 * n1, n1 * n2, n1 * n3, n2 * n2, n2 * n3, n3 * n3])
    rhs[[0, 3, 5]] -= 4.0 / 9.0
    return a, rhs


def rotation_to_normal(nu: np.ndarray) -> np.ndarray:
    """Geodesic rotation taking e3 to nu (identity at nu = e3)."""
    nu = np.asarray(nu, dtype=float)
    c = nu[2]
    if c > 1.0 - 1e-12:
        return np.eye(3)
    if c < -1.0 + 1e-12:
        return np.diag([1.0, -1.0, -1.0])
    axis = np.array([-nu[1], nu[0], 0.0])
    s = np.linalg.norm(axis)
    axis /= s
    k = np.array([[0, -axis[2], axis[1]],
                  [axis[2], 0, -axis[0]],
                  [-axis[1], axis[0], 0]])
    return np.eye(3) + s * k + (1.0 - c) * (k @ k)


def dirichlet_bc_from_normal(nu: np.ndarray, theta: float | None = None) -> np.ndarray:
    """Tetrahedral boundary tensor with nu in the frame.

    theta=None gives the minimum-norm solution of the rank-5 system (not on
    the variety in general); a given theta selects the on-variety member of
    the two-parameter family at tangential phase theta.
    """
    nu = np.asarray(nu, dtype=float)
    if abs(np.linalg.norm(nu) - 1.0) > 1e-9:
        raise ValueError("nu must be a unit vector")
    if theta is None:
        a, rhs = boundary_system(nu)
        q, *_ = np.linalg.lstsq(a, rhs, rcond=None)
        return q
    amp = 4.0 * np.sqrt(2.0) / 9.0
    a = amp * np.cos(3.0 * theta)
    b = amp * np.sin(3.0 * theta)
    q_adapted = np.array([a, b, -4.0 / 9.0, -a, 0.0, -b, -4.0 / 9.0])
    return tensors.rotate(q_adapted, rotation_to_normal(nu), 3)


def mb_bc_from_normal(nu: np.ndarray) -> np.ndarray:
    """MB boundary tensor whose frame contains the unit 2-vector nu."""
    nu = np.asarray(nu, dtype=float)
    th = np.arctan2(nu[..., 1], nu[..., 0])
    return 0.75 * np.stack([np.cos(3.0 * th), np.sin(3.0 * th)], axis=-1)


# ---------------------------------------------------------------------------
# field construction


_GENERATORS = {
    "1": quat.ONE, "-1": -quat.ONE, "i": quat.I, "j": quat.J, "k": quat.K,
    "s": quat.S, "t": quat.T_GEN, "s^-1": quat.qconj(quat.S),
    "s^2": quat.qmul(quat.S, quat.S),
    "s^-2": quat.qconj(quat.qmul(quat.S, quat.S)),
}


def parse_generator(label: str) -> np.ndarray:
    if label not in _GENERATORS:
        raise ValueError(f"unknown 2T generator label {label!r}")
    return _GENERATORS[label]


def _domain_radius(d: dom.GridDomain) -> float:
    parts = dict(p.split("=") for p in d.spec.split()[1:])
    if "radius" not in parts:
        raise ValueError(f"shape {d.spec!r} has no radius")
    return float(parts["radius"])


def seed_values(d: dom.GridDomain, n: int, spec: str, **kw) -> np.ndarray:
    """Nodewise initial values for a seed spec.

    Specs: zero | analytic_escape_map | quaternion_boundary (kw: defects,
    list of (center complex, alpha label, beta label); kw rho) |
    frame_constant (kw: rotation 3x3 or theta for n=2).
    """
    m = tensors.N_COMP[n]
    vals = np.zeros(d.shape + (m,))
    inside = d.inside
    x = d.coords()[inside]
    if spec == "zero":
        return vals
    if spec == "analytic_escape_map":
        if n != 3:
            raise ValueError("escape maps are tetrahedral-valued")
        r0 = _domain_radius(d)
        if d.dim == 2:
            r = np.minimum(np.linalg.norm(x, axis=-1) / r0, 1.0)
            th = np.arctan2(x[:, 1], x[:, 0])
            vals[inside] = maps.disk_escape_tensor(r, th)
        else:
            y = x / r0
            nrm = np.linalg.norm(y, axis=-1, keepdims=True)
            y = y / np.maximum(nrm, 1.0)
            vals[inside] = maps.ball_escape_tensor(y)
        return vals
    if spec == "quaternion_boundary":
        if n != 3 or d.dim != 2:
            raise ValueError("quaternion seeding is for 3D-target disk fields")
        r0 = _domain_radius(d)
        defects = [(complex(a), parse_generator(al), parse_generator(be))
                   for a, al, be in kw.get("defects", [])]
        z = (x[:, 0] + 1j * x[:, 1]) / r0
        z = z / np.maximum(np.abs(z), 1.0)
        q = quat.multi_defect_field(defects, z, rho=kw.get("rho", 0.25),
                                    clamp=True)
        vals[inside] = quat.tetra_tensor(q)
        return vals
    if spec == "frame_constant":
        if n == 3:
            rot = np.asarray(kw.get("rotation", np.eye(3)), dtype=float)
            vals[inside] = quat.tetra_tensor(
                quat.quaternions_from_rotations(rot)[0])
        else:
            th = float(kw.get("theta", 0.0))
            vals[inside] = 0.75 * np.array([np.cos(3 * th), np.sin(3 * th)])
        return vals
    raise ValueError(f"unknown seed spec {spec!r}")


def strong_bc_values(d: dom.GridDomain, n: int, bc_spec: str = "normal_aligned",
                     **kw) -> np.ndarray:
    """Dirichlet data at boundary nodes (zero elsewhere).

    bc_spec 'normal_aligned': MB (n=2) data whose frame contains the node
    normal, or tetrahedral data at tangential phase theta (kw, default 0).
    Any seed spec is also accepted and sampled at the boundary nodes.
    """
    m = tensors.N_COMP[n]
    vals = np.zeros(d.shape + (m,))
    b = d.mask == dom.BOUNDARY
    if bc_spec == "normal_aligned":
        if n == 2:
            vals[b] = mb_bc_from_normal(d.normals[b])
        else:
            th = float(kw.get("theta", 0.0))
            nrm = d.normals[b]
            if nrm.shape[1] == 2:
                nrm = np.concatenate([nrm, np.zeros((len(nrm), 1))], axis=1)
            vals[b] = np.array([dirichlet_bc_from_normal(v, th) for v in nrm])
        return vals
    seeded = seed_values(d, n, bc_spec, **kw)
    vals[b] = seeded[b]
    return vals


def make_field(d: dom.GridDomain, n: int, eps: float, init: str = "zero",
               bc_mode: str = "strong", bc_spec: str = "normal_aligned",
               delta1: float = 0.0, delta2: float = 0.0, **kw) -> TensorField:
    vals = seed_values(d, n, init, **kw)
    bc = strong_bc_values(d, n, bc_spec, **kw) if bc_mode == "strong" else None
    return TensorField(d, n, vals, eps, delta1, delta2, bc_mode, bc)
