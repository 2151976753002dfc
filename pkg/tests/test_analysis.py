import numpy as np
import pytest

from framefields import analysis, domain, solver, tensors


def _mb_defect_field(w, h=1 / 16, core=0.2):
    """Synthetic MB field with a single index-w defect at the origin."""
    d = domain.build_domain("disk", h, radius=1.0)
    x = d.coords()
    r = np.linalg.norm(x, axis=-1)
    th = np.arctan2(x[..., 1], x[..., 0])
    amp = 0.75 * np.minimum(r / core, 1.0)
    phase = 3.0 * w * th
    vals = amp[..., None] * np.stack([np.cos(phase), np.sin(phase)], axis=-1)
    vals[~d.inside] = 0.0
    return solver.TensorField(d, 2, vals, eps=0.1, bc_mode="strong",
                              bc_values=vals.copy())


@pytest.mark.parametrize("w", [1 / 3, -1 / 3, 2 / 3])
def test_synthetic_defect_winding(w):
    f = _mb_defect_field(w)
    rep = analysis.singular_cells(f)
    inner = [c for c in rep.clusters if c.interior]
    assert len(inner) == 1
    assert np.linalg.norm(inner[0].centroid) < 0.1
    analysis.cluster_windings(f, rep)
    assert inner[0].winding == pytest.approx(w, abs=1e-12)


def test_constant_field_has_no_singular_cells():
    d = domain.build_domain("disk", 1 / 16, radius=1.0)
    f = solver.make_field(d, 2, eps=0.1, init="frame_constant",
                          bc_spec="frame_constant", theta=0.2)
    rep = analysis.singular_cells(f)
    assert rep.n_cells == 0
    assert rep.clusters == []


def test_threshold_controls_flagging():
    f = _mb_defect_field(1 / 3)
    w = tensors.potential_w(f.values, 2)
    thr = 0.1
    rep = analysis.singular_cells(f, w_threshold=thr)
    assert rep.n_cells == int(np.count_nonzero((w > thr) & f.domain.inside))
    assert rep.threshold == thr
    # default threshold is half the value at zero
    assert analysis.default_threshold(2) == pytest.approx(
        0.5 * 2.0 * (9 / 8) ** 2)
    assert analysis.default_threshold(3) == pytest.approx(512 / 243)


def test_circle_loop_and_winding_errors():
    f = _mb_defect_field(1 / 3)
    loop = analysis.circle_loop(f.domain, np.zeros(2), 0.5)
    assert analysis.winding_index_2d(f, loop) == pytest.approx(1 / 3)
    with pytest.raises(ValueError):
        analysis.circle_loop(f.domain, np.zeros(2), 2.0)
    # a loop through the vanishing core is rejected
    bad = np.array([[c, c] for c in range(3)]) + \
        np.rint(-f.domain.origin / f.domain.h).astype(int)
    with pytest.raises(ValueError):
        analysis.winding_index_2d(f, np.atleast_2d(bad[0]))


def test_tangential_phase_reads_back_theta():
    rng = np.random.default_rng(2)
    for _ in range(5):
        nu = rng.standard_normal(3)
        nu /= np.linalg.norm(nu)
        th = rng.uniform(-np.pi / 3, np.pi / 3)
        q = solver.dirichlet_bc_from_normal(nu, th)
        ph = analysis.tangential_phase(q, nu)
        assert np.mod(ph - 3 * th + np.pi, 2 * np.pi) - np.pi == \
            pytest.approx(0.0, abs=1e-10)


def _damped_ball_escape_field(h=1 / 16):
    """Ball escape-map field with the amplitude killed near the north pole,
    so the single boundary singularity shows up as a W-cluster."""
    d = domain.build_domain("ball", h, radius=1.0)
    vals = solver.seed_values(d, 3, "analytic_escape_map")
    x = d.coords()
    dist = np.linalg.norm(x - np.array([0.0, 0.0, 1.0]), axis=-1)
    vals *= np.minimum(dist / 0.35, 1.0)[..., None]
    return solver.TensorField(d, 3, vals, eps=0.1, delta1=0.05, delta2=0.05,
                              bc_mode="weak")


def test_surface_reduction_index_sum_is_two():
    f = _damped_ball_escape_field()
    surf = analysis.surface_mb_reduction(f)
    assert len(surf.clusters) == 1
    cl = surf.clusters[0]
    # the cluster sits at the north pole and carries the whole index 2
    assert cl.centroid[2] > 0.8
    assert cl.winding == pytest.approx(2.0)
    assert surf.index_sum == pytest.approx(surf.target) == pytest.approx(2.0)


def test_surface_reduction_rejects_2d():
    f = _mb_defect_field(1 / 3)
    with pytest.raises(ValueError):
        analysis.surface_mb_reduction(f)


def test_junction_graph_shapes():
    f = _damped_ball_escape_field()
    rep = analysis.junction_graph(f)
    n = len(rep.clusters)
    assert rep.adjacency.shape == (n, n)
    assert rep.degrees.shape == (n,)
    assert not rep.adjacency.diagonal().any()


def test_bentcore_closed_forms():
    rep = analysis.bentcore_minimize(1.0, 1.0, numeric=False)
    assert rep.minimizer_type == "tetrahedral"
    assert rep.omega == pytest.approx(-3.0 / 16.0)
    assert np.allclose(rep.lam, 0.25)
    rep = analysis.bentcore_minimize(1.0, -1.0, numeric=False)
    assert rep.minimizer_type == "mb"
    assert rep.omega == pytest.approx(-0.5)
    assert np.allclose(rep.lam, [1.0, 1.0, 0.0])
    rep = analysis.bentcore_minimize(1.0, 0.0, numeric=False)
    assert rep.minimizer_type == "sphere"
    assert rep.omega == pytest.approx(-0.25)
    rep = analysis.bentcore_minimize(-1.0, 1.0, numeric=False)
    assert rep.minimizer_type == "zero"
    assert rep.omega == 0.0
    rep = analysis.bentcore_minimize(1.0, -2.0, numeric=False)
    assert rep.minimizer_type == "unbounded"
    assert rep.omega is None


def test_bentcore_numeric_agrees():
    for alpha, beta in [(1.0, 0.7), (0.8, -0.9), (1.5, 2.0)]:
        rep = analysis.bentcore_minimize(alpha, beta)
        assert rep.numeric_omega == pytest.approx(rep.omega, rel=1e-6)
        assert np.allclose(np.sort(rep.numeric_lam), np.sort(rep.lam),
                           atol=1e-4)


def test_bentcore_omega_function():
    assert analysis.bentcore_omega([1, 1, 1], 2.0, 1.0) == pytest.approx(
        0.25 * 9 - 3.0 + 0.75)
    with pytest.raises(ValueError):
        analysis.bentcore_omega([-1, 0, 0], 1.0, 1.0)
