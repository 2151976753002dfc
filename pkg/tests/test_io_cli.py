import os
from pathlib import Path

import numpy as np
import pytest

from framefields import cli, domain as dom, io, solver, tensors

DATA = Path(__file__).parent / "data"


def _tiny_field():
    """Fixed 2x2 all-interior grid used by the golden-file test."""
    d = dom.GridDomain(dim=2, h=0.5, origin=np.zeros(2), shape=(2, 2),
                       sdf=-np.ones((2, 2)),
                       mask=np.full((2, 2), dom.INTERIOR, dtype=np.int8),
                       normals=np.zeros((2, 2, 2)), spec="")
    vals = np.array([[[0.1, 0.2], [1 / 3, -0.75]],
                     [[np.pi, 1e-17], [-0.7, 123456789.123456789]]])
    return solver.TensorField(d, 2, vals, eps=0.1, bc_mode="strong",
                              bc_values=np.zeros_like(vals))


def test_csv_matches_golden_file(tmp_path):
    f = _tiny_field()
    out = tmp_path / "field.csv"
    io.write_field_csv(f, out)
    assert out.read_bytes() == (DATA / "golden_field.csv").read_bytes()


def test_csv_round_trip_is_bitwise(tmp_path, rng):
    d = dom.build_domain("disk", 1 / 8, radius=1.0)
    vals = np.zeros(d.shape + (7,))
    vals[d.inside] = rng.standard_normal((int(d.inside.sum()), 7))
    f = solver.TensorField(d, 3, vals, eps=0.1, bc_mode="strong",
                           bc_values=np.zeros_like(vals))
    path = tmp_path / "f.csv"
    io.write_field_csv(f, path)
    coords, q, w, flag = io.read_field_csv(path)
    assert np.array_equal(q, f.values[d.inside])
    assert np.array_equal(coords, d.coords()[d.inside])
    assert np.array_equal(w, tensors.potential_w(f.values[d.inside], 3))


@pytest.mark.parametrize("case", ["2d_strong", "3d_weak"])
def test_checkpoint_round_trip(tmp_path, rng, case):
    if case == "2d_strong":
        d = dom.build_domain("disk", 1 / 8, radius=1.0)
        f = solver.make_field(d, 2, eps=0.2, init="zero", bc_mode="strong")
    else:
        d = dom.build_domain("ball", 1 / 4, radius=1.0)
        f = solver.make_field(d, 3, eps=0.2, init="analytic_escape_map",
                              bc_mode="weak", delta1=0.05, delta2=0.1)
    f.values[d.inside] += 0.01 * rng.standard_normal(
        f.values[d.inside].shape)
    f.iteration = 1234
    path = tmp_path / "f.chk"
    io.write_checkpoint(f, path)
    g = io.read_checkpoint(path)
    assert g.n == f.n and g.eps == f.eps and g.iteration == 1234
    assert g.bc_mode == f.bc_mode
    assert (g.delta1, g.delta2) == (f.delta1, f.delta2)
    assert g.domain.spec == d.spec and g.domain.h == d.h
    assert np.array_equal(g.values, f.values)
    if f.bc_mode == "strong":
        b = d.mask == dom.BOUNDARY
        assert np.array_equal(g.bc_values[b], f.values[b])


def test_checkpoint_rejects_garbage(tmp_path):
    path = tmp_path / "bad.chk"
    path.write_bytes(b"not a checkpoint at all")
    with pytest.raises(ValueError):
        io.read_checkpoint(path)


def test_vtk_structure(tmp_path):
    d = dom.build_domain("disk", 1 / 8, radius=1.0)
    f = solver.make_field(d, 2, eps=0.2, init="frame_constant",
                          bc_spec="frame_constant", theta=0.1)
    path = tmp_path / "f.vtk"
    io.write_vtk(f, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# vtk DataFile Version 3.0"
    assert lines[2] == "ASCII"
    assert lines[3] == "DATASET STRUCTURED_POINTS"
    counts = [int(v) for v in lines[4].split()[1:]]
    n_pts = counts[0] * counts[1] * counts[2]
    assert counts[2] == 1  # 2D grid exported as a single slab
    assert lines[7] == f"POINT_DATA {n_pts}"
    assert lines[8].startswith("SCALARS W double")
    body = lines[10:]
    assert body[n_pts].startswith("VECTORS frame1 double")
    # three MB frame vector fields, each n_pts 3-component rows
    assert len(body) == n_pts + 3 * (n_pts + 1)


def test_history_csv(tmp_path):
    rep = solver.ConvergenceReport(
        iterations=3, converged=True,
        energy_history=np.array([[0, 1.0, 2.0, 0.5], [20, 0.7, 1.1, 0.2]]),
        max_norm=1.0)
    path = tmp_path / "e.csv"
    io.write_history_csv(rep, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "iteration,dirichlet,bulk,surface"
    assert lines[1].startswith("0,1,2,0.5")


def _write_cfg(path, **kv):
    path.write_text("".join(f"{k} = {v}\n" for k, v in kv.items()))


def test_cli_gen_frame(capsys):
    assert cli.main(["gen-frame"]) == 0
    out = capsys.readouterr().out
    assert "q=" in out and "W=" in out
    wline = [l for l in out.splitlines() if l.startswith("W=")][0]
    assert float(wline.split("=")[1]) < 1e-20


def test_cli_bentcore(tmp_path, capsys):
    cfg = tmp_path / "b.cfg"
    _write_cfg(cfg, alpha=1.0, beta=1.0, numeric="false")
    assert cli.main(["bentcore", "--config", str(cfg)]) == 0
    out = dict(l.split("=", 1) for l in capsys.readouterr().out.splitlines())
    assert out["minimizer"] == "tetrahedral"
    assert float(out["omega"]) == pytest.approx(-3 / 16)


def test_cli_rejects_unknown_and_missing_keys(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    _write_cfg(cfg, alpha=1.0, beta=1.0, frobulate=3)
    assert cli.main(["bentcore", "--config", str(cfg)]) == 2
    cfg2 = tmp_path / "missing.cfg"
    _write_cfg(cfg2, alpha=1.0)
    assert cli.main(["bentcore", "--config", str(cfg2)]) == 2
    # a failing relax config must not create its output directory
    cfg3 = tmp_path / "relax.cfg"
    _write_cfg(cfg3, shape="disk radius=1", h=0.125)  # eps missing
    outdir = tmp_path / "never"
    assert cli.main(["relax2d", "--config", str(cfg3),
                     "--out", str(outdir)]) == 2
    assert not outdir.exists()
    capsys.readouterr()


def test_cli_duplicate_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "dup.cfg"
    cfg.write_text("alpha = 1\nalpha = 2\nbeta = 1\n")
    assert cli.main(["bentcore", "--config", str(cfg)]) == 2
    capsys.readouterr()


def test_cli_env_override(tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "b.cfg"
    _write_cfg(cfg, alpha=1.0, beta=1.0, numeric="false")
    monkeypatch.setenv("FRAMEFIELDS_BETA", "-1.0")
    assert cli.main(["bentcore", "--config", str(cfg)]) == 0
    out = dict(l.split("=", 1) for l in capsys.readouterr().out.splitlines())
    assert out["minimizer"] == "mb"


def test_cli_relax_recover_analyze(tmp_path, capsys):
    cfg = tmp_path / "r.cfg"
    _write_cfg(cfg, shape="disk radius=1", h=0.125, eps=0.3,
               max_iters=200, energy_every=50)
    outdir = tmp_path / "run"
    assert cli.main(["relax2d", "--config", str(cfg),
                     "--out", str(outdir)]) == 0
    for name in ("field.chk", "field.csv", "field.vtk", "energy.csv",
                 "report.txt"):
        assert (outdir / name).exists()
    report = dict(l.split("=", 1)
                  for l in (outdir / "report.txt").read_text().splitlines())
    assert int(report["iterations"]) <= 200
    capsys.readouterr()

    assert cli.main(["recover", "--config", "/dev/null", "--out",
                     str(tmp_path / "rec")]) == 2  # field key missing
    cfg2 = tmp_path / "rec.cfg"
    _write_cfg(cfg2, field=str(outdir / "field.chk"))
    assert cli.main(["recover", "--config", str(cfg2), "--out",
                     str(tmp_path / "rec")]) == 0
    frames_csv = (tmp_path / "rec" / "frames.csv").read_text().splitlines()
    assert frames_csv[0].startswith("x,y,v1x,v1y,v1z")
    capsys.readouterr()

    assert cli.main(["analyze", "--config", str(cfg2), "--out",
                     str(tmp_path / "an")]) == 0
    text = (tmp_path / "an" / "analysis.txt").read_text()
    assert text.startswith("clusters=")
    capsys.readouterr()


def test_cli_classify_seeded_defect(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    _write_cfg(cfg, shape="disk radius=1", h=0.125, eps=0.3, n=3,
               init="quaternion_boundary", defects="0+0j:s:1",
               max_iters=2, energy_every=1)
    outdir = tmp_path / "run3"
    assert cli.main(["relax2d", "--config", str(cfg),
                     "--out", str(outdir)]) == 0
    capsys.readouterr()
    cfg2 = tmp_path / "cl.cfg"
    _write_cfg(cfg2, field=str(outdir / "field.chk"), radius=0.5, tol=0.05)
    assert cli.main(["classify", "--config", str(cfg2)]) == 0
    assert capsys.readouterr().out.strip() == "class=s"


def test_cli_relax_bit_reproducible(tmp_path, capsys):
    cfg = tmp_path / "r.cfg"
    _write_cfg(cfg, shape="disk radius=1", h=0.25, eps=0.3, n=3,
               bc_mode="weak", delta="0.1", max_iters=60, energy_every=30)
    blobs = []
    for name in ("one", "two"):
        outdir = tmp_path / name
        assert cli.main(["relax2d", "--config", str(cfg),
                         "--out", str(outdir)]) == 0
        blobs.append((outdir / "field.chk").read_bytes())
        capsys.readouterr()
    assert blobs[0] == blobs[1]
