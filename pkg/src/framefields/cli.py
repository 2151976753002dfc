"""Configuration-driven command line front end.

Subcommands: relax2d, relax3d, recover, classify, analyze, bentcore,
gen-frame. Parameters come from a plain-text key=value config file
(--config), overridable per key by environment variables with the
FRAMEFIELDS_ prefix (FRAMEFIELDS_<KEY> upper-cased) and by the dedicated
CLI flags (--out, --seed, --threads, --checkpoint-every), which take the
highest precedence. Unknown config keys are rejected and missing required
keys abort with exit code 2 before any output is written.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import analysis, domain as dom, io, quat, recovery, solver, tensors

ENV_PREFIX = "FRAMEFIELDS_"

_REQUIRED = object()


def _parse_bool(s: str) -> bool:
    if s.lower() in ("1", "true", "yes", "on"):
        return True
    if s.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_defects(s: str):
    """'cx+cyj:alpha:beta; ...' -> list of (complex, alpha label, beta label)."""
    out = []
    for item in s.split(";"):
        item = item.strip()
        if not item:
            continue
        parts = [p.strip() for p in item.split(":")]
        if len(parts) != 3:
            raise ValueError(f"defect spec needs center:alpha:beta, got {item!r}")
        out.append((complex(parts[0]), parts[1], parts[2]))
    return out


_RELAX_SCHEMA = {
    "shape": (str, _REQUIRED),
    "h": (float, _REQUIRED),
    "eps": (float, _REQUIRED),
    "n": (int, None),  # target symmetry; default 2 for relax2d, 3 for relax3d
    "bc_mode": (str, None),  # default strong (2D), weak (3D)
    "init": (str, "zero"),
    "bc": (str, "normal_aligned"),
    "theta": (float, 0.0),
    "delta1": (float, 0.0),
    "delta2": (float, 0.0),
    "delta": (float, 0.0),  # shorthand: sets both delta1 and delta2
    "dt": (float, 0.0),  # 0 = stability default
    "max_iters": (int, 200000),
    "rel_energy_tol": (float, 1e-8),
    "energy_every": (int, 20),
    "semi_implicit": (_parse_bool, False),
    "newton_iters": (int, 3),
    "defects": (_parse_defects, []),
    "rho": (float, 0.25),
    "w_threshold": (float, 0.0),  # 0 = default threshold
    "seed": (int, 0),
    "threads": (int, 0),
    "checkpoint_every": (int, 0),
    "out": (str, "."),
}

_FIELD_SCHEMA = {
    "field": (str, _REQUIRED),
    "w_threshold": (float, 0.0),
    "seed": (int, 0),
    "threads": (int, 0),
    "out": (str, "."),
}

_CLASSIFY_SCHEMA = dict(_FIELD_SCHEMA)
_CLASSIFY_SCHEMA.update({
    "center_x": (float, 0.0),
    "center_y": (float, 0.0),
    "radius": (float, _REQUIRED),
    "samples": (int, 256),
    "tol": (float, 1e-2),  # variety residual accepted along the loop
})

_BENTCORE_SCHEMA = {
    "alpha": (float, _REQUIRED),
    "beta": (float, _REQUIRED),
    "numeric": (_parse_bool, True),
    "seed": (int, 0),
    "threads": (int, 0),
    "out": (str, "."),
}

_GEN_FRAME_SCHEMA = {
    "n": (int, 3),
    "theta": (float, 0.0),
    "random": (_parse_bool, False),
    "seed": (int, 0),
    "threads": (int, 0),
    "out": (str, "."),
}

_SCHEMAS = {
    "relax2d": _RELAX_SCHEMA,
    "relax3d": _RELAX_SCHEMA,
    "recover": _FIELD_SCHEMA,
    "classify": _CLASSIFY_SCHEMA,
    "analyze": _FIELD_SCHEMA,
    "bentcore": _BENTCORE_SCHEMA,
    "gen-frame": _GEN_FRAME_SCHEMA,
}


class ConfigError(Exception):
    pass


def read_config_file(path) -> dict:
    raw = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key in raw:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            raw[key] = value
    return raw


def build_config(subcommand: str, args) -> dict:
    """Merge config file, environment overrides, and CLI flags; validate."""
    schema = _SCHEMAS[subcommand]
    raw = read_config_file(args.config) if args.config else {}
    for key in raw:
        if key not in schema:
            raise ConfigError(f"unknown config key {key!r} for {subcommand}")
    for key in schema:
        env = os.environ.get(ENV_PREFIX + key.upper())
        if env is not None:
            raw[key] = env
    for flag, key in (("out", "out"), ("seed", "seed"), ("threads", "threads"),
                      ("checkpoint_every", "checkpoint_every")):
        v = getattr(args, flag, None)
        if v is not None:
            if key not in schema:
                raise ConfigError(f"--{flag.replace('_', '-')} does not apply "
                                  f"to {subcommand}")
            raw[key] = str(v)
    cfg = {}
    for key, (parse, default) in schema.items():
        if key in raw:
            try:
                cfg[key] = parse(raw[key])
            except (ValueError, TypeError) as e:
                raise ConfigError(f"bad value for {key!r}: {e}") from e
        elif default is _REQUIRED:
            raise ConfigError(f"missing required config key {key!r}")
        else:
            cfg[key] = default
    return cfg


def _apply_threads(cfg):
    n = cfg.get("threads", 0)
    if n and n > 0:
        import numba
        avail = numba.config.NUMBA_NUM_THREADS
        numba.set_num_threads(min(n, avail))


def _report_lines(pairs) -> str:
    return "".join(f"{k}={v}\n" for k, v in pairs)


def cmd_relax(cfg: dict, dim: int) -> int:
    n = cfg["n"] if cfg["n"] is not None else (2 if dim == 2 else 3)
    bc_mode = cfg["bc_mode"] or ("strong" if dim == 2 else "weak")
    if bc_mode not in ("strong", "weak"):
        raise ConfigError(f"bad bc_mode {cfg['bc_mode']!r}")
    d1, d2 = cfg["delta1"], cfg["delta2"]
    if cfg["delta"]:
        d1 = d1 or cfg["delta"]
        d2 = d2 or cfg["delta"]
    d = dom.build_domain(cfg["shape"], cfg["h"])
    if d.dim != dim:
        raise ConfigError(f"shape {cfg['shape']!r} is {d.dim}D, expected {dim}D")
    kw = {}
    if cfg["defects"]:
        kw["defects"] = cfg["defects"]
        kw["rho"] = cfg["rho"]
    if cfg["theta"]:
        kw["theta"] = cfg["theta"]
    f = solver.make_field(d, n, cfg["eps"], init=cfg["init"], bc_mode=bc_mode,
                          bc_spec=cfg["bc"], delta1=d1, delta2=d2, **kw)
    sc = solver.SolverConfig(
        dt=cfg["dt"] or None, max_iters=cfg["max_iters"],
        rel_energy_tol=cfg["rel_energy_tol"], energy_every=cfg["energy_every"],
        newton_iters=cfg["newton_iters"],
        semi_implicit_laplacian=cfg["semi_implicit"],
        checkpoint_every=cfg["checkpoint_every"])
    outdir = cfg["out"]
    os.makedirs(outdir, exist_ok=True)

    bound = solver.amplitude_bound(f.gamma) + 0.05 if bc_mode == "weak" else None

    def checkpoint(iteration, field):
        io.write_checkpoint(field, os.path.join(outdir, f"field_{iteration:08d}.chk"))

    out, report = solver.relax(
        f, sc, callback=checkpoint if cfg["checkpoint_every"] else None)
    io.write_checkpoint(out, os.path.join(outdir, "field.chk"))
    thr = cfg["w_threshold"] or None
    io.write_field_csv(out, os.path.join(outdir, "field.csv"), thr)
    io.write_vtk(out, os.path.join(outdir, "field.vtk"), thr)
    io.write_history_csv(report, os.path.join(outdir, "energy.csv"))
    sing = analysis.singular_cells(out, thr, interior_only=True)
    pairs = [("iterations", report.iterations),
             ("converged", report.converged),
             ("reason", report.reason),
             ("max_norm", "%.17g" % report.max_norm),
             ("clusters", len(sing.clusters))]
    if bound is not None:
        pairs.append(("amplitude_bound", "%.17g" % bound))
        pairs.append(("amplitude_ok", report.max_norm <= bound))
    for i, cl in enumerate(sing.clusters):
        pairs.append((f"cluster{i}_cells", len(cl.cells)))
        pairs.append((f"cluster{i}_centroid",
                      " ".join("%.6g" % v for v in cl.centroid)))
        pairs.append((f"cluster{i}_interior", cl.interior))
    text = _report_lines(pairs)
    with open(os.path.join(outdir, "report.txt"), "w") as fh:
        fh.write(text)
    sys.stdout.write(text)
    return 0


def cmd_recover(cfg: dict) -> int:
    f = io.read_checkpoint(cfg["field"])
    d = f.domain
    thr = cfg["w_threshold"] or None
    vecs, ok = io.field_frames(f, thr)
    coords = d.coords()[d.inside]
    v = vecs[d.inside]
    good = ok[d.inside]
    k = v.shape[1]
    axes = ["x", "y", "z"][: d.dim]
    cols = axes + [f"v{j + 1}{c}" for j in range(k) for c in "xyz"] + ["flag"]
    os.makedirs(cfg["out"], exist_ok=True)
    path = os.path.join(cfg["out"], "frames.csv")
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for i in range(len(coords)):
            row = (["%.17g" % c for c in coords[i]]
                   + ["%.17g" % c for c in v[i].ravel()]
                   + ["0" if good[i] else "1"])
            fh.write(",".join(row) + "\n")
    print(f"wrote {path} ({len(coords)} rows, "
          f"{int((~good).sum())} singular sentinel rows)")
    return 0


def cmd_classify(cfg: dict) -> int:
    f = io.read_checkpoint(cfg["field"])
    if f.n != 3:
        raise ConfigError("loop classification applies to tetrahedral fields")
    center = np.array([cfg["center_x"], cfg["center_y"]])
    loop = analysis.circle_loop(f.domain, center, cfg["radius"],
                                samples=cfg["samples"])
    qs = analysis.loop_tensors(f, loop)
    label = quat.classify_loop(qs, tol=cfg["tol"])
    print(f"class={label}")
    return 0


def cmd_analyze(cfg: dict) -> int:
    f = io.read_checkpoint(cfg["field"])
    thr = cfg["w_threshold"] or None
    sing = analysis.singular_cells(f, thr, interior_only=True)
    pairs = [("clusters", len(sing.clusters))]
    if f.domain.dim == 2:
        try:
            analysis.cluster_windings(f, sing)
            for i, cl in enumerate(sing.clusters):
                val = cl.winding if f.n == 2 else cl.loop_class
                pairs.append((f"cluster{i}", val))
        except (ValueError, quat.LiftError) as e:
            pairs.append(("cluster_labels_error", e))
    else:
        surf = analysis.surface_mb_reduction(f, thr)
        pairs.append(("surface_clusters", len(surf.clusters)))
        for i, cl in enumerate(surf.clusters):
            pairs.append((f"surface_index{i}", "%+.6g" % cl.winding))
        pairs.append(("surface_index_sum", "%.6g" % surf.index_sum))
        pairs.append(("surface_target", "%.6g" % surf.target))
        junc = analysis.junction_graph(f, thr)
        pairs.append(("junction_nodes", len(junc.degrees)))
        pairs.append(("junction_degrees",
                      " ".join(str(int(x)) for x in junc.degrees)))
    os.makedirs(cfg["out"], exist_ok=True)
    text = _report_lines(pairs)
    with open(os.path.join(cfg["out"], "analysis.txt"), "w") as fh:
        fh.write(text)
    sys.stdout.write(text)
    return 0


def cmd_bentcore(cfg: dict) -> int:
    rep = analysis.bentcore_minimize(cfg["alpha"], cfg["beta"],
                                     numeric=cfg["numeric"])
    pairs = [("alpha", cfg["alpha"]), ("beta", cfg["beta"]),
             ("minimizer", rep.minimizer_type)]
    if rep.lam is not None:
        pairs.append(("lambdas", " ".join("%.12g" % v for v in rep.lam)))
    if rep.omega is not None:
        pairs.append(("omega", "%.12g" % rep.omega))
    if rep.numeric_omega is not None:
        pairs.append(("numeric_omega", "%.12g" % rep.numeric_omega))
    sys.stdout.write(_report_lines(pairs))
    return 0


def cmd_gen_frame(cfg: dict) -> int:
    from . import frames
    n = cfg["n"]
    if n not in (2, 3):
        raise ConfigError("n must be 2 or 3")
    if cfg["random"]:
        rot = frames.random_rotation(n, cfg["seed"])
    elif n == 2:
        th = cfg["theta"]
        rot = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    else:
        rot = np.eye(3)
    fr = frames.frame_from_rotation(rot, n)
    q = frames.tensor_from_frame(fr.vectors)
    pairs = [("n", n)]
    for i, v in enumerate(fr.vectors):
        pairs.append((f"v{i + 1}", " ".join("%.17g" % c for c in v)))
    pairs.append(("q", " ".join("%.17g" % c for c in q)))
    pairs.append(("W", "%.3g" % float(tensors.potential_w(q, n))))
    sys.stdout.write(_report_lines(pairs))
    return 0


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="framefields",
                                description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="subcommand", required=True)
    for name in _SCHEMAS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None, help="key=value config file")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--checkpoint-every", dest="checkpoint_every",
                        type=int, default=None)
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = build_config(args.subcommand, args)
    except (ConfigError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    try:
        _apply_threads(cfg)
        if args.subcommand == "relax2d":
            return cmd_relax(cfg, 2)
        if args.subcommand == "relax3d":
            return cmd_relax(cfg, 3)
        if args.subcommand == "recover":
            return cmd_recover(cfg)
        if args.subcommand == "classify":
            return cmd_classify(cfg)
        if args.subcommand == "analyze":
            return cmd_analyze(cfg)
        if args.subcommand == "bentcore":
            return cmd_bentcore(cfg)
        if args.subcommand == "gen-frame":
            return cmd_gen_frame(cfg)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ValueError, FloatingPointError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
