"""Batch command line: ``igabem solve | verify | table``.

Exit codes: 0 success, 1 verification failure, 2 invalid model file,
3 solver failure.  The thread count of the assembly is read from the
``IGABEM_THREADS`` environment variable.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, models, verification
from .assembly import ModelError, assemble
from .model_io import ModelFileError, build_model, load_model_file, parse_model, solve_options
from .solver import SolverError, nodal_displacements, postprocess, solve

EXIT_OK, EXIT_VERIFY, EXIT_MODEL, EXIT_SOLVER = 0, 1, 2, 3
log = logging.getLogger("igabem")


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    if isinstance(v, (tuple, list)):
        return " ".join(_fmt(x) for x in v)
    return v


def write_csv(path: Path, header, rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def _resolve_model(arg: str):
    p = Path(arg)
    if p.exists():
        return load_model_file(p)
    name = arg[:-5] if arg.endswith(".json") else arg
    try:
        return parse_model(models.load_bundled(name))
    except FileNotFoundError:
        raise ModelFileError(f"{arg}: no such file or bundled model") from None


# -- solve ------------------------------------------------------------------------
def cmd_solve(args) -> int:
    try:
        mf = _resolve_model(args.model)
        if args.exclusion_radius is not None:
            mf.solve.exclusion_radius = args.exclusion_radius
        model = build_model(mf, args.integration_option)
        opts = solve_options(mf, args.scheme)
    except ModelFileError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_MODEL
    out = Path(args.out_dir)
    t0 = time.perf_counter()
    try:
        sysm = assemble(model)
        t1 = time.perf_counter()
        sol = solve(sysm, model, opts)
        t2 = time.perf_counter()
        pts = [(p.name, np.array(p.x)) for p in mf.outputs.points]
        u_pts = postprocess(model, sysm, sol, np.array([x for _, x in pts])) if pts else []
        lines = [(ln, ln.points()) for ln in mf.outputs.lines]
        u_lines = [postprocess(model, sysm, sol, P) for _, P in lines]
        t3 = time.perf_counter()
    except (SolverError, ModelError) as e:
        print(f"solver failure: {e}", file=sys.stderr)
        trace = getattr(e, "trace", [])
        if trace:
            _write_trace(out, trace)
        return EXIT_SOLVER
    except ValueError as e:
        print(f"solver failure: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_SOLVER

    d = sysm.dofs
    write_csv(out / "summary.csv", ["name", "x", "y", "z", "u_x", "u_y", "u_z"],
              [[n, *x, *u] for (n, x), u in zip(pts, u_pts)])
    un = nodal_displacements(sysm, sol.x)
    write_csv(out / "nodes.csv", ["node", "x", "y", "z", "u_x", "u_y", "u_z"],
              [[i, *d.nodes[i], *un[i]] for i in range(d.n_nodes)])
    trows = []
    for pi, ti in enumerate(d.t_index):
        for k in range(ti.shape[0]):
            for c in range(3):
                if ti[k, c] >= 0:
                    trows.append([model.patches[pi].name or pi, k, "xyz"[c], sol.x[ti[k, c]]])
    write_csv(out / "tractions.csv", ["patch", "basis", "direction", "t"], trows)
    grows, off = [], 0
    for g in model.grids:
        for j in range(g.n):
            k = off + j
            grows.append([g.name, j, *g.points[j], *sol.grid.u[k], *sol.grid.strain[k], *sol.grid.sigma0[k]])
        off += g.n
    comp = ["xx", "yy", "zz", "xy", "yz", "xz"]
    write_csv(out / "grid.csv", ["inclusion", "point", "x", "y", "z", "u_x", "u_y", "u_z"]
              + [f"eps_{c}" for c in comp] + [f"sigma0_{c}" for c in comp], grows)
    for (ln, P), U in zip(lines, u_lines):
        s = np.linalg.norm(P - P[0], axis=1)
        write_csv(out / f"line_{ln.name}.csv", ["s", "x", "y", "z", "u_x", "u_y", "u_z"],
                  [[s[i], *P[i], *U[i]] for i in range(len(P))])
    _write_trace(out, sol.trace)
    manifest = {
        "model": mf.name, "source": str(args.model), "version": __version__,
        "scheme": opts.scheme, "integration_option": model.volume.option,
        "exclusion_radius": model.volume.radius, "tol": opts.tol, "max_iter": opts.max_iter,
        "dof": int(d.n_unknown), "grid_points": int(sum(g.n for g in model.grids)),
        "spectral_radius": sol.spectral_radius, "iterations": len(sol.trace),
        "timings": {**sysm.timings, "solve": t2 - t1, "postprocess": t3 - t2, "total": t3 - t0},
        "python": platform.python_version(), "created": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
    for (n, _), u in zip(pts, u_pts):
        print(f"{n}: u = ({u[0]:.6g}, {u[1]:.6g}, {u[2]:.6g})")
    print(f"{d.n_unknown} DOF, {t3 - t0:.1f} s, outputs in {out}")
    return EXIT_OK


def _write_trace(out: Path, trace):
    write_csv(out / "trace.csv", ["iteration", "dx_norm", "max_dsigma", "rel"],
              [[t["iteration"], t["dx_norm"], t["max_dsigma"], t["rel"]] for t in trace])


# -- verify -----------------------------------------------------------------------
def cmd_verify(args) -> int:
    out = Path(args.out_dir)
    if args.what == "appendix":
        rows = verification.conformance_rows()
        write_csv(out / "appendix_conformance.csv",
                  ["position", "i", "j", "closed_form", "oracle", "max_rel_error",
                   "worst_H_over_R", "worst_phi1", "worst_phi2", "worst_nu", "passed"],
                  [[r["position"], r["i"], r["j"], r["closed_form"], r["oracle"], r["max_rel_error"],
                    *r["worst_sample"], r["passed"]] for r in rows])
        bad = [r for r in rows if not r["passed"]]
        for r in rows:
            print(f"{r['position']:6s} ({r['i']},{r['j']})  max rel. error {r['max_rel_error']:.2e}"
                  f"  {'ok' if r['passed'] else 'FLAGGED (served by quadrature)'}")
        if bad:
            print("flagged: " + ", ".join(f"{r['position']}({r['i']},{r['j']})" for r in bad))
            return EXIT_VERIFY
        return EXIT_OK
    if args.what == "quadrature":
        e = verification.jacobian_exponents()
        ok_t = abs(e["tapered"] - 1.0) <= verification.EXPONENT_TOL
        ok_p = abs(e["pyramid"] - 2.0) <= verification.EXPONENT_TOL
        write_csv(out / "jacobian_exponents.csv", ["mapping", "exponent", "expected", "passed"],
                  [["tapered", e["tapered"], 1.0, ok_t], ["pyramid", e["pyramid"], 2.0, ok_p]])
        print(f"tapered exponent {e['tapered']:.4f} (1.0)  pyramid exponent {e['pyramid']:.4f} (2.0)")
        return EXIT_OK if ok_t and ok_p else EXIT_VERIFY
    r = verification.patch_test()
    write_csv(out / "patchtest.csv", ["u_z_top", "expected", "max_rel_error", "passed"],
              [[r["u_z_top"], r["expected"], r["max_rel_error"], r["passed"]]])
    print(f"u_z(top) = {r['u_z_top']:.10g}, expected {r['expected']:.10g}, "
          f"max rel. error {r['max_rel_error']:.2e}")
    return EXIT_OK if r["passed"] else EXIT_VERIFY


# -- table ------------------------------------------------------------------------
def cmd_table(args) -> int:
    out = Path(args.out_dir)
    try:
        if args.which == "test1":
            rows = verification.test1_table()
            write_csv(out / "test1_table.csv", ["E1/E", "d", "option1", "option2", "theory"],
                      [[r["E1/E"], r["d"], r["option1"], r["option2"], r["theory"]] for r in rows])
            print(f"{'E1/E':>5} {'d':>6} {'option 1':>10} {'option 2':>10} {'theory':>10}")
            for r in rows:
                print(f"{r['E1/E']:5g} {r['d']:6g} {r['option1']:10.5g} {r['option2']:10.5g} {r['theory']:10.5g}")
        else:
            t = verification.test3_table()
            write_csv(out / "test3_table.csv", ["r", "u_r", "u_r_exact", "rel_error"],
                      [[r, u, e, u / e - 1] for r, u, e in zip(t["r"], t["u_r"], t["u_r_exact"])])
            for r, u, e in zip(t["r"], t["u_r"], t["u_r_exact"]):
                print(f"r = {r:5g}  u_r = {u:.5g}  closed form {e:.5g}  ({100 * (u / e - 1):+.2f} %)")
            print(f"interface pressure {t['p_o']:.5g} (closed form {t['p_o_exact']:.5g})")
    except (SolverError, ModelError) as e:
        print(f"solver failure: {e}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="igabem", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve a model file or bundled model")
    s.add_argument("model", help="path to a JSON model, or a bundled name such as test1_d02")
    s.add_argument("--scheme", choices=("iterative", "one-step"))
    s.add_argument("--integration-option", type=int, choices=(1, 2))
    s.add_argument("--exclusion-radius", type=float)
    s.add_argument("--out-dir", default="out")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="self-checks")
    v.add_argument("what", choices=("appendix", "quadrature", "patchtest"))
    v.add_argument("--out-dir", default="out")
    v.set_defaults(func=cmd_verify)

    t = sub.add_parser("table", help="reproduce a reference table")
    t.add_argument("which", choices=("test1", "test3"))
    t.add_argument("--out-dir", default="out")
    t.set_defaults(func=cmd_table)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
