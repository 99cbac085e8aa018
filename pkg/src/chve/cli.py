"""Command-line interface.

Subcommands:

* ``run <config>``        advance a simulation described by a config file
* ``verify [suite]``      run the verification oracles, print a pass/fail
                          table, exit nonzero on any failure
* ``stokes-mms``          print the manufactured-solution convergence table
* ``energy-report <csv>`` summarize a diagnostics CSV

Exit codes: 0 success, 2 validation error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv as _csv
import sys

import numpy as np

from . import verification as ver
from .config import load_config, with_overrides
from .driver import run_simulation
from .errors import ValidationError
from .grid import GridSpec, ModelParams, ScalarField, TensorField


def _cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
        cfg = with_overrides(cfg, output_dir=args.output_dir, seed=args.seed,
                             max_steps=args.max_steps)
    except (ValidationError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    summary = run_simulation(cfg)
    print(f"steps={summary.steps} rejected={summary.rejected_steps} "
          f"wall={summary.wall_time:.2f}s E={summary.final_energy:.6g} "
          f"mass={summary.final_mass:.12g} termination={summary.termination}")
    return 0 if summary.termination in ("t_end", "max_steps") else 3


def _verify_rows(suite: str):
    rows = []

    def add(name, passed, detail):
        rows.append((name, bool(passed), detail))

    if suite in ("all", "constitutive"):
        rep = ver.fd_check_elastic_stress(ModelParams())
        add("elastic stress vs FD gradient",
            rep["passed"], f"max rel {max(v for k, v in rep.items() if k != 'passed'):.2e}")
        rep = ver.fd_check_det_derivative()
        add("det derivative = cofactor", rep["passed"],
            f"d2 rel {rep['d2_max_rel']:.2e}")

    if suite in ("all", "operators"):
        rep = ver.dense_oracle_compare(GridSpec(8, 8))
        add("dense oracle (grad/div/lap)", rep["passed"],
            f"max dev {max(rep['max_dev_grad'], rep['max_dev_div'], rep['max_dev_lap']):.2e}")
        rep = ver.dense_stokes_compare(GridSpec(8, 8))
        add("dense oracle (stokes)", rep["passed"],
            f"max dev {rep['max_dev_velocity']:.2e}")

    if suite in ("all", "stokes"):
        rep = ver.stokes_mms(levels=(16, 32, 64))
        ok = all(o >= 1.9 for o in rep["order_v"])
        add("stokes MMS velocity order", ok,
            f"orders {['%.2f' % o for o in rep['order_v']]}")

    if suite in ("all", "coupling"):
        g = GridSpec(64, 64)
        params = ModelParams(eps=0.25, c_elastic=0.5)
        _, Y = g.cell_centers()
        phi = ScalarField(g, np.tanh((Y - 0.5 * g.ly) / 0.15))
        rep = ver.korteweg_identity_check(phi, TensorField.identity(g), params)
        add("capillary force equivalence", rep["v_diff"] <= 1e-8,
            f"v diff {rep['v_diff']:.2e}")
        g8 = GridSpec(10, 10)
        rng = np.random.default_rng(5)
        phi8 = ScalarField(g8, 0.2 * rng.standard_normal((10, 10)))
        rep = ver.fd_check_chemical_potential(phi8, TensorField.identity(g8),
                                              ModelParams())
        ok = all(1.9 <= o <= 2.1 for o in rep["orders"])
        add("chemical potential vs FD energy", ok,
            f"order {rep['observed_order']:.3f}")
    return rows


def _cmd_verify(args) -> int:
    rows = _verify_rows(args.suite)
    width = max(len(r[0]) for r in rows) + 2
    failed = 0
    for name, passed, detail in rows:
        mark = "PASS" if passed else "FAIL"
        failed += not passed
        print(f"{name:<{width}} {mark}  {detail}")
    print(f"{len(rows) - failed}/{len(rows)} checks passed")
    return 0 if failed == 0 else 3


def _cmd_stokes_mms(args) -> int:
    levels = tuple(int(s) for s in args.levels.split(","))
    rep = ver.stokes_mms(levels=levels)
    print("n      L2(v)          order    L2(q)          order")
    for k, n in enumerate(rep["levels"]):
        ov = f"{rep['order_v'][k - 1]:.2f}" if k else "  -  "
        oq = f"{rep['order_q'][k - 1]:.2f}" if k else "  -  "
        print(f"{n:<6d} {rep['err_v'][k]:.6e}  {ov}    {rep['err_q'][k]:.6e}  {oq}")
    return 0


def _cmd_energy_report(args) -> int:
    try:
        with open(args.csv, newline="") as fh:
            rows = list(_csv.DictReader(fh))
    except OSError as exc:
        print(f"cannot read {args.csv}: {exc}", file=sys.stderr)
        return 2
    if not rows:
        print("no accepted steps in file")
        return 0
    E = np.array([float(r["E_total"]) for r in rows])
    mass = np.array([float(r["mass"]) for r in rows])
    div = np.array([float(r["div_v_max"]) for r in rows])
    budget = np.array([float(r["budget_residual"]) for r in rows])
    increases = np.diff(E)
    n_up = int(np.sum(increases > 0.0))
    print(f"rows:                {len(rows)}")
    print(f"t range:             [{rows[0]['t']}, {rows[-1]['t']}]")
    print(f"energy:              {E[0]:.8g} -> {E[-1]:.8g}")
    print(f"energy increases:    {n_up} steps, max increase "
          f"{increases.max() if len(increases) else 0.0:.3e}")
    print(f"mass drift:          {abs(mass[-1] - mass[0]):.3e}")
    print(f"max div residual:    {div.max():.3e}")
    print(f"max |budget resid|:  {np.abs(budget).max():.3e}")
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="chve",
                                 description="phase-field viscoelasticity simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a simulation from a config file")
    p_run.add_argument("config")
    p_run.add_argument("--output-dir", default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--max-steps", type=int, default=None)
    p_run.set_defaults(func=_cmd_run)

    p_ver = sub.add_parser("verify", help="run verification oracles")
    p_ver.add_argument("suite", nargs="?", default="all",
                       choices=["all", "constitutive", "operators", "stokes",
                                "coupling"])
    p_ver.set_defaults(func=_cmd_verify)

    p_mms = sub.add_parser("stokes-mms", help="manufactured-solution table")
    p_mms.add_argument("--levels", default="32,64,128")
    p_mms.set_defaults(func=_cmd_stokes_mms)

    p_er = sub.add_parser("energy-report", help="summarize a diagnostics CSV")
    p_er.add_argument("csv")
    p_er.set_defaults(func=_cmd_energy_report)

    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
