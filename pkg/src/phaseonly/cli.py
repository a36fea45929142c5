"""Command line interface.

Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 solver fault.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import EXHAUSTIVE_CAP, rip_exhaustive, rip_monte_carlo, _support_count
from .experiment import (
    ConfigError,
    ExperimentConfig,
    emit,
    format_summary,
    read_config,
    run_experiment,
    summarize,
)
from .linearization import build_extended, build_linearized
from .measurement import (
    InfeasibleConstruction,
    PostSignDense,
    PreSignDense,
    SensingMatrix,
    SparseCorruption,
    construct_indistinguishable_pair,
    draw_sensing_matrix,
    draw_sparse_signal,
    make_rng,
    phase,
)
from .recovery import recover, recover_extended

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_SOLVER = 0, 1, 2, 3

log = logging.getLogger("phaseonly")


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors, not argparse's default status 2
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _floats(text: str):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="phaseonly", description="Phase-only compressed sensing experiments.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("experiment", help="Monte Carlo sweep over a noise grid")
    e.add_argument("--config", help="JSON file with ExperimentConfig fields")
    e.add_argument("--n", type=int)
    e.add_argument("--m", type=int)
    e.add_argument("--s", type=int)
    e.add_argument("--trials", type=int)
    e.add_argument("--seed", type=int, dest="base_seed")
    e.add_argument("--channel", choices=["clean", "post", "pre", "corruption", "combined"])
    e.add_argument("--tau0-grid", type=_floats, help="comma-separated tau0 values")
    e.add_argument("--zeta0m-grid", type=_floats,
                   help="comma-separated zeta0*m values (corruption grid, or the single "
                        "budget used by combined/extended runs)")
    e.add_argument("--epsilon-mode", choices=["theorem", "oracle"])
    e.add_argument("--estimator", choices=["standard", "extended"])
    e.add_argument("--signal", choices=["sparse", "powerlaw"])
    e.add_argument("--fixed-matrix", action="store_true", default=None,
                   help="reuse one sensing matrix for every trial")
    e.add_argument("--workers", type=int)
    e.add_argument("--out", dest="output_path")
    e.add_argument("--format", choices=["csv", "json"])

    r = sub.add_parser("recover", help="recover x from an .npz file holding Phi and z")
    r.add_argument("input", help=".npz with arrays 'Phi' and 'z' (optional 'x' for error)")
    r.add_argument("--s", type=int, default=5)
    r.add_argument("--channel", choices=["clean", "post", "pre", "corruption"], default="clean")
    r.add_argument("--tau0", type=float, default=0.0)
    r.add_argument("--zeta0m", type=float, default=0.0)
    r.add_argument("--epsilon", type=float, help="explicit noise radius")
    r.add_argument("--estimator", choices=["standard", "extended"], default="standard")
    r.add_argument("--out", help="write the estimate (.npy) and a JSON report next to it")

    k = sub.add_parser("rip-check", help="empirical RIP distortion of a linearized matrix")
    k.add_argument("--n", type=int, default=20)
    k.add_argument("--m", type=int, default=40)
    k.add_argument("--t", type=int, default=2, help="sparsity of the cone")
    k.add_argument("--samples", type=int, default=10000)
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--extended", type=float, metavar="ZETA0M",
                   help="check the extended matrix with this corruption budget")
    k.add_argument("--s", type=int, default=5)

    a = sub.add_parser("adversary", help="construct an indistinguishable signal pair")
    a.add_argument("--n", type=int, default=200)
    a.add_argument("--m", type=int, default=400)
    a.add_argument("--s", type=int, default=8)
    a.add_argument("--tau0", type=float, default=0.1)
    a.add_argument("--mode", choices=["pre", "post"], default="pre")
    a.add_argument("--seed", type=int, default=0)

    t = sub.add_parser("selftest", help="run the property checks")
    t.add_argument("--quick", action="store_true", help="reduced sample counts")
    return p


def _experiment_config(args) -> ExperimentConfig:
    data = {}
    if args.config:
        # only keys the file sets, so an unset format can follow --out
        data = read_config(args.config)
    for key in ("n", "m", "s", "trials", "base_seed", "channel", "epsilon_mode", "estimator",
                "signal", "fixed_matrix", "workers", "output_path", "format"):
        v = getattr(args, key)
        if v is not None:
            data[key] = v
    channel = data.get("channel", "clean")
    if args.channel is not None and args.config:
        data["grid"] = None  # grid from config no longer applies to the new channel
    if channel == "corruption":
        if args.zeta0m_grid is not None:
            data["grid"] = args.zeta0m_grid
    else:
        if args.tau0_grid is not None:
            data["grid"] = args.tau0_grid
        if args.zeta0m_grid is not None:
            if len(args.zeta0m_grid) != 1:
                raise ConfigError("--zeta0m-grid takes a single value unless --channel corruption")
            data["zeta0m"] = args.zeta0m_grid[0]
    if data.get("output_path") and "format" not in data:
        data["format"] = "json" if str(data["output_path"]).endswith(".json") else "csv"
    return ExperimentConfig.from_dict(data)


def cmd_experiment(args) -> int:
    cfg = _experiment_config(args)

    def progress(done, total):
        if done % max(1, total // 20) == 0 or done == total:
            log.info("%d/%d trials", done, total)

    records = run_experiment(cfg, progress=progress)
    summary = summarize(records, loglog=cfg.channel == "corruption")
    label = "zeta0*m" if cfg.channel == "corruption" else "tau0"
    print(format_summary(summary, label))
    if cfg.output_path:
        path = emit(records, summary, cfg.output_path, cfg.format, cfg)
        print(f"wrote {len(records)} records to {path}")
    bad = sum(1 for r in records if not math.isfinite(r.l2_error))
    if bad:
        log.warning("%d trials raised solver faults (recorded as NaN)", bad)
    return EXIT_OK


def cmd_recover(args) -> int:
    with np.load(args.input) as data:
        if "Phi" not in data or "z" not in data:
            raise ConfigError(f"{args.input} must contain arrays 'Phi' and 'z'")
        phi = SensingMatrix(np.array(data["Phi"], dtype=complex))
        z = np.array(data["z"], dtype=complex)
        x = np.array(data["x"], dtype=float) if "x" in data else None
    if z.shape != (phi.m,):
        raise ConfigError(f"z has shape {z.shape}, expected ({phi.m},)")
    z = phase(z)
    if args.estimator == "extended":
        res = recover_extended(phi, z, args.s, args.zeta0m / phi.m, x=x)
    else:
        spec = {
            "clean": None,
            "post": PostSignDense(args.tau0) if args.channel == "post" else None,
            "pre": PreSignDense(args.tau0) if args.channel == "pre" else None,
            "corruption": SparseCorruption(args.zeta0m / phi.m) if args.channel == "corruption" else None,
        }[args.channel]
        res = recover(phi, z, spec, epsilon=args.epsilon, x=x, s=args.s)
    report = {
        "epsilon": res.epsilon_used,
        "iterations": res.solve.iterations,
        "converged": res.solve.converged,
        "objective": res.solve.objective,
        "degenerate": res.degenerate,
        "support": np.flatnonzero(np.abs(res.x_sharp) > 1e-8).tolist(),
    }
    if x is not None:
        report["l2_error"] = res.l2_error
        report["residual_at_truth"] = res.residual_at_truth
    print(json.dumps(report, indent=1))
    if args.out:
        out = Path(args.out)
        np.save(out.with_suffix(".npy"), res.x_sharp)
        out.with_suffix(".json").write_text(json.dumps(report, indent=1) + "\n")
    return EXIT_SOLVER if not res.solve.converged else EXIT_OK


def cmd_rip_check(args) -> int:
    phi = draw_sensing_matrix(args.m, args.n, args.seed)
    x = draw_sparse_signal(args.n, min(args.s, args.n), make_rng(args.seed, 1))
    z = phase(phi.entries @ x)
    if args.extended is not None:
        system = build_extended(z, phi, args.s, args.extended / args.m)
        A, cone = system.dense(), (args.n, args.t, max(1, int(math.ceil(args.extended))))
    else:
        A, cone = build_linearized(z, phi).A, args.t
    if _support_count(A.shape[1], cone) <= EXHAUSTIVE_CAP:
        est = rip_exhaustive(A, cone)
    else:
        est = rip_monte_carlo(A, cone, args.samples, seed=args.seed)
    print(json.dumps({"cone": est.cone, "delta": est.delta_lower, "method": est.method,
                      "certified": est.certified, "samples": est.samples}))
    return EXIT_OK


def cmd_adversary(args) -> int:
    phi = draw_sensing_matrix(args.m, args.n, args.seed)
    x = draw_sparse_signal(args.n, args.s // 2 or 1, make_rng(args.seed, 1))
    try:
        xp = construct_indistinguishable_pair(phi, x, args.s, args.tau0, args.mode, seed=args.seed)
    except InfeasibleConstruction as exc:
        print(json.dumps({"feasible": False, "reason": str(exc)}))
        return EXIT_OK
    b, bp = phi.entries @ x, phi.entries @ xp
    print(json.dumps({
        "feasible": True,
        "distance": float(np.linalg.norm(xp - x)),
        "measurement_gap_inf": float(np.max(np.abs(bp - b))),
        "phase_gap_inf": float(np.max(np.abs(phase(bp) - phase(b)))),
        "tau0": args.tau0,
    }))
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .selftest import run_all

    results = run_all(0.1 if args.quick else 1.0)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_SOLVER


COMMANDS = {
    "experiment": cmd_experiment,
    "recover": cmd_recover,
    "rip-check": cmd_rip_check,
    "adversary": cmd_adversary,
    "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as exc:
        print(f"phaseonly: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"phaseonly: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"phaseonly: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (np.linalg.LinAlgError, FloatingPointError, ArithmeticError) as exc:
        print(f"phaseonly: solver fault: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, TypeError) as exc:
        # bad parameter values surfaced by the library (e.g. tau0 out of range)
        print(f"phaseonly: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
