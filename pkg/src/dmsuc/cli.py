"""Command-line interface: ``dmsuc <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .engine import EpochError, ForecastSource, ReservePricing, simulate, write_report
from .io import DataError, RunConfig, load_config, load_system, load_timeseries
from .milp import MILPOptions
from .milp.mps import export_mps
from .scenario_tree import load_tree, save_tree, validate
from .system import CommitState
from .tree_builder import (StepSchedule, build_library, library_epoch, load_library,
                           save_library, select_and_augment, select_bin, wait_and_see_update)
from .uc_model import (SolveOptions, UCInfeasibleError, UCInstance, UCSolverLimitError,
                       build_milp, check_feasibility, save_solution, solve_uc)

log = logging.getLogger("dmsuc")


class CLIError(RuntimeError):
    pass


def _add_config(p):
    p.add_argument("--config", help="YAML run configuration; flags override its values")


def _add_solver(p):
    g = p.add_argument_group("solver")
    g.add_argument("--backend", choices=("internal", "highs", "auto"))
    g.add_argument("--mip-gap", type=float, dest="mip_gap")
    g.add_argument("--time-limit", type=float, dest="time_limit")
    g.add_argument("--node-limit", type=int, dest="node_limit")
    g.add_argument("--binary-threshold", type=int, dest="binary_threshold",
                   help="largest binary count solved internally by the auto backend")


def _add_tree_source(p):
    g = p.add_argument_group("tree")
    g.add_argument("--tree", help="scenario tree JSON file")
    g.add_argument("--library", help="tree library directory")
    g.add_argument("--epoch", type=int, default=0, help="epoch for --library")
    g.add_argument("--present", type=float, help="observed present load (MW) for --library")


def _add_state(p):
    p.add_argument("--init-state", dest="init_state",
                   help="JSON file with y, o, d lists (default: all units off)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dmsuc", description=__doc__)
    ap.add_argument("--version", action="version", version=f"dmsuc {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-library", help="fit a scenario-tree library from load history")
    _add_config(p)
    p.add_argument("--data", help="load history CSV (timestamp,load_mw)")
    p.add_argument("--out", dest="library", help="library output directory")
    p.add_argument("--P", type=int, help="period of the load process, stages")
    p.add_argument("--T", type=int, help="horizon (stages per epoch)")
    p.add_argument("--c", type=int, help="number of present-value bins per epoch")
    p.add_argument("--N", type=int, help="stochastic-approximation iterations per tree")
    p.add_argument("--structure", help="branching per stage, comma separated (default binary)")
    p.add_argument("--epochs", type=int, help="number of epochs to fit (default: one phase cycle)")
    p.add_argument("--step-a0", type=float, dest="step_a0")
    p.add_argument("--step-n0", type=float, dest="step_n0")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)

    p = sub.add_parser("update-library", help="wait-and-see refinement with a realized trajectory")
    _add_config(p)
    p.add_argument("--library", help="library directory to update")
    p.add_argument("--epoch", type=int, required=True)
    p.add_argument("--realized", help="realized load CSV; the epoch's window is used")
    p.add_argument("--bin", type=int, help="bin to update (default: nearest to the present)")
    p.add_argument("--out", help="write the updated library here (default: in place)")

    p = sub.add_parser("solve", help="solve one commitment MILP on a tree")
    _add_config(p)
    p.add_argument("--system")
    _add_tree_source(p)
    _add_state(p)
    _add_solver(p)
    p.add_argument("--out", help="solution JSON output")
    p.add_argument("--export-mps", dest="export_mps", help="also write the MILP as MPS")
    p.add_argument("--tree-out", dest="tree_out", help="also write the tree that was solved")

    p = sub.add_parser("simulate", help="rolling-horizon simulation over consecutive epochs")
    _add_config(p)
    p.add_argument("--library")
    p.add_argument("--system")
    p.add_argument("--realized", help="realized load CSV")
    p.add_argument("--epochs", type=int)
    p.add_argument("--first-epoch", type=int, dest="first_epoch")
    p.add_argument("--pricing", help="reserve pricing YAML")
    p.add_argument("--out", dest="output", help="report directory")
    p.add_argument("--deterministic", action="store_true",
                   help="baseline: single-path trees from --forecast instead of the library")
    p.add_argument("--forecast", help="point forecast CSV for --deterministic "
                                      "(default: the realized series, i.e. a perfect forecast)")
    p.add_argument("--learn", action="store_true", help="wait-and-see update after each epoch")
    p.add_argument("--seed", type=int)
    _add_state(p)
    _add_solver(p)

    p = sub.add_parser("export-mps", help="write the commitment MILP in MPS format")
    _add_config(p)
    p.add_argument("--system")
    _add_tree_source(p)
    _add_state(p)
    p.add_argument("--out", required=True, help="MPS output file")

    p = sub.add_parser("validate", help="check trees, libraries, systems and load files")
    p.add_argument("--tree", action="append", default=[])
    p.add_argument("--library", action="append", default=[])
    p.add_argument("--system", action="append", default=[])
    p.add_argument("--timeseries", action="append", default=[])
    p.add_argument("--solution", help="solution JSON to check against --system and --tree")
    p.add_argument("--init-state", dest="init_state")
    return ap


def _config(args, require=()) -> RunConfig:
    over = {k: v for k, v in vars(args).items() if k not in ("command", "config", "verbose")}
    cfg = load_config(getattr(args, "config", None), over)
    cfg.validate(require)
    return cfg


def _solve_options(cfg: RunConfig) -> SolveOptions:
    return SolveOptions(backend=cfg.backend,
                        milp=MILPOptions(mip_gap=cfg.mip_gap, time_limit=cfg.time_limit,
                                         node_limit=cfg.node_limit),
                        binary_threshold=cfg.binary_threshold)


def _load_state(path, n_gens) -> CommitState:
    if path is None:
        return CommitState.all_off(n_gens)
    doc = json.loads(Path(path).read_text())
    return CommitState(doc["y"], doc.get("o", [0] * n_gens), doc.get("d", [0] * n_gens))


def _series(path) -> np.ndarray:
    ts = load_timeseries(path)
    if ts.gaps:
        log.warning("%s: %d missing timestamp(s), filled by interpolation: %s", path,
                    len(ts.gaps), ", ".join(str(g) for g in ts.gaps[:5]))
    return ts.filled()


def _tree_for(args, cfg):
    if args.tree:
        return load_tree(args.tree)
    if cfg.library:
        if args.present is None:
            raise CLIError("--present is required with --library")
        lib = load_library(cfg.library)
        return select_and_augment(lib, library_epoch(lib, args.epoch), args.present)
    raise CLIError("give --tree or --library")


def cmd_build_library(args) -> int:
    cfg = _config(args, require=("data",))
    if cfg.library is None:
        raise CLIError("--out (library directory) is required")
    structure = cfg.structure
    if isinstance(structure, str):
        structure = [int(b) for b in structure.split(",")]
    # without an explicit epoch count the library covers one full phase cycle
    epochs = range(cfg.epochs) if args.epochs is not None or "epochs" in _file_keys(args) else None
    lib = build_library(_series(cfg.data), cfg.P, cfg.T, cfg.c, cfg.N, structure,
                        StepSchedule(cfg.step_a0, cfg.step_n0), epochs, cfg.seed,
                        workers=cfg.workers)
    save_library(lib, cfg.library)
    print(f"library with {len(lib)} trees ({len(lib.epochs)} epochs x {cfg.c} bins) "
          f"written to {cfg.library}")
    return 0


def _file_keys(args) -> set:
    if getattr(args, "config", None) is None:
        return set()
    return set((yaml.safe_load(Path(args.config).read_text()) or {}).keys())


def cmd_update_library(args) -> int:
    cfg = _config(args, require=("library", "realized"))
    lib = load_library(cfg.library)
    T = int(lib.params["T"])
    series = _series(cfg.realized)
    window = series[args.epoch * T:(args.epoch + 1) * T]
    if window.size != T:
        raise CLIError(f"realized series does not cover epoch {args.epoch}")
    k = library_epoch(lib, args.epoch)
    l = args.bin if args.bin is not None else select_bin(lib, k, float(window[0]))
    lib = wait_and_see_update(lib, k, l, window)
    out = args.out or cfg.library
    save_library(lib, out)
    print(f"updated tree ({k}, {l}) written to {out}")
    return 0


def _instance(args, cfg):
    system = load_system(cfg.system)
    tree = _tree_for(args, cfg)
    return UCInstance(system, tree, _load_state(args.init_state, system.n_gens))


def cmd_solve(args) -> int:
    cfg = _config(args, require=("system",))
    inst = _instance(args, cfg)
    if args.export_mps:
        lp, _ = build_milp(inst)
        export_mps(lp, args.export_mps)
    opts = _solve_options(cfg)
    n_bin = inst.tree.n_nodes * inst.system.n_gens
    if opts.backend == "internal" and n_bin > opts.binary_threshold:
        print(f"note: {n_bin} binaries exceed the internal-solver threshold "
              f"({opts.binary_threshold}); consider --backend highs or --export-mps",
              file=sys.stderr)
    sol = solve_uc(inst, opts)
    print(f"status {sol.status}, objective {sol.objective:.6f}, "
          f"backend {sol.stats.get('backend')}, gap {sol.gap:.3g}")
    if args.out:
        save_solution(sol, args.out, inst.tree)
    if args.tree_out:
        save_tree(inst.tree, args.tree_out)
    return 0


def cmd_export_mps(args) -> int:
    cfg = _config(args, require=("system",))
    lp, _ = build_milp(_instance(args, cfg))
    export_mps(lp, args.out)
    print(f"{lp.n_vars} columns ({lp.n_integer} integer), {lp.n_rows} rows written to {args.out}")
    return 0


def _pricing(path) -> ReservePricing:
    if path is None:
        return ReservePricing()
    doc = yaml.safe_load(Path(path).read_text()) or {}
    unknown = set(doc) - {"shortage_price", "surplus_penalty", "surplus_ratio"}
    if unknown:
        raise DataError(f"{path}: unknown pricing key(s) {', '.join(sorted(unknown))}")
    return ReservePricing(**doc)


def cmd_simulate(args) -> int:
    require = ("system", "realized") + (() if args.deterministic else ("library",))
    cfg = _config(args, require=require)
    if cfg.output is None:
        raise CLIError("--out (report directory) is required")
    system = load_system(cfg.system)
    realized = _series(cfg.realized)
    if args.deterministic:
        forecast = _series(args.forecast) if args.forecast else realized
        source = ForecastSource(tuple(float(v) for v in forecast), cfg.T)
        T = cfg.T
    else:
        source = load_library(cfg.library)
        T = int(source.params["T"])
    epochs = range(cfg.first_epoch, cfg.first_epoch + cfg.epochs)
    try:
        result = simulate(source, system, realized, epochs, _pricing(cfg.pricing),
                          _solve_options(cfg), _load_state(args.init_state, system.n_gens),
                          learn=args.learn, T=T)
    except EpochError as exc:
        if exc.records:
            from .engine import SimulationResult
            write_report(SimulationResult(exc.records), cfg.output)
            print(f"partial report ({len(exc.records)} epochs) written to {cfg.output}",
                  file=sys.stderr)
        raise
    write_report(result, cfg.output)
    if args.learn and result.library is not None and cfg.library:
        save_library(result.library, Path(cfg.output) / "library")
    s = result.summary()
    print(f"{s['epochs']} epochs: average objective {s['sample_average_objective']:.4f}, "
          f"average C_e {s['average_C_e']:.4f}, reserve cost {s['total_reserve_cost']:.4f}; "
          f"report in {cfg.output}")
    return 0


def cmd_validate(args) -> int:
    problems = []
    checked = 0
    for path in args.tree:
        checked += 1
        for msg in validate(load_tree(path)):
            problems.append(f"{path}: {msg}")
    for path in args.library:
        checked += 1
        lib = load_library(path)
        for key, tree in lib.entries.items():
            for msg in validate(tree):
                problems.append(f"{path} {key}: {msg}")
    for path in args.system:
        checked += 1
        load_system(path)
    for path in args.timeseries:
        checked += 1
        ts = load_timeseries(path)
        for g in ts.gaps:
            problems.append(f"{path}: missing timestamp {g}")
    if args.solution:
        if len(args.system) != 1 or len(args.tree) != 1:
            raise CLIError("--solution needs exactly one --system and one --tree")
        from .uc_model import load_solution
        system = load_system(args.system[0])
        inst = UCInstance(system, load_tree(args.tree[0]),
                          _load_state(args.init_state, system.n_gens))
        checked += 1
        problems += [f"{args.solution}: {v}" for v in
                     check_feasibility(load_solution(args.solution), inst)]
    if not checked:
        raise CLIError("nothing to validate; give --tree, --library, --system or --timeseries")
    for msg in problems:
        print(msg)
    if problems:
        return 1
    print(f"{checked} item(s) valid")
    return 0


COMMANDS = {"build-library": cmd_build_library, "update-library": cmd_update_library,
            "solve": cmd_solve, "simulate": cmd_simulate, "export-mps": cmd_export_mps,
            "validate": cmd_validate}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (CLIError, DataError, EpochError, UCInfeasibleError, UCSolverLimitError,
            FileNotFoundError, KeyError, ValueError) as exc:
        print(f"dmsuc {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
