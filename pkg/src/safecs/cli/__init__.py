"""``safecs`` command line: csr, scenario, sim, sweep, plot, trace.

Option precedence, highest first: command-line flag, environment variable
(``SAFECS_OUT_DIR`` only), ``--config`` INI file, built-in default.

The INI file has one section per subcommand plus ``[global]``; keys are the
long option names with dashes or underscores, e.g.::

    [global]
    out_dir = results
    workers = 4

    [sweep]
    seeds = 10
    points = 12
    mechanisms = ipcs conventional
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from pathlib import Path

import numpy as np

from .. import __version__
from ..carriersense import Mechanism, format_trace
from ..geometry import TopologyConfig, load_topology
from ..macsim import SimConfig, format_event_log, paper_setup, run_simulation
from ..rfmodel import csr_table
from .artifacts import RunArtifact
from .plot import render_csv
from .scenarios import SCENARIO_NAMES, run_checks
from .sweep import (
    TIMINGS,
    SweepSpec,
    default_densities,
    densest,
    format_sweep_csv,
    ratio,
    read_sweep_csv,
    run_sweep,
    summarize,
)

OUT_ENV = "SAFECS_OUT_DIR"
DEFAULT_GAMMAS = tuple(float(g) for g in np.round(np.logspace(0, 3, 31), 4))
DEFAULT_ALPHAS = (2.5, 3.0, 4.0, 6.0)


class CliError(Exception):
    pass


def _write(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as e:
        raise CliError(f"cannot write {path}: {e.strerror or e}") from e
    return path


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise CliError(f"cannot read {path}: {e.strerror or e}") from e


def _out_dir(args) -> Path:
    return Path(args.out_dir)


# -- subcommands ------------------------------------------------------------
def cmd_csr(args) -> int:
    for a in args.alpha:
        if not 2 < a <= 8:
            raise CliError(f"alpha {a} outside (2, 8]")
    text = csr_table(args.gamma, args.alpha, args.d_max)
    if args.output == "-":
        sys.stdout.write(text)
    else:
        print(f"wrote {_write(_out_dir(args) / args.output, text)}")
    return 0


def cmd_scenario(args) -> int:
    names = SCENARIO_NAMES if args.name == "all" else (args.name,)
    failed = 0
    for name in names:
        print(f"== {name}")
        for c in run_checks(name):
            print("  " + c.line())
            failed += not c.ok
    print("all checks passed" if not failed else f"{failed} check(s) failed")
    return 0 if failed == 0 else 1


def _sim_config(args) -> SimConfig:
    timing = TIMINGS[args.timing]
    cfg = paper_setup(
        args.mechanism, args.links, seed=args.seed, duration=args.duration, backoff=args.backoff,
        timing=timing, ack_increments=args.ack_increments, rs_mode=not args.no_rs,
        record_traces=tuple(getattr(args, "observers", ()) or ()),
    )
    if args.topology:
        try:
            topo = load_topology(args.topology)
        except (OSError, ValueError) as e:
            raise CliError(f"cannot load topology {args.topology}: {e}") from e
        d = cfg.to_dict()
        d["topology"] = {
            "kind": "explicit",
            "arena": list(topo.arena),
            "links": [[l.tx.x, l.tx.y, l.rx.x, l.rx.y] for l in topo.links],
        }
        d["d_ref"] = TopologyConfig().length_max
        cfg = SimConfig.from_dict(d)
    return cfg


def cmd_sim(args) -> int:
    cfg = _sim_config(args)
    result = run_simulation(cfg)
    m = result.metrics
    out = _out_dir(args)
    art = RunArtifact.build(cfg, m)
    _write(out / f"{args.name}.json", art.to_json())
    if args.event_log:
        _write(out / f"{args.name}.events.csv", format_event_log(result.log))
    print(
        f"{cfg.cs.mechanism.value}: links={m.n_links} spatial_reuse={m.spatial_reuse:.4f} "
        f"throughput={m.throughput_per_unit_area / 1e6:.3f} Mb/s per unit area "
        f"delivered={m.delivered} hidden_collisions={m.hidden_collisions}"
    )
    print(f"wrote {out / (args.name + '.json')}")
    return 0


def cmd_trace(args) -> int:
    if not args.observers:
        raise CliError("trace needs at least one --observer link id")
    cfg = _sim_config(args)
    n = len(cfg.resolve_topology())
    for o in args.observers:
        if not 0 <= o < n:
            raise CliError(f"observer {o} is not a link of the {n}-link topology")
    result = run_simulation(cfg, audit=False)
    for obs, trace in sorted(result.traces.items()):
        path = _write(_out_dir(args) / f"trace_{obs}.csv", format_trace(trace))
        print(f"wrote {path} ({len(trace.events)} events)")
    return 0


def _sweep_spec(args) -> SweepSpec:
    if args.rerun:
        spec, _ = read_sweep_csv(_read(args.rerun))
        if spec is None:
            raise CliError(f"{args.rerun} carries no embedded sweep config")
        return SweepSpec.from_json(spec.to_json(), out_dir=str(_out_dir(args)))
    dens = tuple(args.densities) if args.densities else default_densities(args.points, args.max_links)
    return SweepSpec(
        densities=dens, seeds=args.seeds, mechanisms=tuple(args.mechanisms), out_dir=str(_out_dir(args)),
        base_seed=args.seed, duration=args.duration, backoff=args.backoff, timing=args.timing,
        ack_increments=args.ack_increments, audit=not args.no_audit,
    )


def cmd_sweep(args) -> int:
    spec = _sweep_spec(args)
    records = run_sweep(spec, args.workers)
    points = summarize(records)
    path = _write(Path(spec.out_dir) / args.name, format_sweep_csv(spec, points))
    if args.records:
        lines = [json.dumps({"mechanism": r.mechanism, "density": r.density, "seed": r.seed,
                             "metrics": json.loads(r.metrics.to_json())}, sort_keys=True) for r in records]
        _write(Path(spec.out_dir) / (Path(args.name).stem + ".runs.jsonl"), "\n".join(lines) + "\n")
    mechs = spec.mechanisms
    for mech in mechs:
        p = densest(points, mech)
        print(
            f"{mech}: densest point {p.density:.3f} ({p.n_links} links) "
            f"reuse {p.spatial_reuse:.4f} +- {p.spatial_reuse_std:.4f}, "
            f"throughput {p.throughput / 1e6:.3f} Mb/s, collisions {p.collisions}"
        )
    if {"ipcs", "conventional"} <= set(mechs):
        a, b = densest(points, "ipcs"), densest(points, "conventional")
        print(
            f"improvement at densest point: reuse x{ratio(a.spatial_reuse, b.spatial_reuse):.3f}, "
            f"throughput x{ratio(a.throughput, b.throughput):.3f}"
        )
    print(f"wrote {path}")
    return 0


def cmd_plot(args) -> int:
    text = _read(args.csv)
    try:
        svg = render_csv(text)
    except ValueError as e:
        raise CliError(f"{args.csv}: {e}") from e
    target = Path(args.output) if args.output else _out_dir(args) / (Path(args.csv).stem + ".svg")
    print(f"wrote {_write(target, svg)}")
    return 0


# -- parser -----------------------------------------------------------------
def _add_globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=d(0), help="base RNG seed (default 0)")
    p.add_argument("--config", default=d(None), help="INI file with per-subcommand defaults")
    p.add_argument("--out-dir", default=d("."), help=f"output directory (env {OUT_ENV})")
    p.add_argument("--workers", type=int, default=d(1), help="worker processes for sweeps")


def _add_sim_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mechanism", choices=[m.value for m in Mechanism], default="ipcs")
    p.add_argument("--links", type=int, default=200)
    p.add_argument("--duration", type=float, default=0.3)
    p.add_argument("--backoff", choices=("slotted", "continuous"), default="slotted")
    p.add_argument("--timing", choices=sorted(TIMINGS), default="dot11b")
    p.add_argument("--ack-increments", action="store_true",
                   help="incremental sensing also reacts to ACK power steps")
    p.add_argument("--no-rs", action="store_true", help="receivers never re-lock onto a stronger frame")
    p.add_argument("--topology", help="explicit topology file instead of a random draw")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="safecs", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"safecs {__version__}")
    _add_globals(p, suppress=False)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("csr", help="safe carrier-sensing range table")
    _add_globals(s, True)
    s.add_argument("--gamma", type=float, nargs="+", default=list(DEFAULT_GAMMAS))
    s.add_argument("--alpha", type=float, nargs="+", default=list(DEFAULT_ALPHAS))
    s.add_argument("--d-max", type=float, default=1.0)
    s.add_argument("-o", "--output", default="-", help="file name under --out-dir, or - for stdout")
    s.set_defaults(func=cmd_csr)

    s = sub.add_parser("scenario", help="verify a canonical worked example")
    _add_globals(s, True)
    s.add_argument("name", choices=SCENARIO_NAMES + ("all",))
    s.set_defaults(func=cmd_scenario)

    s = sub.add_parser("sim", help="one simulation run, saved as a run artifact")
    _add_globals(s, True)
    _add_sim_options(s)
    s.add_argument("--name", default="run")
    s.add_argument("--event-log", action="store_true", help="also write the event log")
    s.set_defaults(func=cmd_sim)

    s = sub.add_parser("trace", help="per-observer power traces from one run")
    _add_globals(s, True)
    _add_sim_options(s)
    s.add_argument("--observer", dest="observers", type=int, action="append", default=[])
    s.set_defaults(func=cmd_trace)

    s = sub.add_parser("sweep", help="Monte-Carlo density sweep")
    _add_globals(s, True)
    s.add_argument("--points", type=int, default=20)
    s.add_argument("--max-links", type=int, default=200)
    s.add_argument("--densities", type=float, nargs="+")
    s.add_argument("--seeds", type=int, default=30)
    s.add_argument("--mechanisms", nargs="+", choices=[m.value for m in Mechanism],
                   default=["ipcs", "conventional"])
    s.add_argument("--duration", type=float, default=0.3)
    s.add_argument("--backoff", choices=("slotted", "continuous"), default="slotted")
    s.add_argument("--timing", choices=sorted(TIMINGS), default="dot11b")
    s.add_argument("--ack-increments", action="store_true")
    s.add_argument("--no-audit", action="store_true", help="skip the hidden-collision audit")
    s.add_argument("--name", default="sweep.csv")
    s.add_argument("--records", action="store_true", help="also write per-run metrics (JSON lines)")
    s.add_argument("--rerun", metavar="CSV", help="repeat the sweep embedded in an emitted table")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("plot", help="SVG chart from a csr or sweep table")
    _add_globals(s, True)
    s.add_argument("csv")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_plot)
    return p


def _convert(action: argparse.Action, raw: str):
    if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
        return configparser.ConfigParser.BOOLEAN_STATES[raw.strip().lower()]
    conv = action.type or str
    if action.nargs in ("+", "*") or isinstance(action, argparse._AppendAction):
        vals = [conv(v) for v in raw.replace(",", " ").split()]
        if action.choices:
            bad = [v for v in vals if v not in action.choices]
            if bad:
                raise CliError(f"invalid choice(s) {bad} for {action.dest}")
        return vals
    v = conv(raw.strip())
    if action.choices and v not in action.choices:
        raise CliError(f"invalid choice {v!r} for {action.dest}")
    return v


def _apply_config(parser: argparse.ArgumentParser, path: str) -> None:
    cp = configparser.ConfigParser()
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as e:
        raise CliError(f"cannot read config {path}: {e.strerror or e}") from e
    except configparser.Error as e:
        raise CliError(f"malformed config {path}: {e}") from e
    subs = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction)).choices
    for section in cp.sections():
        if section == "global":
            targets = [parser]
        elif section in subs:
            targets = [subs[section]]
        else:
            raise CliError(f"config {path}: unknown section [{section}]")
        for target in targets:
            actions = {a.dest: a for a in target._actions}
            for key, raw in cp.items(section):
                dest = key.replace("-", "_")
                if dest not in actions or dest in ("help", "config"):
                    raise CliError(f"config {path}: unknown key {key!r} in [{section}]")
                target.set_defaults(**{dest: _convert(actions[dest], raw)})


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        pre = argparse.ArgumentParser(add_help=False)
        pre.add_argument("--config")
        known, _ = pre.parse_known_args(argv)
        if known.config:
            _apply_config(parser, known.config)
        explicit_out = any(a == "--out-dir" or a.startswith("--out-dir=") for a in argv)
        args = parser.parse_args(argv)
        if not explicit_out and os.environ.get(OUT_ENV):
            args.out_dir = os.environ[OUT_ENV]
        return args.func(args)
    except CliError as e:
        print(f"safecs: error: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"safecs: error: {e}", file=sys.stderr)
        return 2
