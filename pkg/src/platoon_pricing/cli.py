"""Command line entry point: ``platoon-pricing <command>``.

Commands: ``gen-network``, ``gen-scenario``, ``run``, ``sweep``, ``report``.
Experiment settings come from a TOML config (see ``configs/default.toml``);
flags override config values.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from fractions import Fraction

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .metrics import plot_tables, read_sweep_table, summarize, sweep_results, sweep_table
from .money import fmt_exact, per_hour, to_fraction
from .network import (
    FORMAT_VERSION,
    NetworkError,
    generate_network,
    generate_scenario,
    load_network,
    load_scenario,
    write_network,
    write_scenario,
)
from .pricing import PricingParams
from .sim import ledger_tables, run

DEFAULTS = {
    "seed": 1,
    "network_file": "",
    "network_seed": 7,
    "n_hubs": 84,
    "connectivity": 3,
    "travel_time_min_s": 1800,
    "travel_time_max_s": 14400,
    "trucks": [100, 200, 300, 400, 500],
    "start_window_s": [8 * 3600, 12 * 3600],
    "waiting_budget_fraction": "0.1",
    "xi_sek_per_hour": "57.5",
    "epsilon_sek_per_hour": "260",
    "max_trip_duration_s": 9 * 3600,
    "alphas": "0:1:0.1",
    "out": "out",
    "jobs": 1,
}


class ConfigError(ValueError):
    pass


def parse_alphas(value) -> list[Fraction]:
    """``"0:1:0.1"`` (inclusive range), ``"0,0.5,1"`` or a list of numbers."""
    if isinstance(value, (list, tuple)):
        values = [to_fraction(v) for v in value]
    elif isinstance(value, str) and ":" in value:
        lo, hi, step = (to_fraction(p) for p in value.split(":"))
        if step <= 0:
            raise ConfigError("alpha step must be > 0")
        values, a = [], lo
        while a <= hi:
            values.append(a)
            a += step
    elif isinstance(value, str):
        values = [to_fraction(p) for p in value.split(",") if p.strip()]
    else:
        values = [to_fraction(value)]
    if not values:
        raise ConfigError("no alpha values given")
    bad = [v for v in values if not 0 <= v <= 1]
    if bad:
        raise ConfigError(f"alphas must lie in [0, 1], got {[str(b) for b in bad]}")
    return sorted(set(values))


def parse_trucks(value) -> list[int]:
    """``100``, ``"100,200"``, ``"100..500"`` (with ``step``) or a list."""
    if isinstance(value, int):
        return [value]
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    value = str(value)
    if ".." in value:
        lo, rest = value.split("..", 1)
        hi, _, step = rest.partition(":")
        return list(range(int(lo), int(hi) + 1, int(step or 100)))
    return [int(v) for v in value.split(",") if v.strip()]


def load_config(path: str | None, overrides: dict) -> dict:
    cfg = dict(DEFAULTS)
    base = os.getcwd()
    if path:
        if not os.path.exists(path):
            raise ConfigError(f"config file {path} does not exist")
        with open(path, "rb") as fh:
            try:
                doc = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from None
        unknown = sorted(set(doc) - set(DEFAULTS))
        if unknown:
            raise ConfigError(f"{path}: unknown keys {unknown}")
        cfg.update(doc)
        base = os.path.dirname(os.path.abspath(path))
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    if cfg["network_file"] and not os.path.isabs(cfg["network_file"]):
        cand = os.path.join(base, cfg["network_file"])
        if os.path.exists(cand):
            cfg["network_file"] = cand
    return validate_config(cfg)


def validate_config(cfg: dict) -> dict:
    if cfg.get("seed") is None:
        raise ConfigError("seed is mandatory")
    if cfg["network_file"] and not os.path.exists(cfg["network_file"]):
        raise ConfigError(f"network file {cfg['network_file']} does not exist")
    cfg["alphas"] = parse_alphas(cfg["alphas"])
    cfg["trucks"] = parse_trucks(cfg["trucks"])
    if not cfg["trucks"] or min(cfg["trucks"]) < 1:
        raise ConfigError("trucks must be positive counts")
    if int(cfg["n_hubs"]) < 2:
        raise ConfigError("n_hubs must be >= 2")
    w = cfg["start_window_s"]
    if len(w) != 2 or int(w[1]) < int(w[0]):
        raise ConfigError(f"bad start_window_s {w}")
    if to_fraction(cfg["waiting_budget_fraction"]) < 0:
        raise ConfigError("waiting_budget_fraction must be >= 0")
    if int(cfg["jobs"]) < 1:
        raise ConfigError("jobs must be >= 1")
    return cfg


def _echo(cfg: dict) -> dict:
    out = {}
    for k, v in cfg.items():
        if k == "alphas":
            v = [fmt_exact(a) for a in v]
        elif isinstance(v, Fraction):
            v = fmt_exact(v)
        out[k] = v
    return out


def _network_for(cfg: dict):
    if cfg["network_file"]:
        return load_network(cfg["network_file"])
    return generate_network(
        int(cfg["n_hubs"]),
        cfg["connectivity"],
        (int(cfg["travel_time_min_s"]), int(cfg["travel_time_max_s"])),
        int(cfg["network_seed"]),
    )


def _scenario_for(cfg: dict, network, n_trucks: int):
    return generate_scenario(
        network,
        n_trucks,
        start_window=tuple(int(x) for x in cfg["start_window_s"]),
        waiting_budget_fraction=to_fraction(cfg["waiting_budget_fraction"]),
        xi=per_hour(cfg["xi_sek_per_hour"]),
        epsilon=per_hour(cfg["epsilon_sek_per_hour"]),
        max_trip_duration=int(cfg["max_trip_duration_s"]),
        seed=int(cfg["seed"]),
    )


def _write_files(root: str, files: dict[str, str]) -> None:
    for rel in sorted(files):
        path = os.path.join(root, rel)
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "w") as fh:
            fh.write(files[rel])


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


# ------------------------------------------------------------------ commands


def cmd_gen_network(args) -> int:
    if args.hubs < 2:
        raise ConfigError("--hubs must be >= 2")
    net = generate_network(args.hubs, args.connectivity, (args.tt_min, args.tt_max), args.seed or 0)
    path = args.output or os.path.join(args.out or ".", "network.json")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    print(f"{write_network(net, path)}  {path}")
    return 0


def cmd_gen_scenario(args) -> int:
    if not os.path.exists(args.network):
        raise ConfigError(f"network file {args.network} does not exist")
    trucks = args.trucks
    if args.step is not None and ".." in trucks:
        trucks = f"{trucks}:{args.step}"
    overrides = {
        "seed": args.seed,
        "trucks": trucks,
        "waiting_budget_fraction": args.fraction,
        "xi_sek_per_hour": args.xi_per_hour,
        "epsilon_sek_per_hour": args.epsilon_per_hour,
        "max_trip_duration_s": args.max_trip,
        "network_file": args.network,
    }
    cfg = load_config(args.config, overrides)
    network = load_network(args.network)
    sizes = cfg["trucks"]
    scenarios = [_scenario_for(cfg, network, m) for m in sizes]
    if len(sizes) == 1 and args.output:
        paths = [args.output]
    else:
        outdir = args.out or "."
        paths = [os.path.join(outdir, f"scenario_{m}.json") for m in sizes]
    for sc, path in zip(scenarios, paths):
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        print(f"{write_scenario(sc, path, args.network)}  {path}")
    return 0


def cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    params = PricingParams(to_fraction(args.alpha))
    events = []
    result = run(scenario, params, trace=events.append if args.trace else None)
    files = ledger_tables(result)
    row = summarize(result)
    files["summary.csv"] = sweep_table([row])
    outdir = args.out or "run_out"
    _write_files(outdir, files)
    if args.trace:
        with open(args.trace, "w") as fh:
            for rec in events:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
    sys.stdout.write(files["summary.csv"])
    return 0


def build_sweep_outputs(cfg: dict) -> dict[str, str]:
    """Every file a sweep writes, as ``relative path -> text``."""
    network = _network_for(cfg)
    files: dict[str, str] = {"network.json": network.dumps()}
    rows = []
    for m in cfg["trucks"]:
        scenario = _scenario_for(cfg, network, m)
        doc = scenario.to_dict("../network.json")
        files[f"scenarios/scenario_{m}.json"] = json.dumps(doc, indent=1) + "\n"
        for result in sweep_results(scenario, cfg["alphas"], int(cfg["jobs"])):
            rows.append(summarize(result))
            tag = f"runs/M{m}_alpha{float(result.params.alpha):.4g}"
            for name, text in ledger_tables(result).items():
                files[f"{tag}/{name}"] = text
    files["sweep.csv"] = sweep_table(rows)
    for name, text in plot_tables(rows).items():
        files[f"plotdata/{name}"] = text
    manifest = {
        "format_version": FORMAT_VERSION,
        "package_version": __version__,
        "config": _echo({k: v for k, v in cfg.items() if k not in ("out", "jobs")}),
        "network_sha256": network.digest(),
        "files": {k: _sha(v) for k, v in sorted(files.items())},
    }
    files["manifest.json"] = json.dumps(manifest, indent=1, sort_keys=True) + "\n"
    return files


def cmd_sweep(args) -> int:
    overrides = {"seed": args.seed, "out": args.out, "alphas": args.alphas, "trucks": args.trucks, "jobs": args.jobs}
    cfg = load_config(args.config, overrides)
    files = build_sweep_outputs(cfg)
    _write_files(cfg["out"], files)
    print(f"wrote {len(files)} files to {cfg['out']}")
    return 0


def format_report(rows: list[dict[str, str]]) -> str:
    cols = ("n_trucks", "alpha", "provider_profit_net", "system_utility", "avg_truck_profit",
            "avg_waiting_time", "platooning_rate")
    lines = ["  ".join(f"{c:>20}" for c in cols)]
    best: dict[str, tuple[float, str]] = {}
    for r in rows:
        lines.append("  ".join(f"{r[c]:>20}" for c in cols))
        p = float(r["provider_profit_net"])
        if r["n_trucks"] not in best or p > best[r["n_trucks"]][0]:
            best[r["n_trucks"]] = (p, r["alpha"])
    lines.append("")
    for m, (p, a) in best.items():
        lines.append(f"M={m}: provider profit peaks at alpha={a} ({p:.2f} SEK)")
    return "\n".join(lines) + "\n"


def cmd_report(args) -> int:
    path = args.sweep or os.path.join(args.out or "out", "sweep.csv")
    if not os.path.exists(path):
        raise ConfigError(f"sweep table {path} does not exist")
    sys.stdout.write(format_report(read_sweep_table(path)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--out", help="output directory")
    common.add_argument("--config", help="TOML config file")

    p = argparse.ArgumentParser(prog="platoon-pricing", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-network", parents=[common], help="generate a synthetic hub network")
    g.add_argument("--hubs", type=int, default=DEFAULTS["n_hubs"], help="number of hubs")
    g.add_argument("--connectivity", type=float, default=DEFAULTS["connectivity"], help="mean out-degree")
    g.add_argument("--tt-min", type=int, default=DEFAULTS["travel_time_min_s"], help="shortest segment, seconds")
    g.add_argument("--tt-max", type=int, default=DEFAULTS["travel_time_max_s"], help="longest segment, seconds")
    g.add_argument("-o", "--output", help="network file path")
    g.set_defaults(func=cmd_gen_network)

    s = sub.add_parser("gen-scenario", parents=[common], help="draw truck trips on a network")
    s.add_argument("--network", required=True, help="network file")
    s.add_argument("--trucks", default="100", help="count, list (100,200) or range (100..500)")
    s.add_argument("--step", type=int, help="step for a --trucks range")
    s.add_argument("--fraction", help="waiting budget as a fraction of trip time")
    s.add_argument("--xi-per-hour", help="platooning benefit, SEK per follower-hour")
    s.add_argument("--epsilon-per-hour", help="waiting loss, SEK per hour")
    s.add_argument("--max-trip", type=int, help="maximum free-flow trip, seconds")
    s.add_argument("-o", "--output", help="scenario file path (single count only)")
    s.set_defaults(func=cmd_gen_scenario)

    r = sub.add_parser("run", parents=[common], help="simulate one scenario at one alpha")
    r.add_argument("--scenario", required=True, help="scenario file")
    r.add_argument("--alpha", required=True, help="provider share in [0, 1]")
    r.add_argument("--trace", help="write solver trace records (one JSON object per line)")
    r.set_defaults(func=cmd_run)

    w = sub.add_parser("sweep", parents=[common], help="alpha sweep over all configured fleets")
    w.add_argument("--alphas", help="e.g. 0:1:0.1 or 0,0.5,1")
    w.add_argument("--trucks", help="override fleet sizes")
    w.add_argument("--jobs", type=int, help="parallel runs")
    w.set_defaults(func=cmd_sweep)

    rep = sub.add_parser("report", parents=[common], help="summarise a sweep table")
    rep.add_argument("--sweep", help="sweep.csv path (default: <out>/sweep.csv)")
    rep.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, NetworkError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
