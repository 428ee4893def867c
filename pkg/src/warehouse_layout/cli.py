"""Command line entry point (``warehouse-layout``)."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .configs import SHIPPED, shipped_config, write_shipped
from .domain import Layout, WarehouseConfig, load_config
from .evolution import ALGORITHMS, EAParams, desk_params, noble_allocation, full_params
from .harness import (
    ALLOCATION_FRACTIONS,
    ablation_csv,
    ablation_heatmap,
    brute_force_oracle,
    compare_algorithms,
    evolve_to_directory,
    sweep_allocation,
    sweep_csv,
    write_outcome,
)
from .simulator import route_table_for, run

log = logging.getLogger("warehouse_layout")

DEFAULT_COMPARE = ("random", "heuristic", "simu", "simu-ind", "simu-gen", "tlea")


def resolve_config(text: str) -> WarehouseConfig:
    """A config file path, or the name of a shipped instance."""
    path = Path(text)
    if path.exists():
        return load_config(path)
    if text in SHIPPED:
        return shipped_config(text)
    raise SystemExit(f"no config file {text!r} and no shipped config of that name ({', '.join(SHIPPED)})")


def resolve_layout(text: str) -> Layout:
    if text.startswith("@"):
        text = Path(text[1:]).read_text()
    return Layout.parse(text.strip())


def make_params(args) -> EAParams:
    base = full_params() if args.scale == "full" else desk_params()
    overrides = {}
    if getattr(args, "generations", None) is not None:
        overrides["generations"] = args.generations
    if getattr(args, "updates", None) is not None:
        overrides["nU"] = args.updates
    params = replace(base, **overrides)
    if getattr(args, "noble_fraction", None) is not None:
        params = noble_allocation(params, args.noble_fraction)
    return params


def _write(out: Path, name: str, text: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)
    print(f"wrote {out / name}")


def cmd_simulate(args) -> int:
    cfg = resolve_config(args.config)
    layout = resolve_layout(args.layout)
    if args.dump_routes:
        route_table_for(cfg).to_csv(args.dump_routes)
        print(f"wrote {args.dump_routes}")
    outcome = run(cfg, layout, args.seed)
    manifest = write_outcome(args.out, outcome, {"layout": str(layout), "config_digest": cfg.digest(),
                                                 "config": cfg.to_dict()})
    print(json.dumps({k: manifest[k] for k in ("seed", "reward", "loads", "unloads")}))
    return 0


def cmd_evolve(args) -> int:
    cfg = resolve_config(args.config)
    params = make_params(args)
    result, manifest = evolve_to_directory(cfg, args.algo, params, args.seed, args.out)
    print(json.dumps(manifest.results))
    return 0


def cmd_compare(args) -> int:
    cfg = resolve_config(args.config)
    comp = compare_algorithms(cfg, args.algos, args.runs, args.seed, make_params(args))
    out = Path(args.out)
    _write(out, "report.csv", comp.report.to_csv())
    lines = ["algorithm,run,seed,reward,best_layout,best_fitness,final_noble_purity"]
    for algo, runs in comp.runs.items():
        for r in runs:
            lines.append(f"{algo},{r.run},{r.seed},{r.reward:.4f},\"{r.best_layout}\",{r.best_fitness},{r.final_purity:.6f}")
    _write(out, "runs.csv", "\n".join(lines) + "\n")
    print(comp.report.to_csv(), end="")
    return 0


def cmd_ablate(args) -> int:
    cfg = resolve_config(args.config)
    seeds = list(range(args.seed, args.seed + args.seeds))
    rows = ablation_heatmap(cfg, args.counts, seeds, held_out=args.held_out, updates=args.updates,
                            params=make_params(args))
    _write(Path(args.out), "report.csv", ablation_csv(rows))
    return 0


def cmd_sweep(args) -> int:
    cfg = resolve_config(args.config)
    rows = sweep_allocation(cfg, args.fractions, args.runs, args.seed, make_params(args))
    _write(Path(args.out), "report.csv", sweep_csv(rows))
    print(sweep_csv(rows), end="")
    return 0


def cmd_oracle(args) -> int:
    cfg = resolve_config(args.config)
    ranked = brute_force_oracle(cfg, args.seeds)
    lines = ["rank,layout,mean_fitness"]
    lines += [f"{i + 1},\"{l}\",{m:.4f}" for i, (l, m) in enumerate(ranked)]
    _write(Path(args.out), "report.csv", "\n".join(lines) + "\n")
    best, mean = ranked[0]
    print(f"best layout {best} with mean fitness {mean:.2f} over {len(args.seeds)} seeds")
    return 0


def cmd_gen_config(args) -> int:
    unknown = sorted(set(args.names) - set(SHIPPED))
    if unknown:
        raise SystemExit(f"unknown config(s) {', '.join(unknown)}; choose from {', '.join(sorted(SHIPPED))}")
    for path in write_shipped(args.out, args.names or None):
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="warehouse-layout", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, out_default):
        p.add_argument("--config", default="desk", help="config JSON path or shipped name (desk, tiny, large)")
        p.add_argument("--seed", type=int, default=0, help="master seed")
        p.add_argument("--out", default=out_default, help="output directory")

    def scaled(p):
        p.add_argument("--scale", choices=("desk", "full"), default="desk",
                       help="optimizer budget preset (default: desk)")
        p.add_argument("--generations", type=int)
        p.add_argument("--updates", type=int, help="surrogate updates per generation")

    p = sub.add_parser("simulate", help="run one seeded simulation")
    common(p, "runs/simulate")
    p.add_argument("--layout", required=True, help="comma separated destinations, or @file")
    p.add_argument("--dump-routes", metavar="CSV", help="also write the route table as CSV")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("evolve", help="run one optimizer")
    common(p, "runs/evolve")
    scaled(p)
    p.add_argument("--algo", choices=sorted(ALGORITHMS), default="tlea")
    p.add_argument("--noble-fraction", type=float, help="share of simulations spent on noble children")
    p.set_defaults(fn=cmd_evolve)

    p = sub.add_parser("compare", help="repeated runs of several optimizers with t-tests")
    common(p, "runs/compare")
    scaled(p)
    p.add_argument("--algos", nargs="+", choices=sorted(ALGORITHMS), default=list(DEFAULT_COMPARE))
    p.add_argument("--runs", type=int, default=10)
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("ablate", help="surrogate accuracy with and without the heatmap head")
    common(p, "runs/ablate")
    p.add_argument("--scale", choices=("desk", "full"), default="desk")
    p.add_argument("--counts", type=int, nargs="+", default=[500, 1000, 2000])
    p.add_argument("--seeds", type=int, default=10, help="number of seeds, starting at --seed")
    p.add_argument("--held-out", type=int, default=500)
    p.add_argument("--updates", type=int, default=5000)
    p.set_defaults(fn=cmd_ablate)

    p = sub.add_parser("sweep", help="TLEA over noble simulation shares")
    common(p, "runs/sweep")
    scaled(p)
    p.add_argument("--fractions", type=float, nargs="+", default=list(ALLOCATION_FRACTIONS))
    p.add_argument("--runs", type=int, default=10)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("oracle", help="exhaustively rank every layout of a small config")
    common(p, "runs/oracle")
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("gen-config", help="write the shipped configs as JSON")
    p.add_argument("--out", default="configs")
    p.add_argument("names", nargs="*", help=f"configs to write (default: all of {', '.join(sorted(SHIPPED))})")
    p.set_defaults(fn=cmd_gen_config)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
