"""Batch experiment driver.

``liemult run <config.json>`` executes the configured experiments in order,
writes one JSON report per experiment plus a summary, and exits 0 only if
every non-inconclusive assertion passed.  ``liemult list-experiments``
prints the catalog.  Reports are byte-deterministic functions of
(config, seeds, version); the parallelism degree never changes a byte.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .config import build_context, default_config, load_config, validate_config
from .errors import ConfigError
from .experiments import catalog, run_experiment
from .reporting import dump_json

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_SCHEMA = 2
EXIT_RUNTIME = 3


def _execute_entry(cfg: dict, index: int, csv_root: str | None):
    """Run one experiment entry; safe to call in a worker process."""
    entry = cfg["experiments"][index]
    ctx = build_context(cfg)
    if csv_root is not None:
        ctx["csv_dir"] = Path(csv_root) / f"{index:02d}_{entry['name']}"
    report = run_experiment(entry["name"], ctx, entry.get("params", {}), entry["seed"])
    return index, report


def _run(args) -> int:
    try:
        if args.default:
            cfg = default_config()
            validate_config(cfg)
        else:
            cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_root = str(out_dir) if cfg.get("output", {}).get("csv") else None
    entries = cfg["experiments"]

    results: dict[int, dict] = {}
    failures: list[str] = []
    try:
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                futures = [pool.submit(_execute_entry, cfg, i, csv_root)
                           for i in range(len(entries))]
                for fut in futures:
                    index, report = fut.result()
                    results[index] = report
        else:
            for i in range(len(entries)):
                index, report = _execute_entry(cfg, i, csv_root)
                results[index] = report
    except Exception as exc:  # noqa: BLE001 - runtime errors map to exit 3
        done = set(results)
        pending = [entries[i]["name"] for i in range(len(entries)) if i not in done]
        print(f"runtime error in experiment {pending[0] if pending else '?'}: {exc}",
              file=sys.stderr)
        return EXIT_RUNTIME

    summary_rows = []
    counts = {"pass": 0, "fail": 0, "inconclusive": 0}
    for index in range(len(entries)):
        report = results[index]
        report["schema_version"] = cfg["schema_version"]
        name = entries[index]["name"]
        filename = f"{index:02d}_{name}.json"
        dump_json(report, out_dir / filename)
        counts[report["status"]] += 1
        summary_rows.append({
            "index": index,
            "name": name,
            "seed": entries[index]["seed"],
            "status": report["status"],
            "file": filename,
        })
        marker = {"pass": "PASS", "fail": "FAIL", "inconclusive": "INCONCLUSIVE"}[report["status"]]
        print(f"[{marker:>12}] {index:02d} {name}")

    summary = {
        "schema_version": cfg["schema_version"],
        "version": __version__,
        "group": cfg["group"],
        "counts": counts,
        "experiments": summary_rows,
    }
    dump_json(summary, out_dir / "summary.json")
    print(f"{counts['pass']} pass, {counts['fail']} fail,"
          f" {counts['inconclusive']} inconclusive -> {out_dir}")

    if counts["fail"]:
        return EXIT_FAIL
    if counts["inconclusive"] and args.strict:
        print("strict mode: inconclusive results present", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def _list(args) -> int:
    entries = catalog()
    if args.module:
        entries = [e for e in entries if e["module"] == args.module]
    if args.json:
        dump = __import__("json").dumps(entries, indent=2, sort_keys=True)
        print(dump)
        return EXIT_OK
    for entry in entries:
        print(f"{entry['name']:28s} [{entry['module']}] {entry['verifies']}")
        required = [k for k, v in entry["params"].items() if v["required"]]
        optional = [f"{k}={entry['params'][k].get('default')}"
                    for k, v in entry["params"].items() if not v["required"]]
        if required:
            print(f"{'':30s}required: {', '.join(sorted(required))}")
        if optional:
            print(f"{'':30s}optional: {', '.join(sorted(optional))}")
    print(f"{len(entries)} experiments")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="liemult",
        description="simulate group-valued independent-increment processes and"
                    " verify their regularity properties",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment battery from a config file")
    run_p.add_argument("config", nargs="?", help="path to a JSON config")
    run_p.add_argument("--default", action="store_true",
                       help="run the built-in default battery")
    run_p.add_argument("--out", default="reports", help="output directory")
    run_p.add_argument("--jobs", type=int, default=1,
                       help="worker processes (results are independent of this)")
    run_p.add_argument("--strict", action="store_true",
                       help="treat inconclusive results as failures")
    run_p.set_defaults(func=_run)

    list_p = sub.add_parser("list-experiments", help="print the experiment catalog")
    list_p.add_argument("--json", action="store_true", help="machine-readable catalog")
    list_p.add_argument("--module", help="filter by module")
    list_p.set_defaults(func=_list)

    args = parser.parse_args(argv)
    if args.command == "run" and not args.default and not args.config:
        parser.error("run needs a config path or --default")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
