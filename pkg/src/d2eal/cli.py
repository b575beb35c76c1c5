"""Command-line client for the simulation service.

All work happens behind the HTTP interface: by default the service runs
in-process (no socket), and `--server` points the same commands at a remote
instance started with `d2eal serve`. Results land as files in `--out`.

Exit codes: 0 success, 2 configuration/usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

import httpx

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_CONFIG):
        super().__init__(message)
        self.code = code


def _client(server: Optional[str]):
    if server:
        return httpx.Client(base_url=server, timeout=3600.0)
    import warnings

    with warnings.catch_warnings():
        # starlette warns about the installed httpx major; the in-process
        # client works fine with it
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    from .service import app

    return TestClient(app)


def _load_config_dict(path: Optional[str], args) -> dict:
    if path is None:
        from .config import benchmark_scenario

        raw = benchmark_scenario().model_dump()
    else:
        p = Path(path)
        if not p.is_file():
            raise CliError(f"config file not found: {p}")
        try:
            raw = json.loads(p.read_text())
        except json.JSONDecodeError as e:
            raise CliError(f"config file {p} is not valid JSON: {e}")
        if not isinstance(raw, dict):
            raise CliError(f"config file {p} must hold a JSON object")
    if getattr(args, "seed", None) is not None:
        raw["seed"] = args.seed
    if getattr(args, "runs", None) is not None:
        raw["num_runs"] = args.runs
    if getattr(args, "strategy", None) is not None:
        raw["fusion"] = args.strategy
    return raw


def _post(client, path: str, payload: dict) -> dict:
    resp = client.post(path, json=payload)
    if resp.status_code in (400, 422):
        raise CliError(f"invalid request: {resp.text}")
    if resp.status_code >= 500:
        raise CliError(f"run failed: {resp.text}", code=EXIT_NUMERICAL)
    resp.raise_for_status()
    return resp.json()


def _write(out_dir: Path, name: str, content: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / name).write_text(content)
    print(f"wrote {out_dir / name}")


def _write_json(out_dir: Path, name: str, payload) -> None:
    _write(out_dir, name, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def cmd_run(args) -> int:
    config = _load_config_dict(args.config, args)
    with _client(args.server) as client:
        body = _post(client, "/run", {"config": config, "seed": args.seed})
    out = Path(args.out)
    _write(out, "steps.csv", body["steps_csv"])
    _write(out, "linkdrops.csv", body["linkdrops_csv"])
    _write(out, "linkdrop_hist.csv", body["linkdrop_hist_csv"])
    _write_json(out, "summary.json", {"config": config, **body["summary"]})
    _write_json(out, "audit.json", body["audit"])
    return EXIT_OK


def cmd_montecarlo(args) -> int:
    config = _load_config_dict(args.config, args)
    with _client(args.server) as client:
        body = _post(client, "/montecarlo", {"config": config, "runs": args.runs})
    out = Path(args.out)
    _write(out, "curves.csv", body["curves_csv"])
    _write_json(out, "summary.json", {"config": config, **body["summary"]})
    return EXIT_OK


def cmd_compare(args) -> int:
    config = _load_config_dict(args.config, args)
    with _client(args.server) as client:
        body = _post(client, "/compare", {"config": config, "runs": args.runs})
    out = Path(args.out)
    _write(out, "comparison.csv", body["comparison_csv"])
    _write(out, "curves.csv", body["curves_csv"])
    _write_json(out, "summary.json", {"config": config, **body["summary"]})
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _load_config_dict(args.config, args)
    payload: dict = {"config": config, "runs": args.runs}
    if args.n_values:
        try:
            payload["n_values"] = [int(v) for v in args.n_values.split(",") if v]
        except ValueError:
            raise CliError(f"--n-values must be comma-separated integers, got {args.n_values!r}")
    if args.strategies:
        payload["strategies"] = [s for s in args.strategies.split(",") if s]
    with _client(args.server) as client:
        body = _post(client, "/sweep", payload)
    out = Path(args.out)
    _write(out, "sweep.csv", body["sweep_csv"])
    summary = {k: body[k] for k in (
        "n_values", "strategies", "runs", "per_robot_avg", "per_robot_std", "reliability_cost",
    )}
    _write_json(out, "summary.json", {"config": config, **summary})
    return EXIT_OK


def cmd_audit(args) -> int:
    config = _load_config_dict(args.config, args)
    with _client(args.server) as client:
        body = _post(client, "/audit", {"config": config, "seed": args.seed})
    _write_json(Path(args.out), "audit.json", body)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="d2eal",
        description="Cooperative target-tracking fusion simulator (client for the d2eal service)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True, runs=False, strategy=False):
        p.add_argument(
            "--config", default=None,
            help="scenario JSON file (default: the built-in six-robot benchmark)",
        )
        p.add_argument("--out", default="out", help="output directory (default: ./out)")
        p.add_argument("--server", default=None, help="remote service URL (default: in-process)")
        if seed:
            p.add_argument("--seed", type=int, default=None, help="override the config seed")
        if runs:
            p.add_argument("--runs", type=int, default=None, help="override the run count")
        if strategy:
            p.add_argument("--strategy", default=None, help="override the fusion strategy")

    p = sub.add_parser("run", help="one fully logged run (steps.csv, summary.json, audit.json)")
    common(p, strategy=True)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("montecarlo", help="seed-averaged campaign for one strategy")
    common(p, runs=True, strategy=True)
    p.set_defaults(fn=cmd_montecarlo)

    p = sub.add_parser("compare", help="all fusion strategies on one scenario")
    common(p, runs=True)
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("sweep", help="average per-robot loss versus fleet size")
    common(p, runs=True)
    p.add_argument("--n-values", default=None, help="comma-separated fleet sizes")
    p.add_argument("--strategies", default=None, help="comma-separated strategies")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("audit", help="regret-bound and convergence audit of one run")
    common(p, strategy=True)
    p.set_defaults(fn=cmd_audit)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8018)
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    except httpx.HTTPError as e:
        print(f"error: service request failed: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
