"""Batch front-end: read a config document, run one command, write artifacts.

The CLI is a thin client of the service layer: it validates the config
against the same request models and either dispatches in-process or POSTs
to a running service (--server).  Artifacts land in --out:

* report.json   -- the command report (byte-identical across runs with --no-meta)
* values.csv    -- state coordinate/index and value, for solve/limit commands
* trace.csv     -- residual trace (solves) or per-n diagnostics (limits), with --trace-csv
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .errors import VardpError
from .service.app import ROUTES
from .service.handlers import COMMANDS, run_command


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vardp",
        description="Variable-discount dynamic programming solver",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, metavar="PATH",
                        help="JSON config document (see README for the schema)")
    parser.add_argument("--out", default=".", metavar="DIR",
                        help="directory for report.json and CSV artifacts")
    parser.add_argument("--tol", type=float, default=None,
                        help="override the command's tolerance")
    parser.add_argument("--max-iter", type=int, default=None,
                        help="override the iteration budget")
    parser.add_argument("--schedule", default=None, metavar="N1,N2,...",
                        help="override the vanishing-discount schedule")
    parser.add_argument("--no-meta", action="store_true",
                        help="omit timestamps for byte-identical reports")
    parser.add_argument("--trace-csv", action="store_true",
                        help="also write trace.csv")
    parser.add_argument("--server", default=None, metavar="URL",
                        help="POST to a running service instead of solving in-process")
    return parser


def _merge_options(payload: dict, args) -> dict:
    opts = dict(payload.get("options") or {})
    if args.tol is not None:
        opts["tol"] = args.tol
    if args.max_iter is not None:
        opts["max_iter"] = args.max_iter
    if args.schedule is not None:
        try:
            opts["schedule"] = [int(s) for s in args.schedule.split(",") if s.strip()]
        except ValueError:
            raise VardpError(f"--schedule must be comma-separated integers, got {args.schedule!r}")
    if args.no_meta:
        opts["no_meta"] = True
    if opts:
        payload = {**payload, "options": opts}
    return payload


def _post(server: str, command: str, payload: dict) -> dict:
    import httpx

    url = server.rstrip("/") + ROUTES[command]
    resp = httpx.post(url, json=payload, timeout=600.0)
    if resp.status_code != 200:
        raise VardpError(f"service returned {resp.status_code}: {resp.text}")
    return resp.json()


def _write_values_csv(path: Path, report: dict) -> None:
    results = report.get("results", {})
    if not any(k in results for k in ("values", "limit_function", "histories", "cycle")):
        return
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        if "values" in results and "states" in results:
            writer.writerow(["state", "value"])
            for s, v in zip(results["states"], results["values"]):
                writer.writerow([s, repr(float(v))])
        elif "limit_function" in results and "states" in results:
            writer.writerow(["state", "value"])
            for s, v in zip(results["states"], results["limit_function"]):
                writer.writerow([s, repr(float(v))])
        elif "histories" in results:
            writer.writerow(["origin", "actions", "value", "tail_bound"])
            for row in results["histories"]:
                writer.writerow([row["origin"], " ".join(map(str, row["actions"])),
                                 repr(float(row["value"])), repr(float(row["tail_bound"]))])
        elif "cycle" in results:
            writer.writerow(["state", "action", "weight"])
            for arc in results["cycle"]:
                writer.writerow([arc["state"], arc["action"], repr(float(arc["weight"]))])


def _write_trace_csv(path: Path, report: dict) -> None:
    diagnostics = report.get("diagnostics", {})
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        if "entries" in diagnostics:
            writer.writerow(["n", "sup_value", "ubar", "inner_iterations", "inner_residual"])
            for e in diagnostics["entries"]:
                writer.writerow([e["n"], repr(float(e["sup_value"])), repr(float(e["ubar"])),
                                 e["iterations"], repr(float(e["inner_residual"]))])
        elif "trace" in diagnostics:
            writer.writerow(["iteration", "update", "certificate"])
            for k, d, c in diagnostics["trace"]:
                writer.writerow([k, repr(float(d)), repr(float(c))])


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        try:
            payload = json.loads(Path(args.config).read_text())
        except FileNotFoundError:
            raise VardpError(f"config file not found: {args.config}")
        except json.JSONDecodeError as exc:
            raise VardpError(f"config is not valid JSON at line {exc.lineno}: {exc.msg}")
        payload = _merge_options(payload, args)

        if args.server:
            report = _post(args.server, args.command, payload)
        else:
            report = run_command(args.command, payload).model_dump(exclude_none=True)
    except VardpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pydantic validation and friends
        print(f"error: {exc}", file=sys.stderr)
        return 1

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report_text = json.dumps(report, indent=2, sort_keys=True)
    (out / "report.json").write_text(report_text + "\n")
    _write_values_csv(out / "values.csv", report)
    if args.trace_csv:
        _write_trace_csv(out / "trace.csv", report)

    status = report.get("status", "ok")
    print(f"{args.command}: {status} (report at {out / 'report.json'})")
    return 0 if status == "ok" else 2


if __name__ == "__main__":
    sys.exit(main())
