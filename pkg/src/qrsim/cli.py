"""Thin command-line client for the qrsim service.

Commands talk HTTP to the FastAPI app: against a remote server when
``--server`` is given, otherwise against an in-process instance through
the ASGI transport (no socket, same code path).  ``qrsim serve`` runs the
service standalone.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys

import httpx

from . import __version__
from .config import (ExperimentConfig, config_to_dict, default_config_toml,
                     load_config)

REQUEST_TIMEOUT = 1800.0


def _call(server: str | None, method: str, path: str, body=None):
    """One HTTP request against the remote server or the embedded app."""

    async def go():
        if server:
            async with httpx.AsyncClient(base_url=server, timeout=REQUEST_TIMEOUT) as client:
                return await client.request(method, path, json=body)
        from .service import create_app
        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(transport=transport, base_url="http://qrsim.internal",
                                     timeout=REQUEST_TIMEOUT) as client:
            return await client.request(method, path, json=body)

    return asyncio.run(go())


def _fail(payload) -> int:
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")
    return 1


def _check(resp: httpx.Response):
    if resp.status_code >= 400:
        try:
            detail = resp.json()
        except ValueError:
            detail = {"error": {"type": "HTTPError", "message": resp.text.strip()}}
        if "error" not in detail:
            detail = {"error": {"type": "HTTPError", "message": str(detail)}}
        detail["error"]["status_code"] = resp.status_code
        raise SystemExit(_fail(detail))
    return resp


def cmd_simulate(args) -> int:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    body = {"config": config_to_dict(cfg)}
    if args.scenarios:
        body["scenarios"] = [s for s in args.scenarios.split(",") if s]
    if args.out:
        body["output_dir"] = args.out
    if args.jobs is not None:
        body["jobs"] = args.jobs
    resp = _check(_call(args.server, "POST", "/simulate", body))
    report = resp.json()
    entries = report["entries"]
    errors = [e for e in entries if e["status"] != "ok"]
    print(f"mesh: {report['mesh']['nodes']} nodes, {report['mesh']['tets']} tets")
    print(f"scenarios: {len(entries)} ({len(errors)} failed)")
    for e in entries:
        if e["status"] == "ok":
            dtw = e.get("dtw")
            tail = (f"dtw_avg {dtw['dtw_avg']:.3f}  dtw_max {dtw['dtw_max']:.3f}"
                    if dtw else "(baseline)")
            print(f"  {e['name']:<30} max_act {e['activation']['max_ms']:8.2f} ms  "
                  f"dur {e['features']['duration_ms']:6.1f} ms  {tail}")
        else:
            print(f"  {e['name']:<30} ERROR {e['error']}")
    print(f"outputs in {report['output_dir']}: {', '.join(report['files'][:6])}"
          + (" ..." if len(report["files"]) > 6 else ""))
    if errors:
        return _fail({"error": {"type": "ScenarioErrors",
                                "message": ", ".join(f"{e['name']}: {e['error']}" for e in errors)}})
    return 0


def cmd_catalogue(args) -> int:
    resp = _check(_call(args.server, "GET", "/catalogue"))
    scenarios = resp.json()["scenarios"]
    if args.json:
        print(json.dumps(scenarios, indent=2, sort_keys=True))
        return 0
    print(f"scenario catalogue ({len(scenarios)} entries)\n")
    for s in scenarios:
        scar, border = s["cv_reduction"]
        print(s["name"])
        print(f"  cv_reduction: scar={scar:.2f} border={border:.2f}")
        if not s["regions"]:
            print("  regions: none (healthy)")
        for r in s["regions"]:
            c, rr = r["center"], r["radii"]
            print(f"  region: center(tm,ab,rt)=({c[0]:.3f}, {c[1]:.3f}, {c[2]:.3f}) "
                  f"radii=({rr[0]:.3f}, {rr[1]:.3f}, {rr[2]:.3f}) "
                  f"border_scale={r['border_scale']:.2f}")
        if s["territory_segments"]:
            print(f"  territory segments: {s['territory_segments']}")
        print()
    return 0


def cmd_mesh(args) -> int:
    if not args.generate:
        return _fail({"error": {"type": "UsageError", "message": "mesh requires --generate"}})
    body = {"resolution_cm": args.resolution}
    if args.config:
        cfg = load_config(args.config)
        g = cfg.geometry
        body["geometry"] = {
            "lv_outer_radius_cm": g.lv_outer_radius,
            "lv_outer_height_cm": g.lv_outer_height,
            "lv_wall_thickness_cm": g.lv_wall_thickness,
            "base_height_cm": g.base_height,
            "rv_wall_thickness_cm": g.rv_wall_thickness,
            "rv_bulge_cm": g.rv_bulge,
            "rv_ab_start": g.rv_ab_start,
            "min_transmural_layers": g.min_transmural_layers,
        }
        if not args.resolution_given:
            body["resolution_cm"] = cfg.resolution_cm
    resp = _check(_call(args.server, "POST", "/mesh/generate", body))
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(resp.text)
    lines = resp.text.count("\n")
    print(f"wrote {args.out} ({lines} lines)")
    return 0


def cmd_config(args) -> int:
    sys.stdout.write(default_config_toml())
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app
    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qrsim",
                                description="infarct scenario QRS simulation")
    p.add_argument("--version", action="version", version=f"qrsim {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the experiment sweep")
    sim.add_argument("--config", help="TOML configuration file")
    sim.add_argument("--scenarios", help="comma-separated scenario names (default: full catalogue)")
    sim.add_argument("--out", help="output directory (overrides config)")
    sim.add_argument("--jobs", type=int, help="worker pool size (overrides config)")
    sim.add_argument("--server", help="base URL of a running qrsim service")
    sim.set_defaults(func=cmd_simulate)

    cat = sub.add_parser("catalogue", help="list the scenario catalogue")
    cat.add_argument("--print", dest="print_", action="store_true",
                     help="print the catalogue report (default)")
    cat.add_argument("--json", action="store_true", help="emit JSON instead of text")
    cat.add_argument("--server", help="base URL of a running qrsim service")
    cat.set_defaults(func=cmd_catalogue)

    mesh = sub.add_parser("mesh", help="generate a synthetic mesh file")
    mesh.add_argument("--generate", action="store_true", help="generate a synthetic biventricle")
    mesh.add_argument("--out", required=True, help="output mesh file")
    mesh.add_argument("--resolution", type=float, default=0.2, help="target edge length (cm)")
    mesh.add_argument("--config", help="TOML config supplying geometry parameters")
    mesh.add_argument("--server", help="base URL of a running qrsim service")
    mesh.set_defaults(func=cmd_mesh)

    cfg = sub.add_parser("config", help="print the default configuration TOML")
    cfg.set_defaults(func=cmd_config)

    srv = sub.add_parser("serve", help="run the HTTP service")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8000)
    srv.set_defaults(func=cmd_serve)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "mesh":
        args.resolution_given = any(a.startswith("--resolution") for a in (argv or sys.argv[1:]))
    try:
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    except Exception as exc:  # surface unexpected failures machine-readably
        return _fail({"error": {"type": type(exc).__name__, "message": str(exc)}})


if __name__ == "__main__":
    sys.exit(main())
