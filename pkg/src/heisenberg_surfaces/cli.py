"""Command-line front end.

Usage::

    heisenberg-surfaces analyze --surface helicoid --grid 41 --out frames.csv
    heisenberg-surfaces trace --surface helicoid --eps 0,0.5 --arc -1,1 --out curves.csv
    heisenberg-surfaces area --surface "vertical_plane(1)" --region 0,1,0,1
    heisenberg-surfaces variation --surface "u_lambda(1)" --bump 0.5,0,0.3,0.3 --direction nu_h --method all
    heisenberg-surfaces stability --surface helicoid --k-max 64
    heisenberg-surfaces verify [--only 1,5,9] [--inject-control]

Negative ranges need the ``=`` form (``--arc=-1,1``).  Every option may also come from ``--config file.json`` whose keys are the long option
names (``k_max`` or ``k-max``); options given on the command line win.  Exit codes:
0 success, 1 failed verification, 2 bad configuration, 3 computation error.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import acceptance
from . import characteristic as ch
from . import codazzi as cz
from . import surface as sf
from . import variation as vr
from .errors import DomainError, HeisenbergError, SpecError

__all__ = ["main", "build_parser", "resolve_config"]

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_COMPUTE = 0, 1, 2, 3

DEFAULTS = {
    "surface": None, "region": None, "grid": None, "tol": None, "out": None, "k_max": 64,
    "start": None, "arc": "-1,1", "step": None, "eps": None, "bump": None, "direction": "graph",
    "method": "all", "only": None, "inject_control": False,
}


def _g(x):
    return f"{float(x):.9g}"


def _floats(text, n=None, what="value"):
    if isinstance(text, (list, tuple)):
        vals = [float(v) for v in np.ravel(np.asarray(text, dtype=float))]
    else:
        try:
            vals = [float(v) for v in str(text).replace(" ", "").split(",") if v != ""]
        except ValueError as exc:
            raise SpecError(f"bad {what} {text!r}") from exc
    if n is not None and len(vals) != n:
        raise SpecError(f"{what} needs {n} numbers, got {text!r}")
    return vals


def _region(text):
    if text is None:
        return None
    a, b, c, d = _floats(text, 4, "region")
    if not (a < b and c < d):
        raise SpecError(f"empty region {text!r}")
    return ((a, b), (c, d))


def _grid(text, default):
    if text is None:
        return default
    vals = [int(v) for v in _floats(text, what="grid")]
    if len(vals) == 1:
        vals = vals * 2
    if len(vals) != 2 or min(vals) < 2:
        raise SpecError(f"grid needs >= 2 nodes per axis, got {text!r}")
    return tuple(vals)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="heisenberg-surfaces",
                                description="Frames, characteristics, area and stability of surfaces in H^1.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON file with option values")
        sp.add_argument("--surface", help="built-in name such as 'helicoid', a JSON spec file or inline JSON")
        sp.add_argument("--region", help="p1min,p1max,p2min,p2max (default: chart domain)")
        sp.add_argument("--grid", help="nodes per axis, 'n' or 'n1,n2'")
        sp.add_argument("--tol", type=float, help="singular tolerance for |N_h|")
        sp.add_argument("--out", help="output file")
        return sp

    common(sub.add_parser("analyze", help="frame fields on a grid"))
    tr = common(sub.add_parser("trace", help="trace characteristic curves"))
    tr.add_argument("--start", help="p1,p2 start parameter; repeat with ';'")
    tr.add_argument("--eps", help="comma separated ruling parameters (start at s=0)")
    tr.add_argument("--arc", help="smin,smax arclength range")
    tr.add_argument("--step", type=float, help="arclength step")
    common(sub.add_parser("area", help="sub-Riemannian area"))
    va = common(sub.add_parser("variation", help="first variation under a bump"))
    va.add_argument("--bump", help="c1,c2,r1,r2 of a polynomial bump in parameters")
    va.add_argument("--direction", help="graph | nu_h | z | s | normal | x | y | t")
    va.add_argument("--method", help="graph | general | H | flow | fd | all")
    st = common(sub.add_parser("stability", help="index form or instability sweep"))
    st.add_argument("--k-max", dest="k_max", type=int)
    st.add_argument("--bump", help="c1,c2,r1,r2 test function for non-ruled charts")
    ve = common(sub.add_parser("verify", help="run the acceptance suite"))
    ve.add_argument("--only", help="comma separated check numbers (empty runs none)")
    ve.add_argument("--inject-control", dest="inject_control", action="store_true", default=None,
                    help="declare u=x+0.1x^2 stationary; the straightness check must then fail")
    return p


def resolve_config(args: argparse.Namespace) -> dict:
    """Defaults < JSON config < command-line flags."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise SpecError(f"config file {path} does not exist")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise SpecError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise SpecError("config must be a JSON object")
        for k, v in data.items():
            key = k.replace("-", "_")
            if key not in cfg and key != "command":
                raise SpecError(f"unknown config key {k!r}")
            cfg[key] = v
    for k, v in vars(args).items():
        if k not in ("config", "command") and v is not None:
            cfg[k] = v
    cfg["command"] = args.command
    return cfg


def _chart(cfg, required=True):
    if cfg.get("surface") is None:
        if required:
            raise SpecError("--surface is required")
        return None
    spec = cfg["surface"]
    if isinstance(spec, str) and spec.lstrip().startswith("{"):
        try:
            spec = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise SpecError(f"inline surface spec is not valid JSON ({exc})") from exc
    return sf.load_surface(spec if isinstance(spec, dict) else str(spec))


def _surface_name(cfg, chart):
    s = cfg.get("surface")
    return s if isinstance(s, str) else (chart.name or type(chart).__name__)


def _emit(text, out=None):
    if out:
        Path(out).write_text(text + "\n")
    print(text)


# ---------------------------------------------------------------------------
# commands

def cmd_analyze(cfg) -> int:
    chart = _chart(cfg)
    region = _region(cfg["region"]) or chart.domain
    chart.check_region(region)
    grid = _grid(cfg["grid"], (41, 41))
    tol = cfg["tol"] if cfg["tol"] is not None else sf.SINGULAR_TOL
    _, _, P = sf.param_grid(region, grid)
    ff = sf.frame_field(chart, P)
    regular = ff.nh > tol
    q = np.full(grid, np.nan)
    H = np.full(grid, np.nan)
    if np.any(regular):
        q[regular] = vr.q_function(chart, P[regular])
        H[regular] = vr.mean_curvature(chart, P[regular])
    rows = zip(P.reshape(-1, 2), ff.points.reshape(-1, 3), ff.nh.ravel(), ff.nt.ravel(), q.ravel(), H.ravel())
    if cfg["out"]:
        with open(cfg["out"], "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["p1", "p2", "x", "y", "t", "nh", "nt", "q", "H"])
            for prm, pt, nh, nt, qq, hh in rows:
                w.writerow([_g(v) for v in (*prm, *pt, nh, nt, qq, hh)])
    summary = {"surface": _surface_name(cfg, chart), "region": region, "grid": grid,
               "singular_params": P[~regular].tolist(),
               "q_verdict": cz.q_dichotomy(q[regular]) if np.any(regular) else "undefined",
               "q_range": [float(np.nanmin(q)), float(np.nanmax(q))] if np.any(regular) else None,
               "H_max": float(np.nanmax(np.abs(H))) if np.any(regular) else None}
    if isinstance(chart, sf.RuledChart):
        eps = np.linspace(region[0][0], region[0][1], grid[0])
        s0 = min(max(0.0, region[1][0]), region[1][1])
        summary["q_axis"] = {"s": s0, "eps": eps.tolist(),
                             "q": vr.q_function(chart, np.stack([eps, np.full_like(eps, s0)], -1)).tolist()}
    if cfg["out"]:
        Path(cfg["out"]).with_suffix(".json").write_text(vr.report_json(summary) + "\n")
    print(vr.report_json(summary))
    return EXIT_OK


def cmd_trace(cfg) -> int:
    chart = _chart(cfg)
    arc = tuple(_floats(cfg["arc"], 2, "arc"))
    starts, eps_vals = [], []
    if cfg["eps"] is not None:
        for e in _floats(cfg["eps"], what="eps"):
            starts.append((e, 0.0))
            eps_vals.append(e)
    if cfg["start"] is not None:
        for chunk in str(cfg["start"]).split(";"):
            starts.append(tuple(_floats(chunk, 2, "start")))
            eps_vals.append(float("nan"))
    if not starts:
        raise SpecError("trace needs --start or --eps")
    tol = cfg["tol"] if cfg["tol"] is not None else sf.SINGULAR_TOL
    curves = [ch.trace_characteristic(chart, s0, arc=arc, step=cfg["step"], singular_tol=tol) for s0 in starts]
    if cfg["out"]:
        ch.write_curves_csv(cfg["out"], curves, eps_vals)
    summary = {"surface": _surface_name(cfg, chart),
               "curves": [{"start": list(s0), "samples": len(c), "truncated": c.truncated,
                           "horizontality_residual": c.horizontality(),
                           "straightness_residual": ch.straightness_residual(c)} for s0, c in zip(starts, curves)]}
    print(vr.report_json(summary))
    return EXIT_OK


def cmd_area(cfg) -> int:
    chart = _chart(cfg)
    region = _region(cfg["region"]) or chart.domain
    grid = _grid(cfg["grid"], vr.DEFAULT_GRID)
    value = vr.area(chart, region, grid)
    rep = vr.make_report(_surface_name(cfg, chart), region, "area", value,
                         {"riemannian_area": vr.riemannian_area(chart, region, grid)}, grid)
    _emit(vr.report_json(rep), cfg["out"])
    return EXIT_OK


def _bump(cfg, region):
    if cfg.get("bump") is None:
        (a, b), (c, d) = region
        return vr.bump((0.5 * (a + b), 0.5 * (c + d)), (0.3 * (b - a), 0.3 * (d - c)), power=8)
    c1, c2, r1, r2 = _floats(cfg["bump"], 4, "bump")
    return vr.bump((c1, c2), (r1, r2), power=8)


def cmd_variation(cfg) -> int:
    chart = _chart(cfg)
    region = _region(cfg["region"]) or chart.domain
    grid = _grid(cfg["grid"], vr.DEFAULT_GRID)
    phi = _bump(cfg, region)
    direction = cfg["direction"]
    graph_like = direction == "graph"
    if graph_like and not isinstance(chart, sf.IntrinsicGraph):
        raise SpecError("direction 'graph' needs an intrinsic graph; use nu_h, z, s, normal, x, y or t")
    U = vr.GraphBumpField(phi) if graph_like else vr.SurfaceFunctionField(phi, direction)
    g = vr.SurfaceGrid(chart, region, grid)
    methods = {"general": lambda: vr.first_variation_general(chart, U, grid=g),
               "H": lambda: vr.first_variation_H(chart, U, grid=g)}
    if graph_like:
        # the flow route needs an ambient extension of U
        methods["flow"] = lambda: vr.first_variation_flow(chart, U, grid=g)
        methods["graph"] = lambda: vr.first_variation_graph(chart, phi, grid=g)
        methods["fd"] = lambda: vr.first_variation_graph_fd(chart, phi, grid=g)
    wanted = list(methods) if cfg["method"] == "all" else [cfg["method"]]
    for m in wanted:
        if m not in methods:
            raise SpecError(f"method {m!r} not available here; choose from {sorted(methods)} or all")
    terms = {m: methods[m]() for m in wanted}
    vals = list(terms.values())
    rep = vr.make_report(_surface_name(cfg, chart), region, "first_variation", vals[0], terms, grid,
                         {"spread": max(vals) - min(vals)})
    _emit(vr.report_json(rep), cfg["out"])
    return EXIT_OK


def cmd_stability(cfg) -> int:
    chart = _chart(cfg)
    k_max = int(cfg["k_max"])
    if k_max < 1:
        raise SpecError("--k-max must be >= 1")
    if isinstance(chart, sf.RuledChart) and cfg.get("bump") is None:
        res = vr.instability_search(chart, k_max=k_max)
        rep = vr.make_report(_surface_name(cfg, chart), chart.domain, "instability_search",
                             res.first_negative_k, res.as_dict(), None, {"q_check": res.q_check}, res.verdict)
    else:
        region = _region(cfg["region"]) or chart.domain
        grid = _grid(cfg["grid"], vr.DEFAULT_GRID)
        r = vr.stability_form(chart, _bump(cfg, region), region, grid)
        rep = vr.make_report(_surface_name(cfg, chart), region, "stability_form", r.Q_value, r.as_dict(), grid,
                             None, r.verdict)
    _emit(vr.report_json(rep), cfg["out"])
    return EXIT_OK


def cmd_verify(cfg) -> int:
    only = cfg["only"]
    if only is None:
        selection = None
    else:
        selection = [int(v) for v in _floats(only, what="check list")]
        bad = [n for n in selection if n not in acceptance.CHECKS]
        if bad:
            raise SpecError(f"unknown checks {bad}; valid 1..{len(acceptance.CHECKS)}")
    results = acceptance.run_suite(selection, inject_control=bool(cfg["inject_control"]), echo=print)
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} checks passed")
    if cfg["out"]:
        Path(cfg["out"]).write_text(vr.report_json({"checks": [r.as_dict() for r in results]}) + "\n")
    return EXIT_OK if passed == len(results) else EXIT_VERIFY


COMMANDS = {"analyze": cmd_analyze, "trace": cmd_trace, "area": cmd_area, "variation": cmd_variation,
            "stability": cmd_stability, "verify": cmd_verify}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except (SpecError, DomainError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HeisenbergError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
