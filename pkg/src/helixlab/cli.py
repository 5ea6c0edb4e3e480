"""Command-line driver: ``helixlab <command> --config <path> [--out DIR] [--seed N]``.

Each run validates its JSON configuration, executes one experiment, writes
CSV/JSON outputs into the output directory and finally a ``manifest.json``
listing every emitted file with its SHA-256 digest.

Exit codes: 0 success, 2 invalid configuration or input, 3 numerical
non-convergence, 4 a hypothesis of an inequality check failed.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import sys
import time
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from . import __version__
from .barriers import (LimitConfig, barrier_g, barrier_H, calibrate_C2, green_h,
                       limit_u_tilde)
from .config import COMMANDS, ExperimentConfig, canonical, validate
from .domain import Dirichlet, DiscreteGraph, GraphDomain, Hole, NeumannZero
from .errors import ConvergenceError, HelixlabError, HypothesisError, SolverError
from .estimates import HeightInstance, area_bound_check, height_bound_check
from .flux import (circle, horizontal_flux_complex, horizontal_flux_exact,
                   vertical_flux)
from .forces import NeckConfiguration, all_forces, find_equilibrium, positivity_scan
from .geometry import (ConformalMetric, UniversalCoverPoint, catenoid_graph,
                       helicoid_graph, y_surface_census)
from .laurent import (contour_residue, force_integral_case1, log_pole_kernel,
                      residue_log_pole)
from .mse_solver import solve

log = logging.getLogger("helixlab")

EXIT_OK, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_HYPOTHESIS = 0, 2, 3, 4


class RunWriter:
    """Collects output files and their digests; all text is UTF-8 with LF endings."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.files = []
        out_dir.mkdir(parents=True, exist_ok=True)

    def _record(self, name):
        path = self.out_dir / name
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        self.files.append({"path": name, "sha256": digest})

    def json(self, name, data):
        with open(self.out_dir / name, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(data, sort_keys=True, indent=2) + "\n")
        self._record(name)

    def csv(self, name, header, rows):
        with open(self.out_dir / name, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
        self._record(name)

    def graph(self, name, graph: DiscreteGraph):
        graph.to_csv(self.out_dir / name)
        self._record(name)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    return v


def _pair(c):
    c = complex(c)
    return [c.real, c.imag]


# -- builders ----------------------------------------------------------------

def _metric(p):
    return ConformalMetric(p["kind"], p["R"])


def _condition(bc):
    if bc["type"] == "neumann":
        return NeumannZero()
    if bc["reference"] == "helicoid":
        k = bc["pitch"] / (2 * math.pi)
        return Dirichlet(lambda s, t, k=k: k * t + 0.0 * s, "helicoid")
    if bc["reference"] == "catenoid":
        off = bc["offset"]
        return Dirichlet(lambda s, t, off=off: np.arccosh(np.exp(s)) + off + 0.0 * t, "catenoid")
    return Dirichlet(bc["value"])


def _domain(p) -> GraphDomain:
    holes = [Hole(tuple(h["sigma"]), tuple(h["theta"])) for h in p["holes"]]
    bcs = {name: _condition(bc) for name, bc in p["boundary"].items()}
    return GraphDomain(tuple(p["sigma_range"]), tuple(p["theta_range"]), bcs, holes, p["periodic"])


def _reference_fn(ref):
    if ref["kind"] == "helicoid":
        g = helicoid_graph(ref["pitch"])
        return lambda s, t: g.on_grid(s, t)
    g = catenoid_graph(ref["offset"])
    return lambda s, t: g.on_grid(s, t)


def _solve(p):
    domain = _domain(p)
    shape = tuple(p["grid"])
    initial = None
    if p["initial"] == "zero":
        initial = DiscreteGraph.zeros(domain, *shape, pitch=p["pitch"])
    graph = solve(_metric(p["metric"]), domain, initial, shape=shape, tol=p["tol"],
                  max_iter=p["max_iter"], pitch=p["pitch"])
    return graph


# -- commands ------------------------------------------------------------------

def cmd_solve(cfg: ExperimentConfig, out: RunWriter):
    p = cfg.parameters
    graph = _solve(p)
    info = graph.info
    report = {"iterations": info.iterations, "residual": info.residual,
              "residual_history": info.history, "tolerance": info.tolerance,
              "max_principle_ok": info.max_principle_ok}
    verdicts = {"converged": True}
    if p["reference"] is not None:
        err = graph.sup_distance(_reference_fn(p["reference"]))
        report["sup_error"] = err
    out.graph("graph.csv", graph)
    out.csv("residual_history.csv", ["iteration", "residual"], enumerate(info.history))
    out.json("solve.json", report)
    if info.max_principle_ok is not None:
        verdicts["max_principle"] = info.max_principle_ok
    return verdicts


def cmd_flux(cfg, out):
    p = cfg.parameters
    metric = _metric(p["metric"])
    if p["surface"] is not None:
        s = p["surface"]
        graph = catenoid_graph(s["offset"]) if s["kind"] == "catenoid" else helicoid_graph(s["pitch"])
    else:
        graph = _solve(p["solve"])
    n = p["n"] or None
    reports, rows = [], []
    for c in p["curves"]:
        center = complex(*c["center"])
        curve = circle(center, c["radius"], start_argument=c["argument"])
        if p["field"] == "vertical":
            rep = vertical_flux(graph, curve, metric, n=n, tol=p["tol"])
        else:
            op = horizontal_flux_exact if p["method"] == "exact" else horizontal_flux_complex
            rep = op(graph, metric, curve, p["field"], n=n, tol=p["tol"])
        d = rep.as_dict()
        d["center"] = c["center"]
        d["radius"] = c["radius"]
        reports.append(d)
        rows.append([center.real, center.imag, float(c["radius"]), rep.value])
    out.csv("flux_sweep.csv", ["center_re", "center_im", "radius", "value"], rows)
    out.json("flux.json", {"field": p["field"], "fluxes": reports})
    return {"quadrature_converged": all(r["converged"] for r in reports)}


def cmd_force(cfg, out):
    p = cfg.parameters
    conf = NeckConfiguration(tuple(p["y"]), tuple(p["c"]))
    forces = all_forces(conf)
    report = {"config": conf.as_dict(), "forces": forces.tolist(), "F1": float(forces[0])}
    verdicts = {}
    if p["equilibrium"]:
        res = find_equilibrium(conf.N, conf, p["tol"])
        report["equilibrium"] = res.as_dict()
        verdicts["equilibrium_found"] = res.converged
    if p["landscape_points"]:
        upper = conf.y[1] if conf.N > 1 else 10.0
        ys = np.exp(np.linspace(math.log(1e-3), math.log(upper), p["landscape_points"] + 2)[1:-1])
        rows = []
        for y1 in ys:
            c2 = NeckConfiguration((float(y1),) + conf.y[1:], conf.c)
            rows.append([float(y1), float(all_forces(c2)[0])])
        out.csv("force_landscape.csv", ["y1", "F1"], rows)
    out.json("force.json", report)
    return verdicts


def cmd_residue(cfg, out):
    p = cfg.parameters
    pt = complex(*p["p"])
    closed = residue_log_pole(pt, p["weighted"])
    radius = p["radius"] or abs(pt) / 4
    quad = contour_residue(log_pole_kernel(pt, p["weighted"]), pt, radius)
    report = {"p": p["p"], "weighted": p["weighted"], "closed_form": _pair(closed),
              "quadrature": _pair(quad), "difference": abs(closed - quad)}
    verdicts = {"residue_agreement": abs(closed - quad) <= 1e-9}
    fi = p["force_integral"]
    if fi is not None:
        conf = LimitConfig.from_heights(fi["c0"], fi["heights"], fi["masses"])
        contour, closed_f = force_integral_case1(conf, fi["eps"])
        report["force_integral"] = {"contour": contour, "closed_form": closed_f}
        verdicts["force_integral_agreement"] = abs(contour - closed_f) <= 1e-8
    out.json("residue.json", report)
    return verdicts


def cmd_barrier(cfg, out):
    p = cfg.parameters
    m = np.exp(np.linspace(*np.log(p["modulus_range"]), p["n"][0]))
    a = np.linspace(*p["argument_range"], p["n"][1])
    M, A = np.meshgrid(m, a, indexing="ij")
    poles = [UniversalCoverPoint(y, math.pi / 2) for y in p["poles"]]
    verdicts = {}
    summary = {"kind": p["kind"]}
    if p["kind"] == "green":
        V = green_h(poles[0], (M, A))
        verdicts["positive_upper_half"] = bool(np.all(V[A > 0] > 0))
    elif p["kind"] == "H":
        V = barrier_H(p["t"], (M, A))
        verdicts["positive"] = bool(np.all(V > 0))
        verdicts["below_abs_log"] = bool(np.all(V <= np.abs(np.log(M) + 1j * A) * (1 + 1e-12)))
        summary["t"] = p["t"]
    elif p["kind"] == "g":
        C2 = p["C2"] or calibrate_C2(poles)
        V = barrier_g(poles, C2, (M, A))
        summary["C2"] = C2
    else:
        conf = LimitConfig.from_heights(p["c0"], p["poles"], p["masses"])
        V = limit_u_tilde(conf, (M, A))
    summary.update({"min": float(np.min(V)), "max": float(np.max(V)), "samples": int(V.size)})
    out.csv("barrier_values.csv", ["modulus", "argument", "value"],
            zip(M.ravel().tolist(), A.ravel().tolist(), np.ravel(V).tolist()))
    summary["checks"] = verdicts
    out.json("barrier.json", summary)
    return verdicts


def cmd_height(cfg, out):
    p = cfg.parameters
    r1, r2 = p["r1"], p["r2"]
    shape = tuple(p["grid"])
    if p["surface"] == "catenoid":
        if r1 < 1:
            raise HypothesisError("the catenoid is a graph only for |z| >= 1", "domain")
        h = math.acosh(r2) - math.acosh(r1)
        dom = GraphDomain((math.log(r1), math.log(r2)), (0.0, 2 * math.pi),
                          {"sigma_min": Dirichlet(-h), "sigma_max": Dirichlet(0.0)}, periodic=True)
        top = math.acosh(r2)
        graph = DiscreteGraph.from_function(dom, *shape, lambda s, t: np.arccosh(np.exp(s)) - top + 0 * t)
    else:
        h = p["h"]
        dom = GraphDomain((math.log(r1), math.log(r2)), (0.0, 2 * math.pi),
                          {"sigma_min": Dirichlet(-h), "sigma_max": Dirichlet(0.0)}, periodic=True)
        graph = solve(ConformalMetric("flat"), dom, shape=shape, tol=p["tol"])
    rep = height_bound_check(HeightInstance(graph, r1, r2, h, p["phi"]))
    out.json("height.json", rep)
    return {"height_bound": bool(rep["holds"]), "energy_inequality": bool(rep["energy"]["holds"])}


def cmd_area(cfg, out):
    p = cfg.parameters
    metric = _metric(p["metric"])
    shape = tuple(p["grid"])
    k = p["pitch"] / (2 * math.pi)
    helicoid = Dirichlet(lambda s, t: k * t + 0.0 * s, "helicoid")
    dom = GraphDomain.uniform(tuple(p["sigma_range"]), tuple(p["theta_range"]), helicoid)
    if p["surface"] == "helicoid":
        graph = DiscreteGraph.from_function(dom, *shape, lambda s, t: k * t + 0.0 * s)
    elif p["surface"] == "zero":
        graph = DiscreteGraph.from_function(dom, *shape, lambda s, t: 0.0 * s)
    else:
        graph = solve(metric, dom, shape=shape)
    rep = area_bound_check(graph, p["a"], p["b"], p["alpha"], p["beta"], metric)
    out.json("area.json", rep)
    return {"area_bound": bool(rep["holds"])}


def cmd_census(cfg, out):
    p = cfg.parameters
    ks = [p["k"]] if p["k"] is not None else list(range(p["k_max"] + 1))
    rows = [y_surface_census(k) for k in ks]
    if p["k"] is not None:
        out.json("census.json", rows[0].as_dict())
    else:
        out.json("census.json", {"table": [r.as_dict() for r in rows]})
    out.csv("census.csv", ["fixed_points", "ends", "genus", "components"],
            [[r.fixed_points, r.ends, r.genus, r.components] for r in rows])
    return {"euler_identity": all(r.euler_identity_holds() for r in rows)}


def cmd_scan(cfg, out):
    p = cfg.parameters
    rep = positivity_scan(p["N"], p["n_samples"], cfg.seed, y_min=p["y_min"],
                          ratio_max=p["ratio_max"], mass_range=tuple(p["mass_range"]),
                          include_boundary=p["include_boundary"])
    out.json("scan.json", rep.as_dict())
    return {"min_F1_positive": rep.min_F1 > 0}


HANDLERS = {
    "solve": cmd_solve,
    "flux": cmd_flux,
    "force": cmd_force,
    "residue": cmd_residue,
    "barrier": cmd_barrier,
    "height": cmd_height,
    "area": cmd_area,
    "census": cmd_census,
    "scan": cmd_scan,
}
assert set(HANDLERS) == set(COMMANDS)


def run(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> dict:
    """Execute one experiment and write its outputs; the manifest is written last."""
    out = RunWriter(Path(out_dir or cfg.output_dir))
    start = time.perf_counter()
    verdicts = HANDLERS[cfg.command](cfg, out)
    manifest = {
        "config": json.loads(canonical(cfg)),
        "version": __version__,
        "wall_time_s": time.perf_counter() - start,
        "verdicts": verdicts,
        "files": list(out.files),
    }
    with open(out.out_dir / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return manifest


def _thread_limit():
    value = os.environ.get("HELIXLAB_THREADS")
    if not value:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=max(1, int(value)))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="helixlab", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON experiment configuration")
    parser.add_argument("--out", default=None, help="output directory (overrides the config)")
    parser.add_argument("--seed", type=int, default=None, help="seed (overrides the config)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        text = Path(args.config).read_text(encoding="utf-8")
        data = json.loads(text) if text.strip() else {}
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except json.JSONDecodeError:
        data = None
    try:
        if data is None:
            cfg = validate(text)  # re-raises with line/column diagnostics
        else:
            if isinstance(data, dict):
                data.setdefault("command", args.command)
                if data["command"] and data["command"] != args.command:
                    print(f"error: config command {data['command']!r} does not match "
                          f"{args.command!r}", file=sys.stderr)
                    return EXIT_CONFIG
                if args.seed is not None:
                    data["seed"] = args.seed
            cfg = validate(json.dumps(data))
        with _thread_limit():
            manifest = run(cfg, args.out)
    except HypothesisError as exc:
        print(f"hypothesis failure ({exc.item}): {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (ConvergenceError, SolverError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (HelixlabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps({"output_dir": str(args.out or cfg.output_dir),
                      "verdicts": manifest["verdicts"]}, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
