"""Command-line entry point and scenario runner.

A scenario is a single JSON document::

    {
      "name": "bn-ball-supercritical-mu",
      "domain": {"type": "ball", "n": 3, "radius": 1.0, "nodes": 2000},
      "mu_fraction": 0.5,
      "K": {"type": "const", "value": 1.0},
      "flow": {"tol": 1e-8},
      "seed": 42
    }

``domain`` may instead be ``{"type": "box", "edges": [1, 1, 1], "nodes": [48, 48, 48]}``;
``mu`` gives an absolute value in place of ``mu_fraction``; ``K`` may be
``{"type": "example1", "y0": [...], "d0": .., "eps0": .., "eta": .., "beta": ..}``;
``init`` is "default" (multi-start), "eig", "bump" or "file:<path>";
``theorem12: true`` opens mu = mu_1; ``ue_sweep: {"d0": .., "eps": [...]}``
adds the test-function sweep.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import re
import sys
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    Example1Params,
    admissible_starts,
    build_example1_K,
    check_lions,
    check_theorem12,
    estimate_L,
    ue_sweep,
    verify_solution,
)
from .errors import AdmissibilityError, ConfigurationError, CritflowError
from .flow import FlowConfig, extract_ps, initial_data, rescaling_identity_errors, run_flow
from .functionals import ProblemData, compute_constants, lions_status
from .mesh import Box3, RadialBall, dump_field, load_field
from .spectral import ball_full_spectrum, compute_eigenbasis, first_eigenpair, spectral_gap_constant

DEFAULT_SEED = 42
EXIT_OK, EXIT_CONFIG, EXIT_CONCENTRATED, EXIT_STALLED, EXIT_OTHER = 0, 1, 2, 3, 4
TERMINAL_EXIT = {"concentrated": EXIT_CONCENTRATED, "stalled": EXIT_STALLED}
DISTINCT_RTOL = 1e-6

_TOP_KEYS = {"name", "domain", "mu", "mu_fraction", "K", "flow", "init", "theorem12", "seed", "ue_sweep", "eigen_count"}


class ScenarioError(ConfigurationError):
    """Configuration error carrying the source line of the offending key."""


def _line_of(text, key):
    if text is None:
        return None
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _fail(text, key, msg, source="config"):
    line = _line_of(text, key)
    where = f"{source}, line {line}" if line else source
    raise ScenarioError(f"{where}: {key}: {msg}")


@dataclass
class ScenarioConfig:
    name: str = "scenario"
    domain: dict = field(default_factory=lambda: {"type": "ball", "n": 3, "radius": 1.0, "nodes": 2000})
    mu: float | None = None
    mu_fraction: float | None = None
    K: dict = field(default_factory=lambda: {"type": "const", "value": 1.0})
    flow: dict = field(default_factory=dict)
    init: str = "default"
    theorem12: bool = False
    seed: int = DEFAULT_SEED
    ue_sweep: dict | None = None
    eigen_count: int = 8

    @classmethod
    def from_dict(cls, d, text=None, source="config"):
        if not isinstance(d, dict):
            raise ScenarioError(f"{source}: top level must be a JSON object")
        for k in d:
            if k not in _TOP_KEYS:
                _fail(text, k, f"unknown key (allowed: {', '.join(sorted(_TOP_KEYS))})", source)
        cfg = cls(**d)
        cfg.validate(text, source)
        return cfg

    def validate(self, text=None, source="config"):
        dom = self.domain
        if not isinstance(dom, dict):
            _fail(text, "domain", "must be an object", source)
        if not isinstance(self.K, dict):
            _fail(text, "K", "must be an object", source)
        kind = dom.get("type")
        if kind == "ball":
            n = dom.get("n", 3)
            if not isinstance(n, int) or n < 3:
                _fail(text, "n", f"dimension must be an integer >= 3, got {n!r}", source)
            if not isinstance(dom.get("nodes", 2000), int) or dom.get("nodes", 2000) < RadialBall.MIN_NODES:
                _fail(text, "nodes", f"ball needs an integer >= {RadialBall.MIN_NODES}", source)
            if not float(dom.get("radius", 1.0)) > 0:
                _fail(text, "radius", "must be positive", source)
        elif kind == "box":
            if dom.get("n", 3) != 3:
                _fail(text, "n", "box meshes are 3-D", source)
            nodes = dom.get("nodes", 48)
            nodes = [nodes] * 3 if isinstance(nodes, int) else list(nodes)
            if len(nodes) != 3 or any(not isinstance(c, int) or c < Box3.MIN_NODES for c in nodes):
                _fail(text, "nodes", f"box needs 3 integers >= {Box3.MIN_NODES}", source)
            edges = dom.get("edges", [1.0, 1.0, 1.0])
            if len(edges) != 3 or any(not float(e) > 0 for e in edges):
                _fail(text, "edges", "box needs 3 positive edge lengths", source)
        else:
            _fail(text, "type", f"domain type must be 'ball' or 'box', got {kind!r}", source)
        if (self.mu is None) == (self.mu_fraction is None):
            _fail(text, "mu_fraction" if self.mu_fraction is not None else "mu",
                  "give exactly one of mu and mu_fraction", source)
        if self.mu_fraction is not None:
            if not 0 < self.mu_fraction <= 1:
                _fail(text, "mu_fraction", f"must lie in (0, 1], got {self.mu_fraction!r}", source)
            if self.mu_fraction == 1 and not self.theorem12:
                _fail(text, "mu_fraction", "mu = mu_1 needs \"theorem12\": true", source)
        elif not self.mu > 0:
            _fail(text, "mu", "must be positive", source)
        if self.K.get("type") not in ("const", "example1"):
            _fail(text, "K", f"K type must be 'const' or 'example1', got {self.K.get('type')!r}", source)
        if not isinstance(self.init, str) or not (
            self.init in ("default", "eig", "bump") or self.init.startswith("file:")
        ):
            _fail(text, "init", "expected default, eig, bump or file:<path>", source)
        try:
            FlowConfig(**self.flow)
        except TypeError as exc:
            _fail(text, "flow", str(exc), source)
        except ConfigurationError as exc:
            _fail(text, "flow", str(exc), source)
        if not isinstance(self.seed, int):
            _fail(text, "seed", "must be an integer", source)
        if self.theorem12 and self.eigen_count < 2:
            _fail(text, "eigen_count", "the mu = mu_1 branch needs at least 2 eigenpairs", source)

    def as_dict(self):
        return asdict(self)

    def digest(self):
        blob = json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def load_scenario(name_or_path):
    """Bundled scenario by name, or a JSON file path."""
    path = Path(name_or_path)
    if path.suffix != ".json" and not path.exists():
        res = resources.files("critflow") / "scenarios" / f"{name_or_path}.json"
        if not res.is_file():
            raise ScenarioError(f"no bundled scenario {name_or_path!r} (have: {', '.join(bundled_scenarios())})")
        text, source = res.read_text(), f"scenario {name_or_path}"
    else:
        try:
            text, source = path.read_text(), str(path)
        except OSError as exc:
            raise ScenarioError(f"{path}: {exc.strerror}") from exc
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{source}, line {exc.lineno}: {exc.msg}") from exc
    return ScenarioConfig.from_dict(d, text, source)


def bundled_scenarios():
    root = resources.files("critflow") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def resolve_seed(config_seed, cli_seed=None):
    if cli_seed is not None:
        return int(cli_seed)
    env = os.environ.get("CRITFLOW_SEED")
    if env not in (None, ""):
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigurationError(f"CRITFLOW_SEED={env!r} is not an integer") from exc
    return int(config_seed)


# -- building blocks -----------------------------------------------------------


def build_mesh(domain):
    if domain["type"] == "ball":
        return RadialBall(int(domain.get("n", 3)), float(domain.get("radius", 1.0)), int(domain.get("nodes", 2000)))
    nodes = domain.get("nodes", 48)
    nodes = [nodes] * 3 if isinstance(nodes, int) else nodes
    return Box3(*(float(e) for e in domain.get("edges", [1.0, 1.0, 1.0])), *(int(c) for c in nodes))


def build_K(mesh, spec):
    if spec["type"] == "const":
        return float(spec.get("value", 1.0))
    p = Example1Params(
        tuple(spec.get("y0", [0.0])), float(spec["d0"]), float(spec["eps0"]),
        float(spec.get("eta", 1.0)), float(spec.get("beta", 2.0)),
    )
    return build_example1_K(mesh, p)


def build_data(cfg, mesh):
    mu1 = first_eigenpair(mesh)[0]
    mu = mu1 * cfg.mu_fraction if cfg.mu_fraction is not None else float(cfg.mu)
    return ProblemData(mesh, build_K(mesh, cfg.K), mu, allow_mu1=cfg.theorem12)


def eigen_report(mesh, count=8):
    basis = compute_eigenbasis(mesh, count)
    out = {
        "mu": [float(v) for v in basis.mu],
        "gap": spectral_gap_constant(basis) if len(basis) >= 2 else None,
        "residuals": [float(r) for r in basis.residuals],
        "spectrum": basis.spectrum,
    }
    if isinstance(mesh, RadialBall):
        out["full_ball"] = [{"mu": float(m), "ell": int(l)} for m, l in ball_full_spectrum(mesh, count)]
    return basis, out


def _finite(obj):
    # JSON has no NaN/inf; map them to null so the documents stay standard
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, np.generic):
        return _finite(obj.item())
    return obj


def emit_report(results, path=None):
    text = json.dumps(_finite(results), indent=2, sort_keys=False, allow_nan=False) + "\n"
    if path is not None:
        try:
            Path(path).write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write report to {path}: {exc.strerror}") from exc
    return text


def _slug(label):
    return re.sub(r"[^A-Za-z0-9]+", "-", label).strip("-")


def _starts(cfg, data, seed):
    if cfg.init == "default":
        return admissible_starts(data, seed)
    if cfg.init.startswith("file:"):
        mesh_f, u = load_field(cfg.init[5:])
        if mesh_f.describe() != data.mesh.describe():
            raise ConfigurationError(f"field mesh '{mesh_f.describe()}' differs from '{data.mesh.describe()}'")
        kw = dict(strategy="user", user_field=u)
    else:
        kw = dict(strategy="eigenfunction" if cfg.init == "eig" else "bump")
    try:
        return [cfg.init], [initial_data(data, **kw)], {}
    except AdmissibilityError as exc:
        u = initial_data(data, require_m1=False, **kw)
        return [f"{cfg.init} (outside M_1)"], [u], {cfg.init: str(exc)}


def _distinct(solutions, u):
    return all(np.max(np.abs(u - v)) > DISTINCT_RTOL * np.max(np.abs(v)) for v in solutions)


def run_scenario(cfg, out_dir=None, jobs=1, seed=None):
    """mesh -> eigen -> estimate_L -> constants/Lions -> PS extraction -> verification.

    Returns (exit_code, report).  Traces, the report and the solution field
    are written to ``out_dir`` when given.
    """
    seed = resolve_seed(cfg.seed, seed)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    mesh = build_mesh(cfg.domain)
    basis, eig = eigen_report(mesh, cfg.eigen_count)
    data = build_data(cfg, mesh)
    if not data.K_inf > 0:
        raise ConfigurationError(f"sup K = {data.K_inf!r} must be positive")
    t12 = None
    if cfg.theorem12:
        t12 = check_theorem12(data, basis, run=False) if abs(data.mu - basis.mu1) <= 1e-9 * basis.mu1 else None
        if t12 is not None and not t12.applicable:
            raise ConfigurationError(f"int K e_1^(q+1) = {t12.integral:.6g} >= 0: the mu = mu_1 branch does not apply")
    flow_cfg = FlowConfig(**cfg.flow)
    labels, starts, rejected = _starts(cfg, data, seed)
    est = estimate_L(data, flow_cfg, starts, labels, jobs)
    consts = compute_constants(data, est.L_est)
    lions = check_lions(consts)

    runs = []
    solutions, distinct = [], []
    best_solution = None
    for i, (label, tr) in enumerate(zip(est.labels, est.runs)):
        entry = {"label": label, **tr.summary()}
        if out is not None:
            name = f"trace-{i}-{_slug(label)}.csv"
            tr.write_csv(out / name)
            entry["trace"] = name
        if tr.terminal == "ps-converged":
            cand = extract_ps(data, tr.final, tr.iterations)
            rep = verify_solution(data, consts, cand.u)
            entry["candidate"] = {
                "beta1": cand.beta1, "beta2": cand.beta2, "I": cand.I_value,
                "grad_I_norm": cand.grad_I_norm, "identity_errors": list(cand.identity_errors),
            }
            entry["solution"] = rep.as_dict()
            if rep.verified and _distinct(distinct, cand.u):
                distinct.append(cand.u)
                solutions.append({"run": i, "I": rep.I_value, "max_u": float(cand.u.max())})
            if i == est.best_run:
                best_solution = (cand, rep)
        runs.append(entry)

    best = est.runs[est.best_run]
    if best_solution is not None and best_solution[1].verified:
        code = EXIT_OK
        if out is not None:
            dump_field(out / "solution.field", mesh, best_solution[0].u)
    else:
        code = TERMINAL_EXIT.get(best.terminal, EXIT_OTHER)

    report = {
        "scenario": cfg.name,
        "provenance": {
            "config_hash": cfg.digest(),
            "seed": seed,
            "resolution": {"mesh": mesh.describe(), "h": mesh.spacing, "unknowns": mesh.size},
            "version": __version__,
        },
        "config": cfg.as_dict(),
        "eigen": eig,
        "mu": data.mu,
        "constants": consts.as_dict(),
        "lions": {"holds": lions, "status": lions_status(lions), "threshold": consts.c_low},
        "rejected_starts": rejected,
        "runs": runs,
        "flow": {"best_run": est.best_run, "label": est.labels[est.best_run], **best.summary()},
        "solution": best_solution[1].as_dict() if best_solution else None,
        "solutions": solutions,
        "theorem12": None,
        "exit_code": code,
    }
    if cfg.theorem12:
        rows = [r for tr in est.runs for r in tr.rows]
        report["theorem12"] = {
            **(t12.as_dict() if t12 else {"integral": None, "applicable": None,
                                          "gap": spectral_gap_constant(basis)}),
            "mu_equals_mu1": t12 is not None,
            # every flow iterate has int K|eta|^{q+1} > 0, the set where coercivity is claimed
            "coercivity_min": min(r.N for r in rows),
        }
    if cfg.ue_sweep:
        sweep = ue_sweep(data, float(cfg.ue_sweep["d0"]), cfg.ue_sweep.get("eps", [1e-1, 1e-2, 1e-3, 1e-4]))
        report["ue_sweep"] = {"values": sweep, "below_threshold": min(q for _, q in sweep) < consts.c_low}
        if out is not None:
            write_sweep(out / "ue_sweep.csv", sweep)
    if out is not None:
        emit_report(report, out / "report.json")
    return code, report


def write_sweep(path, sweep):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("eps", "quotient"))
        for e, q in sweep:
            w.writerow((repr(e), repr(q)))


# -- argument parsing -------------------------------------------------------------


def _floats(text, what):
    try:
        return [float(t) for t in text.split(",")]
    except ValueError as exc:
        raise ConfigurationError(f"{what}: expected comma-separated numbers, got {text!r}") from exc


def parse_K(text):
    kind, _, rest = text.partition(":")
    if kind == "const":
        return {"type": "const", "value": _floats(rest or "1", "--K const")[0]}
    if kind == "example1":
        vals = _floats(rest, "--K example1")
        if len(vals) < 5:
            raise ConfigurationError("--K example1:<y0...>,d0,eps0,eta,beta needs at least 5 numbers")
        y0, (d0, eps0, eta, beta) = vals[:-4], vals[-4:]
        return {"type": "example1", "y0": y0, "d0": d0, "eps0": eps0, "eta": eta, "beta": beta}
    raise ConfigurationError(f"--K must be const:<v> or example1:<y0,d0,eps0,eta,beta>, got {text!r}")


def config_from_args(args):
    if args.domain == "ball":
        if args.nodes is not None and "," in args.nodes:
            raise ConfigurationError("--nodes for a ball is a single integer")
        domain = {"type": "ball", "n": args.n, "radius": args.radius,
                  "nodes": int(args.nodes) if args.nodes else 2000}
    else:
        nodes = [int(v) for v in _floats(args.nodes or "48", "--nodes")]
        domain = {"type": "box", "n": args.n, "edges": _floats(args.edges, "--edges"),
                  "nodes": nodes[0] if len(nodes) == 1 else nodes}
    flow = {}
    if getattr(args, "tol", None) is not None:
        flow["tol"] = args.tol
    if getattr(args, "max_iter", None) is not None:
        flow["max_iter"] = args.max_iter
    mu_fraction = 0.5 if args.mu is None and args.mu_fraction is None else args.mu_fraction
    cfg = ScenarioConfig(
        name=args.command, domain=domain, mu=args.mu, mu_fraction=mu_fraction, K=parse_K(args.K),
        flow=flow, init=_init_name(getattr(args, "init", "default")), theorem12=args.theorem12,
        seed=args.seed if args.seed is not None else DEFAULT_SEED,
    )
    cfg.validate(source="command line")
    return cfg


def _init_name(text):
    return {"eigenfunction": "eig"}.get(text, text)


def _problem_args(p, with_flow=True):
    g = p.add_argument_group("problem")
    g.add_argument("--domain", choices=("ball", "box"), default="ball")
    g.add_argument("--n", type=int, default=3, help="space dimension (ball only; boxes are 3-D)")
    g.add_argument("--radius", type=float, default=1.0)
    g.add_argument("--edges", default="1,1,1", help="box edge lengths Lx,Ly,Lz")
    g.add_argument("--nodes", default=None, help="ball: intervals m; box: n or nx,ny,nz")
    mu = g.add_mutually_exclusive_group()
    mu.add_argument("--mu", type=float)
    mu.add_argument("--mu-fraction", type=float, help="mu as a fraction of the discrete mu_1 (default 0.5)")
    g.add_argument("--K", default="const:1", help="const:<v> or example1:<y0,d0,eps0,eta,beta>")
    g.add_argument("--theorem12", action="store_true", help="allow mu = mu_1 (needs int K e_1^(q+1) < 0)")
    g.add_argument("--seed", type=int, default=None)
    if with_flow:
        f = p.add_argument_group("flow")
        f.add_argument("--init", default="default", help="default | eig | bump | file:<path>")
        f.add_argument("--tol", type=float)
        f.add_argument("--max-iter", type=int)
        f.add_argument("--jobs", type=int, default=1, help="parallel multi-start flows")


def build_parser():
    ap = argparse.ArgumentParser(prog="critflow", description="Flow-line solver for -Delta u = K u^q + mu u.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", help="thresholds and the estimated infimum as JSON")
    _problem_args(p)
    p.add_argument("--L-est", type=float, help="use this infimum instead of running the flow")

    p = sub.add_parser("eigen", help="leading Dirichlet eigenpairs as JSON")
    _problem_args(p, with_flow=False)
    p.add_argument("--count", type=int, default=8)

    p = sub.add_parser("flow", help="a single flow run")
    _problem_args(p)
    p.add_argument("--trace", help="CSV trace output")
    p.add_argument("--dump", help="field file: the rescaled solution when converged, else the final iterate")

    p = sub.add_parser("solve", help="full pipeline from command-line flags")
    _problem_args(p)
    p.add_argument("--out", help="directory for report.json, traces and the solution field")

    p = sub.add_parser("check-lions", help="estimate L and test the Lions inequality")
    _problem_args(p)
    p.add_argument("--ue-sweep", help="CSV path for the test-function quotient sweep (n = 3 balls)")
    p.add_argument("--d0", type=float, default=None, help="test-function radius (default radius/2)")
    p.add_argument("--eps", default="1e-1,1e-2,1e-3,1e-4")

    p = sub.add_parser("verify", help="verify a field file as a solution")
    p.add_argument("field", help="field file (mesh header + values)")
    mu = p.add_mutually_exclusive_group()
    mu.add_argument("--mu", type=float)
    mu.add_argument("--mu-fraction", type=float)
    p.add_argument("--K", default="const:1")
    p.add_argument("--theorem12", action="store_true")
    p.add_argument("--L-est", type=float, help="infimum estimate for the window (default: run estimate_L)")
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("scenario", help="run a bundled scenario or a JSON config")
    p.add_argument("name", nargs="?", help="bundled name or path to JSON")
    p.add_argument("--out", default=None, help="output directory (default ./critflow-<name>)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=None, help="overrides CRITFLOW_SEED and the config seed")
    p.add_argument("--list", action="store_true", help="list bundled scenarios and exit")
    return ap


def _print(obj):
    sys.stdout.write(emit_report(obj))


def _cmd_constants(args):
    cfg = config_from_args(args)
    data = build_data(cfg, build_mesh(cfg.domain))
    if args.L_est is not None:
        L = args.L_est
    else:
        labels, starts, _ = _starts(cfg, data, resolve_seed(cfg.seed, args.seed))
        L = estimate_L(data, FlowConfig(**cfg.flow), starts, labels, args.jobs).L_est
    _print(compute_constants(data, L).as_dict())
    return EXIT_OK


def _cmd_eigen(args):
    cfg = config_from_args(args)
    _, rep = eigen_report(build_mesh(cfg.domain), args.count)
    _print(rep)
    return EXIT_OK


def _cmd_flow(args):
    cfg = config_from_args(args)
    data = build_data(cfg, build_mesh(cfg.domain))
    seed = resolve_seed(cfg.seed, args.seed)
    if cfg.init == "default":
        cfg.init = "bump"
        try:
            labels, starts, rejected = _starts(cfg, data, seed)
        except AdmissibilityError as exc:
            cfg.init = "eig"
            labels, starts, rejected = _starts(cfg, data, seed)
            rejected["bump"] = str(exc)
    else:
        labels, starts, rejected = _starts(cfg, data, seed)
    tr = run_flow(data, FlowConfig(**cfg.flow), starts[0])
    extra = {}
    if args.trace:
        tr.write_csv(args.trace)
    if args.dump:
        # a converged run is dumped at the PDE scale, ready for `verify`
        field = tr.final
        extra["dump"] = "iterate"
        if tr.terminal == "ps-converged":
            field = rescaling_identity_errors(data, tr.final)[3]
            extra["dump"] = "solution"
        dump_field(args.dump, data.mesh, field)
    _print({"start": labels[0], "rejected": rejected, **tr.summary(), **extra})
    return EXIT_OK if tr.terminal == "ps-converged" else TERMINAL_EXIT.get(tr.terminal, EXIT_OTHER)


def _cmd_solve(args):
    cfg = config_from_args(args)
    code, report = run_scenario(cfg, args.out, args.jobs, args.seed)
    _print(report)
    return code


def _cmd_check_lions(args):
    cfg = config_from_args(args)
    data = build_data(cfg, build_mesh(cfg.domain))
    labels, starts, _ = _starts(cfg, data, resolve_seed(cfg.seed, args.seed))
    est = estimate_L(data, FlowConfig(**cfg.flow), starts, labels, args.jobs)
    rep = compute_constants(data, est.L_est)
    verdict = check_lions(rep)
    out = {"L_est": rep.L_est, "threshold": rep.c_low, "lions_holds": verdict, "status": lions_status(verdict)}
    if args.ue_sweep:
        if not isinstance(data.mesh, RadialBall):
            raise ConfigurationError("--ue-sweep needs a ball domain")
        d0 = args.d0 if args.d0 is not None else data.mesh.R / 2
        sweep = ue_sweep(data, d0, _floats(args.eps, "--eps"))
        write_sweep(args.ue_sweep, sweep)
        out["ue_sweep_min"] = min(q for _, q in sweep)
        out["ue_sweep_below_threshold"] = out["ue_sweep_min"] < rep.c_low
    _print(out)
    return EXIT_OK


def _cmd_verify(args):
    mesh, u = load_field(args.field)
    mu1 = first_eigenpair(mesh)[0]
    if args.mu is None and args.mu_fraction is None:
        raise ConfigurationError("verify needs --mu or --mu-fraction")
    mu = args.mu if args.mu is not None else args.mu_fraction * mu1
    data = ProblemData(mesh, build_K(mesh, parse_K(args.K)), mu, allow_mu1=args.theorem12)
    if args.L_est is not None:
        L = args.L_est
    else:
        labels, starts, _ = admissible_starts(data, resolve_seed(DEFAULT_SEED, args.seed))
        L = estimate_L(data, None, starts, labels).L_est
    rep = verify_solution(data, compute_constants(data, L), u)
    _print(rep.as_dict())
    return EXIT_OK if rep.verified else EXIT_OTHER


def _cmd_scenario(args):
    if args.list or args.name is None:
        sys.stdout.write("\n".join(bundled_scenarios()) + "\n")
        return EXIT_OK
    cfg = load_scenario(args.name)
    out = args.out if args.out is not None else f"critflow-{_slug(cfg.name)}"
    code, report = run_scenario(cfg, out, args.jobs, args.seed)
    flow = report["flow"]
    sys.stdout.write(
        f"{cfg.name}: {flow['terminal']} after {flow['iterations']} iterations, "
        f"J = {flow['final_J']!r}, lions {report['lions']['status']}, exit {code}\n"
        f"report: {Path(out) / 'report.json'}\n"
    )
    return code


COMMANDS = {
    "constants": _cmd_constants,
    "eigen": _cmd_eigen,
    "flow": _cmd_flow,
    "solve": _cmd_solve,
    "check-lions": _cmd_check_lions,
    "verify": _cmd_verify,
    "scenario": _cmd_scenario,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"critflow: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CritflowError, OSError) as exc:
        print(f"critflow: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_OTHER


if __name__ == "__main__":
    sys.exit(main())
