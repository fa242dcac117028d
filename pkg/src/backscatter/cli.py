"""Command-line front end.

Every subcommand reads an optional JSON config (validated against
``CONFIG_SCHEMA``), merges it over built-in defaults, and writes a JSON
manifest plus tidy CSV data into ``--out``. Each file carries the config hash
and the library version. Exit codes: 0 on success, 2 on bad input or a
numerical failure, 3 when a verified inequality or cross-check fails.
"""
import argparse
import copy
import csv
import hashlib
import json
import logging
import os
import sys
import warnings
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .exceptions import (BackscatterError, BoundViolated, CounterexampleFound, FitFailed,
                         InsufficientSamples, LatticeTooCoarse, QuadratureBudgetExceeded,
                         TableRangeExceeded, UnstableTimestep)
from .potentials import POTENTIAL_SCHEMA, from_spec, gaussian, radial_gaussian, radial_tail

log = logging.getLogger("backscatter")

EXIT_OK, EXIT_INPUT, EXIT_FAILED = 0, 2, 3

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "potential": POTENTIAL_SCHEMA,
        "seed": {"type": "integer", "minimum": 0},
        "kernels": {
            "type": "object",
            "properties": {
                "order": {"type": "integer", "minimum": 2, "maximum": 4},
                "r_max": {"type": "number", "exclusiveMinimum": 0},
                "step": {"type": "number", "exclusiveMinimum": 0},
                "method": {"enum": ["closed", "quadrature"]},
            },
        },
        "b2": {
            "type": "object",
            "properties": {
                "points": {"type": "array", "items": {"type": "array", "minItems": 3, "maxItems": 3}},
                "pad": {"type": ["integer", "null"], "minimum": 1},
                "kernel_radius": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "estimate_error": {"type": "boolean"},
                "check_physical": {"type": "boolean"},
                "grid_output": {"type": "boolean"},
                "tolerance": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "radial": {
            "type": "object",
            "properties": {
                "N": {"type": "integer", "minimum": 2, "maximum": 4},
                "radii": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "samples": {"type": "integer", "minimum": 10000},
                "gamma": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "smoothing": {"type": ["object", "null"]},
            },
        },
        "wave": {
            "type": "object",
            "properties": {
                "t": {"type": "number", "minimum": 0},
                "n_terms": {"type": "integer", "minimum": 0},
                "steps": {"type": "integer", "minimum": 4},
                "source_alpha": {"type": "number", "exclusiveMinimum": 0},
                "zero_potential": {"type": "boolean"},
                "slack": {"type": "number", "minimum": 1},
            },
        },
        "bounds": {
            "type": "object",
            "properties": {
                "samples": {"type": "integer", "minimum": 1},
                "epsilon": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "ceilings": {"type": "object"},
                "a2_chain": {"type": "boolean"},
            },
        },
    },
}

DEFAULTS = {
    "seed": 0,
    "potential": {"kind": "gaussian", "M": 24, "L": 2.75, "alpha": 4.0, "amplitude": 1.0},
    "kernels": {"order": 2, "r_max": 16.0, "step": 0.05, "method": "closed"},
    "b2": {"points": [[0.1, 0, 0], [0.3, 0, 0], [0.2, 0.2, 0.1], [0.6, 0, 0], [0, 0.5, 0.4]],
           "pad": None, "kernel_radius": None, "estimate_error": True,
           "check_physical": True, "grid_output": False, "tolerance": 0.05},
    "radial": {"N": 2, "radii": [0.1, 0.3, 0.6, 1.0], "samples": 20000, "gamma": None,
               "smoothing": None},
    "wave": {"t": 1.0, "n_terms": 3, "steps": 64, "source_alpha": 8.0,
             "zero_potential": False, "slack": 1.05},
    "bounds": {"samples": 100000, "epsilon": 0.1, "ceilings": {}, "a2_chain": False},
}


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        out[k] = _merge(out[k], v) if isinstance(v, dict) and isinstance(out.get(k), dict) else v
    return out


def load_config(path=None, seed=None):
    """Defaults overlaid with the JSON file at ``path``; ``seed`` overrides the file."""
    user = {}
    if path is not None:
        with open(path) as fh:
            user = json.load(fh)
    jsonschema.validate(user, CONFIG_SCHEMA)
    cfg = _merge(DEFAULTS, user)
    if seed is not None:
        cfg["seed"] = seed
    return cfg


def config_hash(cfg):
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()


def bundled(name):
    """Path of a file shipped in the package ``data`` directory."""
    return resources.files("backscatter").joinpath("data", name)


class Output:
    """Writes manifest, CSV and array files stamped with the config hash and version."""

    def __init__(self, out_dir, command, cfg):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.stamp = {"version": __version__, "config_hash": config_hash(cfg), "command": command}
        self.cfg = cfg
        self.files = []

    def csv(self, name, rows):
        path = self.dir / name
        keys = list(rows[0]) if rows else []
        with open(path, "w", newline="") as fh:
            fh.write(f"# version={self.stamp['version']} config_hash={self.stamp['config_hash']}\n")
            writer = csv.DictWriter(fh, fieldnames=keys)
            writer.writeheader()
            writer.writerows(rows)
        self.files.append(name)

    def field(self, name, grid_field):
        grid_field.save(self.dir / name, **self.stamp)
        self.files.append(name)

    def manifest(self, results, passed=True):
        doc = dict(self.stamp, config=self.cfg, passed=passed, files=self.files, results=results)
        with open(self.dir / "manifest.json", "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True, default=_jsonable)
        return doc


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, complex):
        return [x.real, x.imag]
    raise TypeError(f"not serializable: {type(x)}")


# -- commands ----------------------------------------------------------------


def cmd_kernels(cfg, out, table=None):
    from .kernel_table import KernelTable

    kc = cfg["kernels"]
    tab = KernelTable.build(kc["order"], kc["r_max"], kc["step"], method=kc["method"])
    name = f"F{kc['order']}_r{kc['r_max']:g}_h{kc['step']:g}.csv"
    tab.save(out.dir / name, **out.stamp)
    out.files.append(name)
    out.manifest({"table": name, **tab.header})
    return EXIT_OK


def _kernel(cfg, v, table_path):
    from .fundamental import TruncatedKernel
    from .kernel_table import KernelTable

    radius = cfg["b2"]["kernel_radius"] or 2 * v.support_radius
    table = KernelTable.load(table_path) if table_path else None
    return TruncatedKernel(2, radius, table=table)


def cmd_b2(cfg, out, table=None):
    from .transform import b2_fourier, b2_physical

    bc = cfg["b2"]
    v = from_spec(cfg["potential"], seed=cfg["seed"])
    if not hasattr(v, "field"):
        raise ValueError("b2 needs a grid potential (gaussian or trig_random)")
    kernel = _kernel(cfg, v, table)
    pts = None if bc["grid_output"] else np.asarray(bc["points"], dtype=float)
    res = b2_fourier(v, kernel, pad=bc["pad"], points=pts, estimate_error=bc["estimate_error"])
    results = {"quadrature": res.quadrature, "error_estimate": res.error_estimate,
               "elapsed": res.elapsed}
    passed = True
    if pts is None:
        out.field("b2_field", res.field)
    else:
        rows = [{"x": p[0], "y": p[1], "z": p[2], "re": z.real, "im": z.imag}
                for p, z in zip(pts, res.values)]
        results["values"] = [[z.real, z.imag] for z in res.values]
        if bc["check_physical"]:
            phys = b2_physical(v, pts)
            diff = np.abs(res.values - phys.values)
            scale = np.max(np.abs(phys.values))
            allowed = np.maximum(res.error_estimate + phys.error_estimate, bc["tolerance"] * scale)
            passed = bool(np.all(diff <= allowed))
            results["physical"] = [[z.real, z.imag] for z in phys.values]
            results["max_relative_difference"] = float(np.max(diff) / scale)
            for row, z in zip(rows, phys.values):
                row["physical_re"] = z.real
        out.csv("b2_points.csv", rows)
    out.manifest(results, passed)
    return EXIT_OK if passed else EXIT_FAILED


def _radial_potential(spec):
    kind = spec["kind"]
    if kind == "gaussian":
        return radial_gaussian(spec.get("alpha", 4.0), spec.get("amplitude", 1.0), spec.get("support_radius"))
    if kind == "radial_tail":
        return radial_tail(spec["s"], spec.get("R", 1.0), spec.get("amplitude", 1.0))
    raise ValueError(f"potential kind {kind!r} is not rotation invariant")


def cmd_radial(cfg, out, table=None):
    from .transform import b2_radial, bn_radial, smoothing_report

    rc = cfg["radial"]
    v = _radial_potential(cfg["potential"])
    radii = np.asarray(rc["radii"], dtype=float)
    results = {}
    if rc["N"] == 2:
        det = b2_radial(v, radii)
        results["deterministic"] = {"values": np.real(det.values), "error_estimate": det.error_estimate}
    mc = bn_radial(v, rc["N"], radii, samples=rc["samples"], seed=cfg["seed"], gamma=rc["gamma"])
    results["monte_carlo"] = {"values": np.real(mc.values), "standard_error": mc.standard_error,
                              "quadrature": mc.quadrature}
    rows = [{"radius": r, "value": float(np.real(z)), "standard_error": float(e)}
            for r, z, e in zip(radii, mc.values, mc.standard_error)]
    out.csv("bn_radial.csv", rows)
    passed = True
    if rc["smoothing"]:
        sm = rc["smoothing"]
        rep = smoothing_report(v, sm["s"], sm.get("epsilon", 0.1), tuple(sm.get("window", (8.0, 128.0))))
        results["smoothing"] = rep
        passed = rep["passed"]
        out.csv("smoothing.csv", [{"eta": c, "v_rms": a, "b2_rms": b}
                                  for c, a, b in zip(rep["centers"], rep["v_rms"], rep["b2_rms"])])
    out.manifest(results, passed)
    return EXIT_OK if passed else EXIT_FAILED


def cmd_wave(cfg, out, table=None):
    from .grid import GridField
    from .wave import born_bound, born_series, free_propagate, wave_solve

    wc = cfg["wave"]
    v = from_spec(cfg["potential"], seed=cfg["seed"])
    if not hasattr(v, "field"):
        raise ValueError("wave needs a grid potential")
    vf = v.field * 0.0 if wc["zero_potential"] else v.field
    f = gaussian(v.M, v.L, wc["source_alpha"]).field
    t = wc["t"]
    terms = born_series(vf, f, wc["n_terms"], t, wc["steps"])
    ref = wave_solve(vf, f, t).u
    v_sup = float(np.max(np.abs(vf.samples)))
    rows, partial, passed = [], None, True
    for N, term in enumerate(terms):
        partial = term if partial is None else partial + (term if N % 2 == 0 else term * -1.0)
        ratio = None
        if N >= 1:
            bound = born_bound(v_sup, t, N) * f.l2_norm()
            ratio = term.l2_norm() / bound if bound > 0 else 0.0
            passed &= ratio <= wc["slack"]
        rows.append({"N": N, "term_norm": term.l2_norm(), "bound_ratio": ratio,
                     "residual": (partial - ref).l2_norm() / ref.l2_norm()})
    out.csv("born_terms.csv", rows)
    results = {"terms": rows, "v_sup": v_sup}
    if wc["zero_potential"]:
        gap = (ref - free_propagate(f, t)).l2_norm() / ref.l2_norm()
        results["free_identity_gap"] = gap
        passed &= gap < 1e-10
    out.manifest(results, bool(passed))
    return EXIT_OK if passed else EXIT_FAILED


def load_anchors():
    with bundled("anchors.json").open() as fh:
        return json.load(fh)


def cmd_bounds(cfg, out, table=None):
    from . import bounds as B

    bc = cfg["bounds"]
    eps = bc["epsilon"]
    anchors = load_anchors()
    ceilings = {k: round(10 * v, 10) for k, v in anchors.get("implied_constants", {}).items()}
    ceilings.update(bc["ceilings"])
    seed = cfg["seed"]
    checks = [
        B.check_hgamma_lemma(bc["samples"], seed),
        B.check_weight_splitting((0.4, 0.6, 0.5), seed=seed),
        B.check_chain_lower_bound(3, seed=seed),
    ]
    kfit = B.fit_kernel_constant(seed=seed)
    if "kernel_C" in ceilings and kfit["C"] > ceilings["kernel_C"]:
        raise BoundViolated(f"kernel constant {kfit['C']:.4g} above ceiling {ceilings['kernel_C']:.4g}")
    checks.append(kfit)
    rng = np.random.default_rng(seed)
    for r, e, s in zip(rng.uniform(0, 20, 20), rng.uniform(0, 20, 20), rng.uniform(0, 1 - eps, 20)):
        checks.append(B.check_fs_bound(float(r), float(e), float(s), eps))
    conv, conv_stab = B.hgamma_conv_sweep(eps, ceiling=ceilings.get("hgamma_conv"))
    t2, t2_stab = B.T2_sweep(eps, C=ceilings.get("T2"))
    checks += conv + t2 + [conv_stab, t2_stab]
    if bc["a2_chain"]:
        params = B.SobolevParams((0.4, 0.4), eps)
        pairs = [(radial_gaussian(4.0), radial_gaussian(6.0, -0.5))]
        checks.append(B.check_A2_chain(2.0, params, pairs))
    B.write_report(checks, out.dir / "bounds.json", out.dir / "bounds.csv", meta=out.stamp)
    out.files += ["bounds.json", "bounds.csv"]
    passed = conv_stab["passed"] and t2_stab["passed"]
    out.manifest({"n_checks": len(checks), "ceilings": ceilings,
                  "stability": {"hgamma_conv": conv_stab["max_deviation"], "T2": t2_stab["max_deviation"]}},
                 passed)
    return EXIT_OK if passed else EXIT_FAILED


COMMANDS = {"kernels": cmd_kernels, "b2": cmd_b2, "radial": cmd_radial,
            "wave": cmd_wave, "bounds": cmd_bounds}


def _resolve_table(path):
    if path is None:
        return None
    p = Path(path)
    cache = os.environ.get("BACKSCATTER_CACHE")
    if not p.exists() and cache and (Path(cache) / p).exists():
        return str(Path(cache) / p)
    return str(p)


def build_parser():
    parser = argparse.ArgumentParser(prog="backscatter", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    common.add_argument("--out", help="output directory (kernels default to $BACKSCATTER_CACHE)")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--table", help="kernel table file (looked up in $BACKSCATTER_CACHE too)")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {"kernels": "tabulate F_N", "b2": "quadratic term on a grid potential",
             "radial": "B_N of a radial potential by Monte Carlo", "wave": "Born series vs wave solve",
             "bounds": "verify the kernel and weight estimates"}
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    return parser


def _set_threads(n):
    from .grid import set_workers

    set_workers(n)
    try:
        import numba

        with warnings.catch_warnings():
            # an outdated TBB is reported, then skipped for another threading layer
            warnings.simplefilter("ignore", numba.NumbaWarning)
            numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    except (ImportError, ValueError):
        pass


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config, args.seed)
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
    except (OSError, ValueError, jsonschema.ValidationError) as exc:
        print(f"error: bad configuration: {exc}", file=sys.stderr)
        return EXIT_INPUT
    out_dir = args.out or (os.environ.get("BACKSCATTER_CACHE") if args.command == "kernels" else None) or "."
    _set_threads(max(1, args.threads))
    try:
        out = Output(out_dir, args.command, cfg)
        return COMMANDS[args.command](cfg, out, _resolve_table(args.table))
    except (BoundViolated, CounterexampleFound) as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except (QuadratureBudgetExceeded, LatticeTooCoarse, TableRangeExceeded, InsufficientSamples,
            UnstableTimestep, FitFailed, BackscatterError, ValueError, OSError,
            jsonschema.ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
