"""Command-line entry point.

Every subcommand writes its outputs (JSON for structured results, CSV for
tables) plus ``manifest.json`` into ``--out``.  The manifest records the
command, its arguments, package versions and the seed; outputs contain no
timestamps, so rerunning a manifest reproduces identical files.

Exit codes: 0 success or CERTIFIED, 2 unresolved, failed or empty result,
1 error (including malformed configuration files).
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import platform
import sys
from pathlib import Path

import mpmath
import numpy as np
import scipy

from . import __version__
from .blender_cert import CERTIFIED, CertConfig, certify, scan_O, strip_game, widths_obey
from .henon_family import HenonParams
from .model_cycle import CycleConfig, REFERENCE_CONFIG, validate_config

EXIT_OK, EXIT_ERROR, EXIT_UNRESOLVED = 0, 1, 2
PRECISION_ENV = "BLENDERS_PRECISION"


class ConfigError(ValueError):
    """Malformed configuration, with the offending location in the message."""


# configuration ------------------------------------------------------------------------

def load_json(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"{path}: cannot read ({e.strerror})") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return data


def dataclass_from(cls, data: dict, where: str):
    """Build ``cls`` from a dict, naming unknown or invalid fields."""
    names = {f.name for f in dataclasses.fields(cls)}
    for k in data:
        if k not in names:
            raise ConfigError(f"{where}: unknown field '{k}' (expected one of {sorted(names)})")
    try:
        return cls(**data)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{where}: {e}") from None


def cycle_config(path: str | None) -> CycleConfig:
    if not path:
        return REFERENCE_CONFIG
    data = load_json(path)
    try:
        cfg = CycleConfig.from_dict(data)
    except (TypeError, ValueError, KeyError) as e:
        raise ConfigError(f"{path}: {e}") from None
    diag = validate_config(cfg)
    if not diag.ok:
        raise ConfigError(f"{path}: " + "; ".join(diag.messages()))
    return cfg


def env_precision() -> int | None:
    v = os.environ.get(PRECISION_ENV)
    if not v:
        return None
    try:
        return int(v)
    except ValueError:
        raise ConfigError(f"{PRECISION_ENV}: expected an integer, got {v!r}") from None


# output -------------------------------------------------------------------------------

class Output:
    """Collects files for one run and writes the manifest."""

    def __init__(self, out: str, command: str, args: dict, seed=None):
        self.dir = Path(out)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.command = command
        self.args = args
        self.seed = seed
        self.files = {}

    def write(self, name: str, text: str) -> Path:
        p = self.dir / name
        p.write_text(text)
        self.files[name] = hashlib.sha256(text.encode()).hexdigest()
        return p

    def write_json(self, name: str, obj) -> Path:
        return self.write(name, json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")

    def finish(self):
        manifest = {
            "command": self.command,
            "args": self.args,
            "seed": self.seed,
            "versions": {"blenders": __version__, "python": platform.python_version(),
                         "numpy": np.__version__, "scipy": scipy.__version__,
                         "mpmath": mpmath.__version__},
            "outputs": self.files,
        }
        (self.dir / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(o):
    if isinstance(o, mpmath.mpf):
        return mpmath.nstr(o, 17)
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if dataclasses.is_dataclass(o):
        return dataclasses.asdict(o)
    raise TypeError(f"not serializable: {type(o).__name__}")


def _csv(rows: list, columns: list) -> str:
    import csv
    import io
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


# subcommands --------------------------------------------------------------------------

def _henon(a) -> HenonParams:
    return HenonParams(xi=a.xi, mu=a.mu, kappa=a.kappa, eta=a.eta,
                       form="conjugate" if a.eta == 0 else "standard")


def _cert_config(a) -> CertConfig:
    over = load_json(a.config) if getattr(a, "config", None) else {}
    if "perturbation" in over:
        raise ConfigError(f"{a.config}: field 'perturbation' cannot be set from the command line")
    for k in ("net_slopes",):
        if k in over:
            over[k] = tuple(over[k])
    cfg = dataclass_from(CertConfig, over, a.config or "certificate config")
    if getattr(a, "depth", None) is not None:
        if not 1 <= a.depth <= 30:
            raise ConfigError("--depth: must lie in [1, 30]")
        cfg = dataclasses.replace(cfg, depth=a.depth)
    return cfg


def cmd_certify(a, out: Output) -> int:
    cert = certify(_henon(a), _cert_config(a))
    out.write("certificate.json", cert.to_json() + "\n")
    print(f"overall: {cert.overall}")
    for k, c in cert.conditions.items():
        print(f"  {k:6s} {c.verdict:11s} margin={c.margin:.6g}")
    return EXIT_OK if cert.overall == CERTIFIED else EXIT_UNRESOLVED


SCAN_COLUMNS = ["mu", "kappa", "xi", "eta", "i_plus", "i_plus_x_lo", "oracle_x_lo", "i_minus",
                "H4", "z_star_in_range", "y_star_in_range", "overall"]


def cmd_scan_o(a, out: Output) -> int:
    cfg = _cert_config(a)
    rows = scan_O((a.mu_points, a.kappa_points, a.xi_points), eta=a.eta, config=cfg, full=a.full)
    out.write("scan_o.csv", _csv(rows, SCAN_COLUMNS))
    passed = [r for r in rows if r["i_plus"] == "PASSED"]
    summary = {"points": len(rows), "i_plus_passed": len(passed),
               "i_plus_failed": sum(r["i_plus"] == "FAILED" for r in rows),
               "mu_max_passed": max((r["mu"] for r in passed), default=None)}
    if a.full:
        summary["certified"] = sum(r.get("overall") == CERTIFIED for r in rows)
    out.write_json("scan_o_summary.json", summary)
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK if rows else EXIT_UNRESOLVED


def cmd_region_st(a, out: Output) -> int:
    from .param_search import ST_AREA, sample_ST
    s = sample_ST(a.samples, a.seed, a.grid)
    res = dataclasses.asdict(s)
    res["exact_area"] = float(ST_AREA)
    out.write_json("region_st.json", res)
    print(json.dumps(res, sort_keys=True))
    return EXIT_OK


def cmd_tuple(a, out: Output) -> int:
    from .param_search import STPoint, check_region_P, lr_bounds, tuple_from_ST
    eig = tuple_from_ST(a.S, a.T, a.sigma_fraction, a.lambda_t_fraction, a.lambda_anchor,
                        a.zeta_tilde, a.sigma, a.lambda_t)
    chk = check_region_P(eig)
    res = {"tuple": eig.as_dict(), "region": dataclasses.asdict(chk),
           "ST": dataclasses.asdict(STPoint.of(eig)),
           "LR": list(lr_bounds(eig.lam, eig.zeta, eig.sigma_t, eig.zeta_t))}
    out.write_json("tuple.json", res)
    print(json.dumps(res, sort_keys=True))
    return EXIT_OK if chk.ok else EXIT_UNRESOLVED


def cmd_neutral(a, out: Output) -> int:
    from .param_search import find_neutral_pairs, verify_pair
    r = find_neutral_pairs(a.lam, a.zeta_tilde, a.c, a.xi, a.eps, a.n0, a.nmax, a.method)
    ok = [verify_pair(p, a.lam, a.zeta_tilde, a.c, a.xi, a.eps, a.verify_bits) for p in r.pairs]
    out.write("neutral.csv", r.to_csv())
    meta = {"count": len(r.pairs), "best_err": r.best_err, "note": r.note,
            "k": r.k, "k_tilde": r.k_tilde, "verified_bits": a.verify_bits,
            "all_verified": all(ok)}
    out.write_json("neutral.json", meta)
    sys.stdout.write(r.to_csv())
    if r.note:
        print(r.note, file=sys.stderr)
    if not all(ok):
        print("some pairs failed high-precision verification", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK if r.pairs else EXIT_UNRESOLVED


def _schedule(a, cfg):
    from .param_search import neutral_schedule
    c = cfg.coeffs.gamma[0] * cfg.coeffs.a[2]
    return neutral_schedule(cfg.eig.lam, cfg.eig.zeta_t, c, a.xi, a.schedule_nmax, a.count)


def cmd_renorm(a, out: Output) -> int:
    from .renorm import GridSpec, convergence_report, kappas
    cfg = cycle_config(a.config)
    sched = _schedule(a, cfg)
    if not sched:
        print("empty neutral schedule", file=sys.stderr)
        return EXIT_UNRESOLVED
    grid = GridSpec(k_points=a.grid_k, i_points=a.grid_i)
    rep = convergence_report(cfg, sched, a.xi, grid, a.order, env_precision())
    out.write("renorm.csv", rep.to_csv())
    out.write("renorm.json", rep.to_json() + "\n")
    k1, k2 = kappas(cfg.coeffs, a.xi)
    sys.stdout.write(rep.to_csv())
    print(f"kappa1={k1:.9g} kappa2={k2:.9g} d0 decreasing={rep.decreasing('d0')}")
    return EXIT_OK if rep.decreasing("d0") else EXIT_UNRESOLVED


def cmd_connect(a, out: Output) -> int:
    from .connect import boxpert_quotient, compare_segment_images
    cfg = cycle_config(a.config)
    sched = _schedule(a, cfg)
    if not sched:
        print("empty neutral schedule", file=sys.stderr)
        return EXIT_UNRESOLVED
    rows = []
    for p in sched:
        on = compare_segment_images(cfg, p.m, p.n, a.points)
        off = compare_segment_images(cfg, p.m, p.n, a.points, theta=False)
        q = max(boxpert_quotient(cfg, p.m, p.n, z)[0] for z in (-a.zmax, a.zmax))
        rows.append({"m": p.m, "n": p.n, "c1": mpmath.nstr(on.c1, 8),
                     "bound": mpmath.nstr(on.bound, 8), "ratio": f"{on.ratio:.8g}",
                     "stage_gap_on": f"{on.stage_gap:.8g}", "stage_gap_off": f"{off.stage_gap:.8g}",
                     "boxpert_max": f"{q:.8g}"})
        out.write(f"segments_m{p.m}_n{p.n}.csv", on.to_csv())
    text = _csv(rows, list(rows[0]))
    out.write("connect.csv", text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_strip_game(a, out: Output) -> int:
    from .blender_cert import check_H3
    params = _henon(a)
    cfg = _cert_config(a)
    tr = strip_game(params, None, a.steps, cfg)
    out.write("strip_game.csv", tr.to_csv())
    res = {"found": tr.found, "found_step": tr.found_step, "hit_dist": tr.hit_dist,
           "branch": tr.branch, "aborted": tr.aborted, "cases": "".join(tr.cases),
           "first_split": tr.first_split, "min_z": tr.min_z}
    if a.width_law:
        h3 = check_H3(params, cfg.theta, cfg.depth, cfg)["H3i"].details
        if "c0_star" in h3:
            res.update(c0_star=h3["c0_star"], ell=h3["ell"],
                       widths_obey=widths_obey(tr.unsplit_widths(), h3["c0_star"], h3["ell"]))
    reached = bool(tr.found and tr.hit_dist is not None and tr.hit_dist < cfg.strip_tol)
    res["reached_W0s"] = reached
    out.write_json("strip_game.json", res)
    print(json.dumps(res, sort_keys=True, default=_jsonable))
    return EXIT_OK if reached else EXIT_UNRESOLVED


# parser -------------------------------------------------------------------------------

def _add_henon(p):
    p.add_argument("--mu", type=float, default=-9.9)
    p.add_argument("--kappa", type=float, default=5e-5)
    p.add_argument("--xi", type=float, default=1.185)
    p.add_argument("--eta", type=float, default=0.0)
    p.add_argument("--depth", type=int, default=None, help="subdivision depth (default 12)")
    p.add_argument("--config", default=None, help="JSON file of certification settings")


def _add_cycle(p):
    p.add_argument("--config", default=None, help="CycleConfig JSON (default: reference cycle)")
    p.add_argument("--xi", type=float, default=1.185)
    p.add_argument("--count", type=int, default=4, help="pairs in the schedule")
    p.add_argument("--schedule-nmax", type=int, default=1000)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="blenders", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--out", default=f"out/{name}", help="output directory")
        p.set_defaults(func=fn)
        return p

    p = add("certify", cmd_certify, "blender certificate for one parameter")
    _add_henon(p)
    p = add("scan-o", cmd_scan_o, "sweep the parameter box")
    _add_henon(p)
    p.add_argument("--mu-points", type=int, default=16)
    p.add_argument("--kappa-points", type=int, default=8)
    p.add_argument("--xi-points", type=int, default=8)
    p.add_argument("--full", action="store_true", help="run the full certificate per point")
    p = add("region-st", cmd_region_st, "Monte Carlo area of the S-T region")
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", type=int, default=None, help="midpoint grid instead of sampling")
    p = add("tuple", cmd_tuple, "eigenvalue tuple from an (S, T) point")
    p.add_argument("--S", type=float, required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--sigma-fraction", type=float, default=0.5)
    p.add_argument("--lambda-t-fraction", type=float, default=0.5)
    p.add_argument("--lambda-anchor", type=float, default=0.1)
    p.add_argument("--zeta-tilde", type=float, default=2.718281828459045)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--lambda-t", type=float, default=None)
    p = add("neutral", cmd_neutral, "neutral pairs (m, n)")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--zeta-tilde", type=float, required=True)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--xi", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--n0", type=int, default=0)
    p.add_argument("--nmax", type=int, default=50)
    p.add_argument("--method", choices=("vectorized", "loop"), default="vectorized")
    p.add_argument("--verify-bits", type=int, default=256)
    p = add("renorm", cmd_renorm, "convergence of the renormalized return maps")
    _add_cycle(p)
    p.add_argument("--grid-k", type=int, default=9)
    p.add_argument("--grid-i", type=int, default=9)
    p.add_argument("--order", type=int, choices=(0, 1, 2), default=2)
    p = add("connect", cmd_connect, "segment images along the schedule")
    _add_cycle(p)
    p.add_argument("--points", type=int, default=33)
    p.add_argument("--zmax", type=float, default=40.0)
    p = add("strip-game", cmd_strip_game, "iterate the strip game from the l_hat seed")
    _add_henon(p)
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--width-law", action="store_true", help="also check width growth against H3")
    return ap


def run(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    args = {k: v for k, v in sorted(vars(a).items()) if k != "func"}
    out = Output(a.out, a.command, args, getattr(a, "seed", None))
    try:
        code = a.func(a, out)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, ArithmeticError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    out.finish()
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
