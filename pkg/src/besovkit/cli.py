"""Command-line entry point: ``besovkit <subcommand> ...``.

Every subcommand writes a JSON report that embeds the toolkit version and a
hash of the resolved configuration; experiments also write the configuration
itself and a CSV of per-probe values into ``--outdir``.  Exit codes: 0 on
success, 1 when a computation fails, 2 on bad arguments or configuration.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .grid import INF, SampledFunction, Weight, make_grid, parse_extended
from .io import read_function, read_weight_table, write_function
from .scaling import ScalingFunction, scaling_from_config

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - depends on interpreter
    import tomli as tomllib


class ConfigError(Exception):
    """Invalid command line or configuration (exit code 2)."""


# ---------------------------------------------------------------------------
# serialization helpers
# ---------------------------------------------------------------------------

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return x
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def config_hash(config: dict) -> str:
    canon = json.dumps(_jsonable(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _envelope(command: str, config: dict, result: dict) -> dict:
    return {"command": command, "toolkit_version": __version__,
            "config_hash": config_hash(config), "config": config, "result": result}


# ---------------------------------------------------------------------------
# parsing of compact specs and config sections
# ---------------------------------------------------------------------------

def parse_phi(text: str) -> dict:
    """``power:S`` | ``power_log:S,B`` -> scaling config dict."""
    fam, _, rest = text.partition(":")
    try:
        vals = [float(v) for v in rest.split(",")] if rest else []
    except ValueError:
        raise ConfigError(f"bad phi spec {text!r}")
    if fam == "power" and len(vals) == 1:
        return {"family": "power", "s": vals[0]}
    if fam == "power_log" and len(vals) == 2:
        return {"family": "power_log", "s": vals[0], "b": vals[1]}
    raise ConfigError(f"bad phi spec {text!r}; use power:S or power_log:S,B")


def parse_weight(text: Optional[str]) -> dict:
    """``constant`` | ``power:ALPHA`` | ``table:PATH`` -> weight config dict."""
    if text is None or text == "constant":
        return {"kind": "constant"}
    kind, _, rest = text.partition(":")
    if kind == "power":
        try:
            return {"kind": "power", "alpha": float(rest)}
        except ValueError:
            raise ConfigError(f"bad weight spec {text!r}")
    if kind == "table" and rest:
        return {"kind": "table", "csv": rest}
    raise ConfigError(f"bad weight spec {text!r}; use constant, power:ALPHA or table:PATH")


def build_weight(cfg: dict, grid) -> Optional[Weight]:
    kind = cfg.get("kind", "constant")
    if kind == "constant":
        return None
    if kind == "power":
        return Weight.power(grid, float(cfg["alpha"]))
    if kind == "table":
        return read_weight_table(cfg["csv"], grid)
    raise ConfigError(f"unknown weight kind {kind!r}")


def build_phi(cfg: dict) -> ScalingFunction:
    try:
        return scaling_from_config(cfg)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad phi config {cfg!r}: {exc}")


def build_grid(cfg: dict):
    try:
        return make_grid(int(cfg.get("dim", 1)), float(cfg["R"]), int(cfg["N"]))
    except KeyError as exc:
        raise ConfigError(f"grid config misses {exc}")
    except ValueError as exc:
        raise ConfigError(f"bad grid: {exc}")


def load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}")


def _read_input(path: str) -> SampledFunction:
    try:
        return read_function(path)
    except FileNotFoundError:
        raise ConfigError(f"input file {path} not found")
    except ValueError as exc:
        raise ConfigError(f"cannot read {path}: {exc}")


def _emit(text: str, output: Optional[str]) -> None:
    if output:
        Path(output).parent.mkdir(parents=True, exist_ok=True)
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _write_run(outdir: Optional[str], command: str, config: dict, result: dict,
               csv_text: Optional[str] = None) -> None:
    text = dumps(_envelope(command, config, result))
    if not outdir:
        sys.stdout.write(text)
        return
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(dumps(config))
    (out / "report.json").write_text(text)
    if csv_text is not None:
        (out / "ratios.csv").write_text(csv_text)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _norm_spec_from(cfg: dict, grid):
    from .norms import NormSpec

    phi = build_phi(cfg["phi"])
    w = build_weight(cfg.get("weight", {}), grid)
    n = cfg.get("norm", {})
    try:
        return NormSpec(parse_extended(n.get("p", 2.0)), parse_extended(n.get("q", 2.0)), phi,
                        int(n.get("L", 1)), w, n.get("variant", "B_freq"),
                        bool(n.get("homogeneous", False)), n.get("side", "B"), n.get("r"))
    except ValueError as exc:
        raise ConfigError(str(exc))


def cmd_norm(args) -> int:
    from .norms import compute_norm

    f = _read_input(args.input)
    cfg = {"input": args.input, "phi": parse_phi(args.phi), "weight": parse_weight(args.weight),
           "norm": {"variant": args.variant, "p": args.p, "q": args.q, "L": args.L,
                    "homogeneous": args.homogeneous, "side": args.side}}
    if args.r is not None:
        cfg["norm"]["r"] = args.r
    spec = _norm_spec_from(cfg, f.grid)
    res = compute_norm(f, spec)
    _emit(dumps(_envelope("norm", cfg, res.to_dict())), args.output)
    return 0


def cmd_lp_decompose(args) -> int:
    from .grid import lp_norm_values
    from .lp_decomp import decompose

    f = _read_input(args.input)
    wcfg = parse_weight(args.weight)
    w = build_weight(wcfg, f.grid)
    p = parse_extended(args.p)
    d = decompose(f)
    rows = [("S0", lp_norm_values(d.s0.values, f.grid, p, w))]
    rows += [(j, lp_norm_values(d.band(j).values, f.grid, p, w)) for j in sorted(d.bands)]
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["j", "norm"])
    for j, v in rows:
        wr.writerow([j, repr(float(v))])
    _emit(buf.getvalue(), args.output)
    return 0


def cmd_weights(args) -> int:
    from .weights import weight_report

    grid = make_grid(args.dim, args.R, args.N)
    wcfg = {"kind": args.kind}
    if args.kind == "power":
        if args.alpha is None:
            raise ConfigError("--alpha is required for power weights")
        wcfg["alpha"] = args.alpha
    elif args.kind == "table":
        if args.table is None:
            raise ConfigError("--table is required for table weights")
        wcfg["csv"] = args.table
    w = Weight.constant(grid) if args.kind == "constant" else build_weight(wcfg, grid)
    cfg = {"grid": {"dim": args.dim, "R": args.R, "N": args.N}, "weight": wcfg, "p": args.p}
    rep = weight_report(w, args.p)
    _emit(dumps(_envelope("weights", cfg, rep.to_dict())), args.output)
    return 0


def cmd_maximal(args) -> int:
    from .grid import lp_norm_values
    from .maximal_ops import shifted_maximal

    f = _read_input(args.input)
    wcfg = parse_weight(args.weight)
    w = build_weight(wcfg, f.grid)
    z = [float(c) for c in args.z.split(",")]
    mf = shifted_maximal(f, z)
    p = parse_extended(args.p)
    cfg = {"input": args.input, "weight": wcfg, "z": z, "p": args.p}
    nf = lp_norm_values(f.values, f.grid, p, w)
    nm = lp_norm_values(mf.values, f.grid, p, w)
    result = {"norm_input": nf, "norm_maximal": nm, "ratio": nm / nf if nf else None,
              "max": float(np.max(np.abs(mf.values)))}
    if args.output_function:
        write_function(args.output_function, mf)
        result["function_file"] = args.output_function
    _emit(dumps(_envelope("maximal", cfg, result)), args.output)
    return 0


def _family_from(cfg: dict, grid, p: float, seed: int):
    from .experiments import BaseProbe, ProbeFamily

    fam = cfg.get("family", {})
    bases = []
    for b in fam.get("probe", [{"kind": "gaussian"}]):
        try:
            bases.append(BaseProbe(b.get("kind", "gaussian"), float(b.get("width", 1.0)),
                                   int(b.get("seed", seed)), tuple(b.get("band", (1.0, 4.0))),
                                   int(b.get("packets", 3))))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad probe {b!r}: {exc}")
    dil = fam.get("dilations", [0, 1, 2, 3])
    return ProbeFamily(grid, p, tuple(bases), tuple(dil), tuple(fam.get("shifts", [0.0])))


def _experiment_config(args) -> dict:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    cfg.setdefault("seed", 0)
    return cfg


def cmd_equiv(args) -> int:
    from .experiments import DEFAULT_SUITE, equivalence_suite

    cfg = _experiment_config(args)
    grid = build_grid(cfg.get("grid", {"R": 4.0, "N": 4096}))
    cfg.setdefault("phi", {"family": "power", "s": 0.7})
    spec = _norm_spec_from(cfg, grid)
    n = cfg.get("norm", {})
    variants = n.get("variants", [v.value for v in DEFAULT_SUITE])
    fam = _family_from(cfg, grid, spec.p, int(cfg["seed"]))
    rep = equivalence_suite(fam, spec, variants, peetre_r=n.get("peetre_r"),
                            octaves=int(cfg.get("family", {}).get("extension", 2)))
    _write_run(args.outdir, "equiv", cfg, rep.to_dict(), rep.csv_text())
    return 0


def cmd_counterexample(args) -> int:
    from .experiments import counterexample_run

    cfg = _experiment_config(args)
    c = cfg.setdefault("counterexample", {})
    for key in ("alpha", "theta", "p", "q", "n_max"):
        val = getattr(args, key)
        if val is not None:
            c[key] = val
    dg = build_grid(c["dilation_grid"]) if "dilation_grid" in c else None
    cg = build_grid(c["cap_grid"]) if "cap_grid" in c else None
    try:
        rep = counterexample_run(float(c.get("alpha", 0.5)), float(c.get("theta", 0.1)),
                                 float(c.get("p", 2.0)), float(c.get("q", 2.0)),
                                 int(c.get("n_max", 4)), dg, cg, int(c.get("fit_octaves", 3)))
    except ValueError as exc:
        if "must lie" in str(exc) or "needs theta" in str(exc):
            raise ConfigError(str(exc))
        raise
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["k", "cap", "integral"])
    for k, v in zip(rep.cap_exponents, rep.cap_integrals):
        wr.writerow([k, repr(2.0 ** k), repr(float(v))])
    _write_run(args.outdir, "counterexample", cfg, rep.to_dict(), buf.getvalue())
    return 0


def cmd_embedding(args) -> int:
    from .experiments import embedding_check

    cfg = _experiment_config(args)
    grid = build_grid(cfg.get("grid", {"R": 4.0, "N": 16384}))
    phi = build_phi(cfg.setdefault("phi", {"family": "power", "s": 1.0}))
    n = cfg.get("norm", {})
    p, q, L = parse_extended(n.get("p", 2.0)), parse_extended(n.get("q", 2.0)), int(n.get("L", 1))
    fam = _family_from(cfg, grid, p, int(cfg["seed"]))
    try:
        rep = embedding_check(fam, phi, p, q, L, build_weight(cfg.get("weight", {}), grid))
    except ValueError as exc:
        if "hypothesis" in str(exc):
            raise ConfigError(str(exc))
        raise
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["probe", "range", "holder", "f_norm", "ratio"])
    d = rep.to_dict()
    for rng, key in (("base", "probes"), ("extension", "extended_probes")):
        for row in d[key]:
            wr.writerow([row["id"], rng, repr(row["holder"]), repr(row["f_norm"]), repr(row["ratio"])])
    _write_run(args.outdir, "embedding", cfg, d, buf.getvalue())
    return 0


def cmd_lemmas(args) -> int:
    from .experiments import lemma_inequality_suite

    cfg = _experiment_config(args)
    grid = build_grid(cfg.get("grid", {"R": 4.0, "N": 4096}))
    cfg.setdefault("phi", {"family": "power", "s": 0.7})
    spec = _norm_spec_from(cfg, grid)
    fam = _family_from(cfg, grid, spec.p, int(cfg["seed"]))
    rep = lemma_inequality_suite(fam, spec)
    d = rep.to_dict()
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["link", "constant", "extended_constant", "passed"])
    for row in d["links"]:
        wr.writerow([row["link"], repr(row["constant"]), repr(row["extended_constant"]), row["passed"]])
    _write_run(args.outdir, "lemmas", cfg, d, buf.getvalue())
    return 0


def selftest_checks() -> list:
    """The identity-type examples of every module as ``(name, callable -> bool)``."""
    from .experiments import BaseProbe, ProbeFamily, equivalence_study
    from .lp_decomp import LPSymbol, decompose, psi_L_kernel_apply, psi_kernel_apply
    from .maximal_ops import hl_maximal, shifted_maximal
    from .norms import NormSpec, compute_norm, difference, poly_dichotomy
    from .scaling import class_check, s_phi
    from .weights import ap_constant, besov_threshold, rh_constant
    from .grid import forward_transform, translate, weighted_lp_norm

    g = make_grid(1, 8.0, 256)
    one = SampledFunction(g, np.ones(g.shape))
    gauss = SampledFunction.from_callable(g, lambda x: np.exp(-x ** 2))
    sym = LPSymbol()
    phi = ScalingFunction.power(0.7)
    zero = SampledFunction.zeros(g)

    def fam():
        gg = make_grid(1, 4.0, 4096)
        return ProbeFamily(gg, 2.0, (BaseProbe("gaussian"),), (2, 3))

    return [
        ("grid: cell volume of (1, 8, 256) is 1/16", lambda: g.cell_volume == 1 / 16),
        ("grid: DC coefficient only for f = 1",
         lambda: np.allclose(forward_transform(one)[1:], 0) and abs(forward_transform(one)[0] - 1) < 1e-14),
        ("grid: translate by 0 is the identity", lambda: np.array_equal(translate(gauss, 0.0).values, gauss.values)),
        ("grid: ||1||_{L_2[-1,1)} = sqrt(2)",
         lambda: abs(weighted_lp_norm(SampledFunction(make_grid(1, 1.0, 64), np.ones(64)), None, 2)
                     - math.sqrt(2)) < 1e-14),
        ("scaling: s_phi(power(s), lam) = lam^s", lambda: abs(s_phi(phi, 3.0) - 3.0 ** 0.7) < 1e-12),
        ("scaling: s_phi(phi, 1) = 1", lambda: s_phi(ScalingFunction.power_log(1, 1), 1.0) == 1.0),
        ("scaling: power(1) in I_o(0.5, 1.5)", lambda: class_check(ScalingFunction.power(1), 0.5, 1.5).consistent_I_o),
        ("weights: [1]_{A_2} = 1", lambda: abs(ap_constant(Weight.constant(g), 2.0) - 1) < 1e-12),
        ("weights: [1]_{RH_2} = 1", lambda: abs(rh_constant(Weight.constant(g), 2.0) - 1) < 1e-12),
        ("weights: unweighted B threshold is 0", lambda: besov_threshold(1.0, INF, 2.0) == 0.0),
        ("lp: phi_hat(0.5) = 1 and phi_hat(3) = 0",
         lambda: sym.phi_hat(0.5) == 1.0 and sym.phi_hat(3.0) == 0.0),
        ("lp: f = 1 has S_0 f = f",
         lambda: np.allclose(decompose(one, use_cache=False).s0.values, 1.0, atol=1e-13)),
        ("lp: psi^1 equals psi",
         lambda: np.allclose(psi_L_kernel_apply(gauss, 0.25, 1).values, psi_kernel_apply(gauss, 0.25).values)),
        ("maximal: M(c) = |c|", lambda: np.allclose(hl_maximal(one * -2.0).values, 2.0)),
        ("maximal: M^0 = M", lambda: np.array_equal(shifted_maximal(gauss, 0.0).values, hl_maximal(gauss).values)),
        ("norms: f = 0 has norm 0",
         lambda: all(compute_norm(zero, NormSpec(2, 2, phi, 1, None, v)).total == 0
                     for v in ("B_freq", "F_freq", "B_diff_local", "Q4"))),
        ("norms: D_h^2 of an affine function vanishes",
         lambda: np.max(np.abs(difference(SampledFunction.from_callable(g, lambda x: 1 + 2 * x), 0.0625, 2)
                               .values[10:-10])) < 1e-12),
        ("norms: 1 + x vanishes for L = 2",
         lambda: poly_dichotomy([1, 1], NormSpec(2, 2, ScalingFunction.power(1.5), 2)).verdict == "vanishes"),
        ("experiments: spec vs itself has spread 1",
         lambda: equivalence_study(fam(), NormSpec(2, 2, phi), NormSpec(2, 2, phi)).spread == 1.0),
    ]


def cmd_selftest(args) -> int:
    results = []
    for name, check in selftest_checks():
        try:
            ok = bool(check())
        except Exception as exc:  # a crash counts as a failure
            ok = False
            name = f"{name} ({type(exc).__name__}: {exc})"
        results.append({"check": name, "passed": ok})
    failed = sum(not r["passed"] for r in results)
    sys.stdout.write(dumps({"toolkit_version": __version__, "checks": results, "failed": failed}))
    return 0 if failed == 0 else 1


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="besovkit", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"besovkit {__version__}")
    sub = ap.add_subparsers(dest="command", metavar="subcommand")

    p = sub.add_parser("norm", help="evaluate one norm variant of a stored function")
    p.add_argument("--input", required=True, help="BKT1 function file")
    p.add_argument("--variant", default="B_freq")
    p.add_argument("--p", default="2")
    p.add_argument("--q", default="2")
    p.add_argument("--phi", default="power:0.7", help="power:S or power_log:S,B")
    p.add_argument("--L", type=int, default=1)
    p.add_argument("--weight", default=None, help="constant, power:ALPHA or table:PATH")
    p.add_argument("--homogeneous", action="store_true")
    p.add_argument("--side", default="B", choices=["B", "F"], help="side of the Q quantities")
    p.add_argument("--r", type=float, default=None, help="Peetre parameter for Q4/Q5")
    p.add_argument("--output", default=None, help="JSON file (default: stdout)")
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("lp-decompose", help="per-band weighted norms as CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--p", default="2")
    p.add_argument("--weight", default=None)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_lp_decompose)

    p = sub.add_parser("weights", help="A_p / RH_s constants and weight exponents")
    p.add_argument("--kind", default="power", choices=["constant", "power", "table"])
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--table", default=None, help="CSV of midpoint values")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--R", type=float, default=8.0)
    p.add_argument("--N", type=int, default=256)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("maximal", help="shifted Hardy-Littlewood maximal function")
    p.add_argument("--input", required=True)
    p.add_argument("--z", default="0", help="shift in cube side lengths, comma separated")
    p.add_argument("--p", default="2")
    p.add_argument("--weight", default=None)
    p.add_argument("--output-function", default=None, help="write M^z f as a BKT1 file")
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_maximal)

    for name, fn, text in (("equiv", cmd_equiv, "pairwise norm-equivalence study"),
                           ("counterexample", cmd_counterexample, "power-weight counterexample"),
                           ("embedding", cmd_embedding, "embedding into generalized Hoelder spaces"),
                           ("lemmas", cmd_lemmas, "empirical constants of the inequality chain")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", default=None, help="TOML configuration file")
        p.add_argument("--outdir", default=None, help="output directory (default: JSON to stdout)")
        p.add_argument("--seed", type=int, default=None)
        if name == "counterexample":
            for key, typ in (("alpha", float), ("theta", float), ("p", float), ("q", float), ("n_max", int)):
                p.add_argument(f"--{key.replace('_', '-')}", dest=key, type=typ, default=None)
        p.set_defaults(func=fn)

    p = sub.add_parser("selftest", help="run the identity-type checks of every module")
    p.set_defaults(func=cmd_selftest)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"besovkit: configuration error: {exc}\n")
        return 2
    except (ValueError, ArithmeticError, KeyError) as exc:
        sys.stderr.write(f"besovkit: computation failed: {exc}\n")
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
