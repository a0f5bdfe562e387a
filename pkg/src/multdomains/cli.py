"""Batch experiment runner.

Every subcommand accepts ``--config file.json``; command-line flags override
config entries. Reports are JSON envelopes carrying ``schema_version``, the
resolved config, the seed and the library version.

Exit codes: 0 success, 2 config error, 3 resource error, 4 numeric or
summability error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, diagnostics, limitlaw, multfunc, stats
from .domains import DomainFamily, domain_from_spec
from .errors import ConfigError, MultDomainsError

SCHEMA_VERSION = 1


def _json_default(o):
    if isinstance(o, Fraction):
        return float(o)
    if isinstance(o, complex):
        return o.real if o.imag == 0 else {"re": o.real, "im": o.imag}
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, default=_json_default, sort_keys=True, indent=2) + "\n"


def _csv_list(text, cast=int):
    if text is None or isinstance(text, list):
        return text
    return [cast(float(v)) if cast is int else cast(v) for v in str(text).split(",") if v.strip()]


def _moduli(text):
    if text is None or isinstance(text, list):
        return text
    return [_csv_list(part) for part in str(text).split(";") if part.strip()]


def load_config(args) -> dict:
    cfg = {}
    if getattr(args, "config", None):
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    for key, val in vars(args).items():
        if key in ("config", "command", "handler") or val is None:
            continue
        cfg[key] = val
    return cfg


def domain_spec_from(cfg: dict) -> dict:
    """Domain spec from ``cfg['domain']`` or from the flat ``--type``/``--d``/... flags."""
    if "domain" in cfg and "type" not in cfg:
        return cfg["domain"]
    kind = cfg.get("type")
    if kind is None:
        raise ConfigError("no domain given (use --type or a 'domain' entry in the config)")
    params = dict(cfg.get("params", {}))
    for key in ("d", "n", "ell", "scale", "body", "f"):
        if cfg.get(key) is not None:
            params[key] = cfg[key]
    if cfg.get("dims") is not None:
        params["dims"] = _csv_list(cfg["dims"])
    if cfg.get("a") is not None:
        params["a"] = _csv_list(cfg["a"], float)
    return {"type": kind, "params": params}


def family_from(cfg: dict) -> DomainFamily:
    ns = _csv_list(cfg.get("ns"))
    if not ns:
        raise ConfigError("a domain family needs a strictly increasing 'ns' list")
    spec = cfg.get("family") or domain_spec_from(cfg)
    if cfg.get("constant"):
        return DomainFamily.constant(domain_from_spec(spec), ns)
    return DomainFamily.from_spec(spec, ns)


def function_from(cfg: dict) -> multfunc.MultiplicativeFunction:
    fn = cfg.get("function", "gcd")
    if isinstance(fn, dict):
        name, params = fn.get("name"), dict(fn.get("params", {}))
    else:
        name, params = fn, {}
    if cfg.get("s") is not None:
        params["s"] = cfg["s"]
    return multfunc.builtin(name, d=cfg.get("d_function") or cfg.get("d"), **params)


def envelope(command: str, cfg: dict, result) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "library_version": __version__,
        "config": cfg,
        "seed": cfg.get("seed"),
        "result": result,
    }


def emit(doc: dict, cfg: dict) -> None:
    text = dumps(doc)
    out = cfg.get("out")
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_domain(args) -> int:
    cfg = load_config(args)
    D = domain_from_spec(domain_spec_from(cfg))
    if cfg.get("bbox"):
        box = D.bounding_box()
        print("bbox " + " ".join(f"[{a},{b}]" for a, b in zip(box.lo, box.hi)))
    if cfg.get("enumerate"):
        if cfg.get("csv"):
            with open(cfg["csv"], "w", newline="") as fh:
                D.to_csv(fh)
        else:
            D.to_csv(sys.stdout)
    if cfg.get("count") or not (cfg.get("bbox") or cfg.get("enumerate")):
        print(D.cardinality)
    return 0


def cmd_diagnose(args) -> int:
    cfg = load_config(args)
    family = family_from(cfg)
    report = diagnostics.diagnose(
        family,
        moduli_list=_moduli(cfg.get("moduli")) or [[2] * family[family.ns[0]].d],
        a_max=int(cfg.get("a_max", 30)),
        b_max=int(cfg.get("b_max", 30)),
        unit_shifts_only=not cfg.get("all_shifts", False),
        threshold=float(cfg.get("threshold", diagnostics.GROWTH_THRESHOLD)),
        neighborhood=not cfg.get("no_neighborhood", False),
    )
    emit(envelope("diagnose", cfg, report.to_json()), cfg)
    return 0


def _reference(cfg: dict, F, d: int, rng):
    ref = cfg.get("reference", "zeta" if F.name == "gcd" else "f_infinity")
    if isinstance(ref, dict):
        ref = ref.get("law")
    if ref == "zeta":
        if F.name != "gcd":
            raise ConfigError("the zeta law is the reference for the gcd function only")
        return limitlaw.ZetaLaw(d)
    if ref == "f_infinity":
        conf = limitlaw.LimitSampleConfig(int(cfg.get("prime_cutoff", 1000)), d, int(cfg.get("seed", 0)))
        return stats.f_infinity_reference(F, conf, rng, int(cfg.get("reference_samples", cfg.get("samples", 10**5))))
    raise ConfigError(f"unknown reference law {ref!r}")


def cmd_limit_compare(args) -> int:
    cfg = load_config(args)
    family = family_from(cfg)
    d = family[family.ns[0]].d
    cfg.setdefault("seed", 0)
    F = function_from({**cfg, "d": d})
    rng_ref = limitlaw.worker_rng(cfg["seed"], 0)
    rng_mc = limitlaw.worker_rng(cfg["seed"], 1)
    reference = _reference(cfg, F, d, rng_ref)
    mode = cfg.get("mode", "exact")
    budget = int(cfg.get("budget", multfunc.ENUMERATION_BUDGET)) if mode == "exact" else 0
    report, dists = stats.convergence_sweep(F, family, reference, budget=budget, rng=rng_mc,
                                            mc_samples=int(cfg.get("samples", 10**5)),
                                            threads=int(cfg.get("threads", 1)))
    result = report.to_json()
    if isinstance(reference, stats.EmpiricalDistribution):
        result["reference"]["certificate"] = {k: reference.meta[k] for k in ("prime_cutoff", "tail_risk_bound", "zero_products")}
    csv_dir = cfg.get("csv_dir")
    if csv_dir:
        out = Path(csv_dir)
        out.mkdir(parents=True, exist_ok=True)
        for n, dist in dists.items():
            (out / f"hist_n{n}.csv").write_text(dist.to_csv())
        if isinstance(reference, stats.EmpiricalDistribution):
            (out / "hist_reference.csv").write_text(reference.to_csv())
        result["csv"] = sorted(p.name for p in out.glob("hist_*.csv"))
    emit(envelope("limit-compare", cfg, result), cfg)
    return 0


def cmd_mean_value(args) -> int:
    cfg = load_config(args)
    d = int(cfg.get("d", 2))
    F = function_from({**cfg, "d": d})
    mv = multfunc.mean_value(F, int(cfg.get("prime_cutoff", 10**4)), float(cfg.get("tau", multfunc.DEFAULT_TAU)), d)
    empirical = []
    specs = list(cfg.get("domains", []))
    if cfg.get("type") or cfg.get("domain"):
        specs.append(domain_spec_from(cfg))
    for spec in specs:
        D = domain_from_spec(spec)
        if D.d != d:
            raise ConfigError(f"domain {spec} has dimension {D.d}, function has {d}")
        m = multfunc.empirical_mean(F, D, int(cfg.get("budget", multfunc.ENUMERATION_BUDGET)),
                                   int(cfg.get("threads", 1)))
        empirical.append({"domain": spec, "cardinality": D.cardinality, "mean": m,
                          "exact": f"{m.numerator}/{m.denominator}" if isinstance(m, Fraction) else None})
    result = {"function": F.spec, "d": d, "euler_product": mv.value, "certificate": mv.certificate,
              "empirical_means": empirical}
    emit(envelope("mean-value", cfg, result), cfg)
    return 0


def cmd_series_check(args) -> int:
    cfg = load_config(args)
    d = int(cfg.get("d", 2))
    F = function_from({**cfg, "d": d})
    cutoffs = _csv_list(cfg.get("cutoffs")) or [10**4]
    A = float(cfg.get("A", 1.0))
    rows = [multfunc.three_series_check(F, A, int(c), d, float(cfg.get("tol", 1e-2)),
                                        int(cfg.get("allowance", 0))).to_json() for c in cutoffs]
    emit(envelope("series-check", cfg, {"function": F.spec, "d": d, "checks": rows}), cfg)
    return 0


def cmd_sample_limit(args) -> int:
    cfg = load_config(args)
    d = int(cfg.get("d", 2))
    cfg.setdefault("seed", 0)
    rng = limitlaw.worker_rng(cfg["seed"], 0)
    N = int(cfg.get("samples", 10**4))
    if cfg.get("law", "f_infinity") == "zeta":
        values = limitlaw.sample_zeta_law(d, rng, N).tolist()
        certificate = {"law": "zeta", "table_size": len(limitlaw._zeta_law(d).table)}
    else:
        F = function_from({**cfg, "d": d})
        s = limitlaw.sample_F_infinity(F, limitlaw.LimitSampleConfig(int(cfg.get("prime_cutoff", 1000)), d), rng, N)
        values, certificate = s.values, s.certificate
    if cfg.get("csv"):
        with open(cfg["csv"], "w") as fh:
            fh.write("value\n")
            fh.writelines(f"{stats.fmt_value(v)}\n" for v in values)
    dist = stats.EmpiricalDistribution.from_values(values)
    emit(envelope("sample-limit", cfg, {"samples": N, "certificate": certificate, "distribution": dist.to_json()}), cfg)
    return 0


# ---------------------------------------------------------------------------
# parser


def _domain_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("domain")
    g.add_argument("--type", help="rectangle | hyperbolic | sym_poly_hyperbolic | tetrahedron | ball | "
                                  "weyl_chamber | monotone_sublevel | dilated_body")
    g.add_argument("--d", type=int)
    g.add_argument("--n", type=float)
    g.add_argument("--dims", help="comma-separated rectangle sides")
    g.add_argument("--a", help="comma-separated tetrahedron coefficients")
    g.add_argument("--ell", type=int)
    g.add_argument("--body", help="cube | quarter_ball | simplex | weyl")
    g.add_argument("--scale", type=float)
    g.add_argument("--f", help="sublevel function: product | sum | max | sumsq")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its entries")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, help="worker threads for exact tallies (results do not depend on it)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multdomains", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("domain", help="count, enumerate or bound a domain")
    _common(p)
    _domain_flags(p)
    p.add_argument("--count", action="store_true", default=None)
    p.add_argument("--enumerate", action="store_true", default=None)
    p.add_argument("--bbox", action="store_true", default=None)
    p.add_argument("--csv", help="write enumerated points to this file")
    p.set_defaults(handler=cmd_domain)

    p = sub.add_parser("diagnose", help="regular-growth, residue and K-bound diagnostics for a family")
    _common(p)
    _domain_flags(p)
    p.add_argument("--ns", help="comma-separated family parameters")
    p.add_argument("--moduli", help="moduli tuples, e.g. '2,3;2,2'")
    p.add_argument("--a-max", dest="a_max", type=int)
    p.add_argument("--b-max", dest="b_max", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--all-shifts", dest="all_shifts", action="store_true", default=None)
    p.add_argument("--constant", action="store_true", default=None, help="repeat one domain for every n")
    p.add_argument("--no-neighborhood", dest="no_neighborhood", action="store_true", default=None)
    p.set_defaults(handler=cmd_diagnose)

    p = sub.add_parser("limit-compare", help="distance of F's law on D_n to its limit law")
    _common(p)
    _domain_flags(p)
    p.add_argument("--ns")
    p.add_argument("--function")
    p.add_argument("--s", type=float, help="exponent for gcd_power")
    p.add_argument("--reference", help="zeta | f_infinity")
    p.add_argument("--mode", choices=["exact", "monte-carlo"])
    p.add_argument("--samples", type=int)
    p.add_argument("--reference-samples", dest="reference_samples", type=int)
    p.add_argument("--budget", type=int)
    p.add_argument("--prime-cutoff", dest="prime_cutoff", type=int)
    p.add_argument("--csv-dir", dest="csv_dir")
    p.set_defaults(handler=cmd_limit_compare)

    p = sub.add_parser("mean-value", help="Euler product and empirical means")
    _common(p)
    _domain_flags(p)
    p.add_argument("--function")
    p.add_argument("--s", type=float)
    p.add_argument("--prime-cutoff", dest="prime_cutoff", type=int)
    p.add_argument("--tau", type=float)
    p.add_argument("--budget", type=int)
    p.set_defaults(handler=cmd_mean_value)

    p = sub.add_parser("series-check", help="three-series partial sums")
    _common(p)
    p.add_argument("--function")
    p.add_argument("--s", type=float)
    p.add_argument("--d", type=int)
    p.add_argument("--A", type=float)
    p.add_argument("--cutoffs", help="comma-separated prime cutoffs")
    p.add_argument("--tol", type=float)
    p.add_argument("--allowance", type=int)
    p.set_defaults(handler=cmd_series_check)

    p = sub.add_parser("sample-limit", help="draw from F_inf or the zeta law")
    _common(p)
    p.add_argument("--function")
    p.add_argument("--s", type=float)
    p.add_argument("--law", choices=["f_infinity", "zeta"])
    p.add_argument("--d", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--prime-cutoff", dest="prime_cutoff", type=int)
    p.add_argument("--csv", help="write one sampled value per row")
    p.set_defaults(handler=cmd_sample_limit)
    return parser


def _normalise(args) -> None:
    # whole-number floats from --n become ints so integer domains accept them
    n = getattr(args, "n", None)
    if isinstance(n, float) and n.is_integer():
        args.n = int(n)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _normalise(args)
    try:
        return args.handler(args)
    except MultDomainsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except MemoryError:
        print("error: out of memory", file=sys.stderr)
        return 3
    except (KeyError, TypeError, ValueError) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
