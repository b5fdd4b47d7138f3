"""Command-line interface: projection computation, single-dataset confidence
sets, and Monte Carlo experiments.

Configuration lives in a TOML file with one section per concern (truth,
model, grid, divergence, statistic, pilot, rule, run); unknown keys are
rejected.  Selected flags override file keys, and the fully resolved
configuration is echoed to stderr (as one JSON object) before any results,
so every run is reproducible from its own output.  Exit codes: 0 success,
2 configuration error, 3 data-file parse error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import bounds as B
from . import confset as cs
from . import distributions as dist
from . import divergences as dv
from . import simharness as sh
from .errors import ProjfitError
from .pilot import PilotSpec, pilot_from_string
from .relfit import statistic_for

_SECTIONS = {
    "truth": {"family", "p", "mean", "dispersion", "sd", "weights", "means", "sds", "points", "probs"},
    "model": {"family", "bounds", "points", "sigma"},
    "grid": {"points_per_dim", "explicit"},
    "divergence": {"kind", "beta", "b", "bandwidth", "nu"},
    "statistic": {"delta", "bound"},
    "pilot": {"kind"},
    "rule": {"kind", "alpha", "B", "S", "c", "delta_split"},
    "run": {"n", "replicates", "seed", "split_ratio", "threads", "representation", "n_rays", "r_max"},
}


class ConfigError(Exception):
    pass


def _fail_config(msg: str) -> int:
    print(f"config error: {msg}", file=sys.stderr)
    return 2


def _fail_data(msg: str) -> int:
    print(f"data error: {msg}", file=sys.stderr)
    return 3


def load_config(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}")
    for section, keys in cfg.items():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        if not isinstance(keys, dict):
            raise ConfigError(f"top-level key {section!r} must be a section")
        unknown = set(keys) - _SECTIONS[section]
        if unknown:
            raise ConfigError(f"unknown keys in [{section}]: {sorted(unknown)}")
    return cfg


def apply_overrides(cfg: dict, args) -> dict:
    for section, key, attr in [
        ("rule", "alpha", "alpha"),
        ("run", "n", "n"),
        ("run", "replicates", "replicates"),
        ("run", "seed", "seed"),
        ("run", "threads", "threads"),
    ]:
        val = getattr(args, attr, None)
        if val is not None:
            cfg.setdefault(section, {})[key] = val
    for item in getattr(args, "set", None) or []:
        try:
            target, raw = item.split("=", 1)
            section, key = target.split(".", 1)
        except ValueError:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        if section not in _SECTIONS or key not in _SECTIONS[section]:
            raise ConfigError(f"unknown config key {section}.{key}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        cfg.setdefault(section, {})[key] = value
    return cfg


def _echo(cfg: dict):
    print(json.dumps({"config": cfg}, sort_keys=True), file=sys.stderr)


# -- section parsers -----------------------------------------------------------


def parse_truth(sec: dict) -> dist.Distribution:
    fam = sec.get("family")
    try:
        if fam == "bernoulli":
            return dist.bernoulli(sec["p"])
        if fam == "poisson":
            return dist.poisson(sec["mean"])
        if fam == "negative_binomial":
            return dist.negbin_from_mean_dispersion(sec["mean"], sec["dispersion"])
        if fam == "gaussian":
            return dist.gaussian(sec["mean"], sec["sd"])
        if fam == "gaussian_mixture":
            return dist.gaussian_mixture(sec["weights"], sec["means"], sec["sds"])
        if fam == "categorical":
            return dist.categorical(sec["points"], sec["probs"])
    except KeyError as exc:
        raise ConfigError(f"[truth] family {fam!r} is missing key {exc}")
    except (ValueError, ProjfitError) as exc:
        raise ConfigError(f"[truth] {exc}")
    raise ConfigError(f"[truth] unknown family {fam!r}")


def parse_model(sec: dict) -> dist.ParametricFamily:
    fam = sec.get("family")
    bounds = sec.get("bounds")
    points = sec.get("points")
    try:
        if fam in ("bernoulli", "poisson", "gaussian_location"):
            if bounds is None or len(bounds) != 1:
                raise ConfigError(f"[model] {fam} needs bounds = [[lo, hi]]")
            (lo, hi), = bounds
            pts = tuple(tuple(map(float, p)) for p in points) if points else None
            kw = {"fixed_scale": float(sec["sigma"])} if fam == "gaussian_location" else {}
            return dist.ParametricFamily(fam, ((float(lo), float(hi)),), points=pts, **kw)
        if fam == "gaussian_location_scale":
            if bounds is None or len(bounds) != 2:
                raise ConfigError("[model] gaussian_location_scale needs bounds = [[..],[..]]")
            pts = tuple(tuple(map(float, p)) for p in points) if points else None
            return dist.ParametricFamily(
                fam, tuple((float(lo), float(hi)) for lo, hi in bounds), points=pts
            )
    except KeyError as exc:
        raise ConfigError(f"[model] missing key {exc}")
    except ValueError as exc:
        raise ConfigError(f"[model] {exc}")
    raise ConfigError(f"[model] unknown family {fam!r}")


def parse_grid(sec: dict) -> dv.GridSpec:
    explicit = sec.get("explicit")
    if explicit is not None:
        return dv.GridSpec(explicit=tuple(tuple(map(float, p)) for p in explicit))
    return dv.GridSpec(points_per_dim=int(sec.get("points_per_dim", 400)))


def parse_divergence(sec: dict) -> dv.DivergenceTag:
    kind = sec.get("kind", "kl")
    try:
        if kind == "dp":
            return dv.DP(sec["beta"])
        if kind == "w1":
            return dv.W1(sec["b"])
        if kind == "mmd":
            return dv.MMD(dv.KernelSpec(bandwidth=sec.get("bandwidth", "median")))
        return dv.DivergenceTag(kind)
    except KeyError as exc:
        raise ConfigError(f"[divergence] {kind} is missing key {exc}")
    except ValueError as exc:
        raise ConfigError(f"[divergence] {exc}")


def parse_statistic(cfg: dict, tag: dv.DivergenceTag):
    sec = cfg.get("statistic", {})
    delta = float(sec.get("delta", 0.01))
    rule_kind = cfg.get("rule", {}).get("kind", "redi")
    if rule_kind in ("slrt", "hoeffding", "bernstein", "empirical_bernstein", "bentkus", "empirical_bentkus"):
        delta = 0.0  # finite-sample rules act on the raw statistic
    stat = statistic_for(tag, delta=delta, bound=sec.get("bound"))
    nu = cfg.get("divergence", {}).get("nu")
    if nu is not None:
        stat = replace(stat, nu=float(nu))
    return stat


def parse_rule(cfg: dict, stat, truth=None, family=None):
    sec = cfg.get("rule", {})
    kind = sec.get("kind", "redi")
    alpha = float(sec.get("alpha", 0.05))
    bound = sec.get("B", stat.bound)
    if kind == "redi":
        return B.RediNormalRule(alpha)
    if kind == "slrt":
        return B.SplitLrtRule(alpha)
    if kind == "crossfit":
        return cs.CrossfitRule(alpha)
    if bound is None:
        raise ConfigError(f"rule {kind!r} needs a uniform bound B (set [rule].B or [statistic].bound)")
    bound = float(bound)
    if kind == "hoeffding":
        return B.HoeffdingRule(alpha, B=bound)
    if kind == "empirical_bernstein":
        return B.EmpiricalBernsteinRule(alpha, B=bound, c=float(sec.get("c", 0.5)))
    if kind == "empirical_bentkus":
        ds = sec.get("delta_split")
        return B.EmpiricalBentkusRule(alpha, B=bound, delta_split=float(ds) if ds is not None else None)
    if kind in ("bernstein", "bentkus"):
        cls = B.BernsteinRule if kind == "bernstein" else B.BentkusRule
        if sec.get("S") is not None:
            return cls(alpha, B=bound, S=float(sec["S"]))
        if truth is not None and family is not None:
            return cls(alpha, B=bound, s_fn=sh.variance_oracle(truth, stat, family))
        raise ConfigError(f"rule {kind!r} needs S (the oracle scale is only available in simulation mode)")
    raise ConfigError(f"unknown rule {kind!r}")


def parse_pilot(cfg: dict, tag) -> PilotSpec:
    text = cfg.get("pilot", {}).get("kind", "mle")
    try:
        return pilot_from_string(text, default_tag=tag)
    except ValueError as exc:
        raise ConfigError(f"[pilot] {exc}")


def read_data_file(path: str) -> np.ndarray:
    try:
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise ValueError(f"cannot read {path}: {exc}")
    if not lines:
        raise ValueError(f"{path} contains no observations")
    try:
        return np.array([float(v) for v in lines])
    except ValueError:
        raise ValueError(f"{path} has a non-numeric line")


# -- subcommands -----------------------------------------------------------------


def cmd_project(args) -> int:
    try:
        cfg = apply_overrides(load_config(args.config), args)
        truth = parse_truth(cfg.get("truth", {}))
        family = parse_model(cfg.get("model", {}))
        grid = parse_grid(cfg.get("grid", {}))
        tag = parse_divergence(cfg.get("divergence", {}))
        nu = float(cfg.get("divergence", {}).get("nu", dv.default_nu(tag)))
        cfg.setdefault("run", {}).setdefault("seed", 0)
    except ConfigError as exc:
        return _fail_config(str(exc))
    _echo(cfg)
    seed = int(cfg["run"]["seed"])
    tag = tag if tag.kind != "mmd" else dv.MMD(tag.kernel.resolve(truth.sample(512, seed)))
    thetas, mask, proj = dv.approx_projection_set(tag, truth, family, nu, grid)
    print(
        json.dumps(
            {
                "divergence": tag.label(),
                "theta": list(proj.theta),
                "value": proj.value,
                "nu": nu,
                "approx_set": thetas[mask].tolist(),
            },
            indent=2,
        )
    )
    return 0


def cmd_confset(args) -> int:
    try:
        cfg = apply_overrides(load_config(args.config), args)
        family = parse_model(cfg.get("model", {}))
        grid = parse_grid(cfg.get("grid", {}))
        tag = parse_divergence(cfg.get("divergence", {}))
        stat = parse_statistic(cfg, tag)
        rule = parse_rule(cfg, stat)
        pilot = parse_pilot(cfg, tag)
        cfg.setdefault("run", {}).setdefault("seed", 0)
        run = cfg["run"]
    except ConfigError as exc:
        return _fail_config(str(exc))
    try:
        data = read_data_file(args.data)
    except ValueError as exc:
        return _fail_data(str(exc))
    _echo(cfg)
    try:
        sp = cs.split(data, float(run.get("split_ratio", 0.5)), int(run.get("seed", 0)))
        if isinstance(rule, cs.CrossfitRule):
            if run.get("representation", "grid") == "rays":
                return _fail_config("crossfit is a grid-representation rule")
            cset = cs.crossfit_set(family, grid, data, sp, pilot, stat, rule.alpha)
        elif run.get("representation", "grid") == "rays":
            cset = cs.invert_rays(
                family, data, sp, pilot, stat, rule,
                n_rays=int(run.get("n_rays", 64)),
                r_max=run.get("r_max"),
            )
        else:
            cset = cs.invert_grid(family, grid, data, sp, pilot, stat, rule)
    except Exception as exc:
        return _fail_config(f"set construction failed: {exc}")
    print(cset.to_json())
    if args.emit_grid:
        if cset.kind != "grid":
            return _fail_config("--emit-grid applies to grid representation only")
        cset.write_grid_csv(args.emit_grid)
    return 0


def cmd_simulate(args) -> int:
    try:
        cfg = apply_overrides(load_config(args.config), args)
        truth = parse_truth(cfg.get("truth", {}))
        family = parse_model(cfg.get("model", {}))
        grid = parse_grid(cfg.get("grid", {}))
        tag = parse_divergence(cfg.get("divergence", {}))
        stat = parse_statistic(cfg, tag)
        rule = parse_rule(cfg, stat, truth=truth, family=family)
        pilot = parse_pilot(cfg, tag)
        cfg.setdefault("run", {}).setdefault("seed", 0)
        run = cfg["run"]
        exp = sh.ExperimentConfig(
            truth=truth,
            family=family,
            grid=grid,
            stat=stat,
            rule=rule,
            pilot=pilot,
            n=int(run.get("n", 200)),
            replicates=int(run.get("replicates", 300)),
            alpha=float(cfg.get("rule", {}).get("alpha", 0.05)),
            master_seed=int(run.get("seed", 0)),
            split_ratio=float(run.get("split_ratio", 0.5)),
            threads=int(run.get("threads", 1)),
            name=Path(args.config).stem,
        )
    except (ConfigError, ValueError) as exc:
        return _fail_config(str(exc))
    _echo(cfg)
    report = sh.run_experiment(exp)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report.write_csv(out / "report.csv")
    report.write_summary(out / "summary.json")
    print(json.dumps({"written": [str(out / "report.csv"), str(out / "summary.json")]}))
    return 0


_PRESETS = ("example1", "example2", "overdispersion")


def cmd_regress(args) -> int:
    if args.preset not in _PRESETS:
        return _fail_config(f"unknown preset {args.preset!r}; choose from {_PRESETS}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    echo = {"preset": args.preset, "n": args.n, "replicates": args.replicates, "alpha": args.alpha, "seed": args.seed}
    print(json.dumps({"config": echo}, sort_keys=True), file=sys.stderr)
    if args.preset == "example1":
        reports = sh.example1_regression(
            n=args.n or 1000, alpha=args.alpha or 0.05, replicates=args.replicates or 1000,
            master_seed=args.seed if args.seed is not None else 20240811,
        )
        reports = {f"example1_{k}": v for k, v in reports.items()}
    elif args.preset == "example2":
        reports = sh.example2_regression(
            n=args.n or 2000, alpha=args.alpha or 0.05, replicates=args.replicates or 2000,
            master_seed=args.seed if args.seed is not None else 20240812,
        )
        reports = {f"example2_{k}": v for k, v in reports.items()}
    else:
        kappas = [float(k) for k in (args.kappas or "1.01,2,3,5,8").split(",")]
        reports = {}
        for kappa in kappas:
            for rule_kind in (args.rules or "slrt,redi").split(","):
                cfgx = sh.overdispersion_config(
                    kappa,
                    rule_kind=rule_kind.strip(),
                    n=args.n or 200,
                    replicates=args.replicates or 300,
                    alpha=args.alpha or 0.05,
                    master_seed=args.seed if args.seed is not None else 20240813,
                )
                reports[cfgx.name] = sh.run_experiment(cfgx)
    written = []
    for name, report in reports.items():
        report.write_csv(out / f"{name}.csv")
        report.write_summary(out / f"{name}.summary.json")
        written.extend([str(out / f"{name}.csv"), str(out / f"{name}.summary.json")])
    print(json.dumps({"written": written}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="projfit",
        description="Confidence sets for divergence projections by inverting split-sample relative-fit tests.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="TOML configuration file")
        p.add_argument("--alpha", type=float, help="override [rule].alpha")
        p.add_argument("--seed", type=int, help="override [run].seed")
        p.add_argument("--n", type=int, help="override [run].n")
        p.add_argument("--replicates", type=int, help="override [run].replicates")
        p.add_argument("--threads", type=int, help="override [run].threads")
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override any config key")

    p = sub.add_parser("project", help="compute the divergence projection and its nu-approximate set")
    common(p)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("confset", help="build a confidence set from a data file (one value per line)")
    common(p)
    p.add_argument("data", help="observation file, one numeric value per line")
    p.add_argument("--emit-grid", metavar="CSV", help="dump per-candidate (tbar, threshold, decision) rows")
    p.set_defaults(func=cmd_confset)

    p = sub.add_parser("simulate", help="run a Monte Carlo coverage experiment")
    common(p)
    p.add_argument("--out", default=".", help="output directory for report.csv / summary.json")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("regress", help="run a bundled regression preset")
    common(p, config=False)
    p.add_argument("--preset", required=True, choices=_PRESETS)
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--kappas", help="overdispersion preset: comma-separated dispersion ratios")
    p.add_argument("--rules", help="overdispersion preset: comma-separated rules (slrt,redi,...)")
    p.set_defaults(func=cmd_regress)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail_config(str(exc))


if __name__ == "__main__":
    sys.exit(main())
