"""Command-line front end.

Subcommands: check (classify + verify candidate fields), convert (switch
calculus), integrate (scalar symmetry-adapted integration with Monte Carlo
cross-check), reduce (sequential reduction), simulate (path ensembles with
CSV/JSON output), examples (regression run over the bundled models).

Exit codes: 0 success, 1 usage/parse error, 2 verdict failure in
``examples``, 3 inconclusive result under --strict.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import montecarlo as mc
from .expr import ExprSyntaxError, SamplingBox, ZeroTestConfig, to_string
from .modelfile import ModelBundle, ModelFileError, load_model, render_system
from .reduction import (
    ChangeOfVariables,
    ReductionError,
    GeneralSDE,
    compatibility_check,
    integrate_scalar,
    integrating_variable,
    reduce_sequence,
    reduce_step,
    rotation_adapted_cov,
    scaling_adapted_cov,
    transform_ito,
)
from .sde import ItoSystem, StratSystem, ito_to_strat, strat_to_ito
from .symmetry import (
    LinearW,
    SymmetryError,
    agreement_analysis,
    classify,
    conformal_check,
    residual_standard_ito,
    residual_standard_strat,
    residual_W_ito,
    residual_W_strat,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERDICT = 2
EXIT_INCONCLUSIVE = 3


def model_dir() -> Path:
    return Path(resources.files("sdesym") / "models")


def bundled_model(name: str) -> Path:
    path = model_dir() / f"{name}.model"
    if not path.exists():
        raise ModelFileError(f"no bundled model named {name!r}")
    return path


def _resolve_model(arg: str) -> ModelBundle:
    path = Path(arg)
    if not path.exists() and not arg.endswith(".model"):
        path = model_dir() / f"{arg}.model"
    return load_model(path)


def _config_for(bundle: ModelBundle, args) -> ZeroTestConfig:
    return ZeroTestConfig(box=bundle.box, tol=args.tol, seed=args.seed)


def _report_meta(bundle: ModelBundle, args, config: ZeroTestConfig) -> dict:
    return {
        "model": str(bundle.path),
        "model_sha256": bundle.sha256,
        "seed": args.seed,
        "tolerance": config.tol,
        "zero_test_points": config.points,
    }


def _emit(payload: dict, args) -> None:
    if getattr(args, "json", False):
        print(json.dumps(payload, indent=2, default=str))
    else:
        _print_human(payload)


def _print_human(payload: dict, indent: int = 0) -> None:
    pad = "  " * indent
    for key, value in payload.items():
        if isinstance(value, dict):
            print(f"{pad}{key}:")
            _print_human(value, indent + 1)
        elif isinstance(value, list) and value and isinstance(value[0], dict):
            print(f"{pad}{key}:")
            for item in value:
                _print_human(item, indent + 1)
                print()
        else:
            print(f"{pad}{key}: {value}")


# ---------------------------------------------------------------------------
# check


def cmd_check(args) -> int:
    bundle = _resolve_model(args.model)
    config = _config_for(bundle, args)
    names = args.field or bundle.field_names()
    from .sde import sigma_rank_info

    report = {"meta": _report_meta(bundle, args, config), "fields": []}
    report["meta"]["diffusion_rank"] = sigma_rank_info(
        bundle.system, box=bundle.box, seed=args.seed
    )
    worst = EXIT_OK
    for name in names:
        if name not in bundle.vectorfields:
            print(f"error: no vector field named {name!r} in the model", file=sys.stderr)
            return EXIT_USAGE
        X = bundle.vectorfields[name]
        entry = {"name": name}
        entry["classification"] = classify(X, bundle.system, config).to_dict()
        if bundle.system_type == "ito":
            ito_sys = bundle.system
            strat_sys = ito_to_strat(bundle.system)
        else:
            strat_sys = bundle.system
            ito_sys = strat_to_ito(bundle.system)
        try:
            if X.noise is None:
                entry["ito"] = residual_standard_ito(X, ito_sys, config).to_dict()
                entry["stratonovich"] = residual_standard_strat(X, strat_sys, config).to_dict()
            else:
                entry["ito"] = residual_W_ito(X, ito_sys, config, force=args.force).to_dict()
                entry["stratonovich"] = residual_W_strat(
                    X, strat_sys, config, force=args.force
                ).to_dict()
                if isinstance(X.noise, LinearW):
                    entry["agreement"] = agreement_analysis(X, ito_sys, config).to_dict()
        except SymmetryError as err:
            entry["error"] = str(err)
        report["fields"].append(entry)
        for calc in ("ito", "stratonovich"):
            if entry.get(calc, {}).get("verdict") == "inconclusive":
                worst = max(worst, EXIT_INCONCLUSIVE)
    _emit(report, args)
    if args.strict and worst == EXIT_INCONCLUSIVE:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


# ---------------------------------------------------------------------------
# convert


def cmd_convert(args) -> int:
    bundle = _resolve_model(args.model)
    if bundle.system_type == "ito":
        converted = ito_to_strat(bundle.system)
        text = render_system(converted, "stratonovich")
    else:
        converted = strat_to_ito(bundle.system)
        text = render_system(converted, "ito")
    if args.json:
        drift = converted.f if isinstance(converted, ItoSystem) else converted.b
        print(
            json.dumps(
                {
                    "model": str(bundle.path),
                    "model_sha256": bundle.sha256,
                    "type": "stratonovich" if bundle.system_type == "ito" else "ito",
                    "drift": [to_string(e) for e in drift],
                    "sigma": [[to_string(e) for e in row] for row in converted.sigma],
                },
                indent=2,
            )
        )
    else:
        print(text, end="")
    return EXIT_OK


# ---------------------------------------------------------------------------
# integrate


def cmd_integrate(args) -> int:
    bundle = _resolve_model(args.model)
    config = _config_for(bundle, args)
    if bundle.system_type != "ito":
        print("error: integrate expects an Ito model", file=sys.stderr)
        return EXIT_USAGE
    sys_ito: ItoSystem = bundle.system
    if sys_ito.ctx.n != 1:
        print("error: direct integration applies to scalar models", file=sys.stderr)
        return EXIT_USAGE
    if not args.field:
        print("error: --field is required", file=sys.stderr)
        return EXIT_USAGE
    name = args.field[0]
    if name not in bundle.vectorfields:
        print(f"error: no vector field named {name!r}", file=sys.stderr)
        return EXIT_USAGE
    X = bundle.vectorfields[name]

    cov: Optional[ChangeOfVariables] = None
    if args.cov:
        cov = _resolve_cov(bundle, args.cov[0])
    else:
        variable = integrating_variable(X.phi[0], sys_ito.ctx)
        cov = ChangeOfVariables(sys_ito.ctx, (variable,), direction="old_to_new")

    try:
        step = reduce_step(sys_ito, X, cov, config)
        form = integrate_scalar(step.transformed, config)
    except ReductionError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE

    report = {
        "meta": _report_meta(bundle, args, config),
        "field": name,
        "new_variable": to_string(cov.forward[0]),
        "step": step.to_dict(),
        "solution_form": form.to_dict(),
    }
    if X.noise is None:
        report["compatibility"] = compatibility_check(sys_ito, X.phi[0], config).to_dict()

    if args.paths > 0:
        terminals = mc.solution_form_terminals(
            form, 0.0, args.horizon, args.dt, args.paths, args.seed,
            x0=_initial_new_variable(cov, args.x0),
        )
        report["monte_carlo"] = _pipeline_crosscheck(
            bundle, cov, terminals, args
        )
    _emit(report, args)
    return EXIT_OK


def _initial_new_variable(cov: ChangeOfVariables, x0: float) -> float:
    from .expr import TIME, evaluate, state, wiener

    start = {state(1): x0, TIME: 0.0}
    for k in range(cov.ctx.m):
        start[wiener(k + 1)] = 0.0
    return evaluate(cov.forward[0], start, dict(cov.ctx.params))


def _pipeline_crosscheck(bundle, cov, terminals, args) -> dict:
    """Map solution-form terminals back through the inverse change of
    variables and compare against direct simulation on shared increments."""
    from .expr import eval_array, state, wiener, TIME

    sys_ito: ItoSystem = bundle.system
    direct = mc.euler_maruyama(
        sys_ito, [args.x0], T=args.horizon, dt=args.dt,
        n_paths=args.paths, seed=args.seed, snapshots=2,
    )
    w_T = direct.w[-1]
    if cov.inverse is not None:
        env = {state(1): terminals, TIME: args.horizon}
        for k in range(sys_ito.ctx.m):
            env[wiener(k + 1)] = w_T[:, k]
        with np.errstate(all="ignore"):
            mapped_back = np.asarray(
                eval_array(cov.inverse[0], env, dict(sys_ito.ctx.params)), dtype=float
            )
    else:
        # evaluation-only damped-Newton inversion of the forward map
        from .reduction import ReductionError, numeric_inverse

        solve = numeric_inverse(cov)
        mapped_back = np.full_like(terminals, np.nan)
        starts = direct.terminal_states()[:, 0]
        for p in range(len(terminals)):
            try:
                mapped_back[p] = solve(
                    terminals[p], args.horizon, w_T[p], starts[p]
                )
            except ReductionError:
                pass
    ok = np.isfinite(mapped_back) & ~direct.excluded
    frac_excluded = 1.0 - float(np.mean(ok))
    a = mapped_back[ok]
    b = direct.terminal_states()[ok, 0]
    se = float(np.sqrt(a.var(ddof=1) / len(a) + b.var(ddof=1) / len(b)))
    diff = float(abs(a.mean() - b.mean()))
    return {
        "paths": int(args.paths),
        "dt": args.dt,
        "horizon": args.horizon,
        "excluded_fraction": frac_excluded,
        "terminal_mean_pipeline": float(a.mean()),
        "terminal_mean_direct": float(b.mean()),
        "difference_se_units": diff / se if se > 0 else 0.0,
        "pass": bool(frac_excluded <= 0.05 and (se == 0 or diff / se < 4.0)),
    }


def _resolve_cov(bundle: ModelBundle, spec: str) -> ChangeOfVariables:
    if spec == "builtin:scaling":
        return scaling_adapted_cov(bundle.ctx)[0]
    if spec == "builtin:rotation":
        return rotation_adapted_cov(bundle.ctx)[0]
    if spec not in bundle.covs:
        raise ModelFileError(f"no change of variables named {spec!r}")
    return bundle.covs[spec]


# ---------------------------------------------------------------------------
# reduce


def cmd_reduce(args) -> int:
    bundle = _resolve_model(args.model)
    config = _config_for(bundle, args)
    if bundle.system_type != "ito":
        print("error: reduce expects an Ito model", file=sys.stderr)
        return EXIT_USAGE
    if not args.field:
        print("error: at least one --field is required", file=sys.stderr)
        return EXIT_USAGE
    try:
        fields = [bundle.vectorfields[name] for name in args.field]
    except KeyError as err:
        print(f"error: no vector field named {err}", file=sys.stderr)
        return EXIT_USAGE
    covs = []
    try:
        for i, name in enumerate(args.cov or []):
            covs.append(_resolve_cov(bundle, name))
        while len(covs) < len(fields):
            covs.append(scaling_adapted_cov(bundle.ctx)[0])
    except ModelFileError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if len(fields) == 1:
            result = reduce_step(bundle.system, fields[0], covs[0], config)
            payload = {"meta": _report_meta(bundle, args, config), "step": result.to_dict()}
        else:
            chain = reduce_sequence(bundle.system, fields, covs, config)
            payload = {"meta": _report_meta(bundle, args, config), "chain": chain.to_dict()}
    except (ReductionError, SymmetryError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    _emit(payload, args)
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args) -> int:
    bundle = _resolve_model(args.model)
    x0 = [float(v) for v in args.x0_list.split(",")] if args.x0_list else [args.x0] * bundle.ctx.n
    if len(x0) != bundle.ctx.n:
        print(f"error: need {bundle.ctx.n} initial values", file=sys.stderr)
        return EXIT_USAGE
    if bundle.system_type == "ito":
        ens = mc.euler_maruyama(
            bundle.system, x0, T=args.horizon, dt=args.dt,
            n_paths=args.paths, seed=args.seed,
        )
    else:
        ens = mc.heun_stratonovich(
            bundle.system, x0, T=args.horizon, dt=args.dt,
            n_paths=args.paths, seed=args.seed,
        )
    stats = mc.ensemble_stats(ens)
    csv_text = stats.to_csv()
    if args.csv_out:
        Path(args.csv_out).write_text(csv_text)
    payload = {
        "meta": {
            "model": str(bundle.path),
            "model_sha256": bundle.sha256,
            "scheme": ens.scheme,
            "seed": args.seed,
            "dt": args.dt,
            "horizon": args.horizon,
            "paths": args.paths,
            "x0": x0,
        },
        "excluded_fraction": ens.excluded_fraction,
        "terminal_mean": stats.mean[-1].tolist(),
        "terminal_var": stats.var[-1].tolist(),
        "terminal_se": stats.se[-1].tolist(),
    }
    if args.json:
        print(json.dumps(payload, indent=2))
    else:
        _print_human(payload)
        if not args.csv_out:
            print(csv_text, end="")
    return EXIT_OK


# ---------------------------------------------------------------------------
# examples (regression over the bundled models)


def _run_examples(only: Optional[str], seed: int, tol: float):
    from .examples import REGISTRY, run_case

    names = [only] if only else list(REGISTRY)
    unknown = [n for n in names if n not in REGISTRY]
    if unknown:
        raise ModelFileError(f"unknown example name(s): {unknown}; known: {list(REGISTRY)}")
    results = []
    for name in names:
        results.append(run_case(name, seed=seed, tol=tol))
    return results


def cmd_examples(args) -> int:
    try:
        results = _run_examples(args.only, args.seed, args.tol)
    except ModelFileError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    payload = {
        "seed": args.seed,
        "tolerance": args.tol,
        "results": [r.to_dict() for r in results],
    }
    if args.json:
        print(json.dumps(payload, indent=2))
    else:
        width = max(len(r.name) for r in results)
        for r in results:
            print(f"{r.name:<{width}}  {r.status.upper():<12} {r.detail}")
    if any(r.status == "fail" for r in results):
        return EXIT_VERDICT
    if args.strict and any(r.status == "inconclusive" for r in results):
        return EXIT_INCONCLUSIVE
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdesym",
        description=(
            "Verify deterministic, random and Wiener-acting symmetries of "
            "Ito systems, convert between the Ito and Stratonovich calculi, "
            "integrate and reduce by symmetry-adapted variables, and "
            "validate everything with Monte Carlo simulation."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, model=True):
        if model:
            p.add_argument("--model", required=True, help="model file path or bundled model name")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol", type=float, default=1e-9, help="zero-test tolerance")
        p.add_argument("--json", action="store_true", help="emit a JSON report")
        p.add_argument("--strict", action="store_true", help="inconclusive results exit 3")

    p = sub.add_parser("check", help="classify and verify candidate symmetry fields")
    common(p)
    p.add_argument("--field", action="append", help="field name (repeatable; default: all)")
    p.add_argument("--force", action="store_true", help="analyze conformally rejected Wiener actions")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("convert", help="convert between Ito and Stratonovich forms")
    common(p)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("integrate", help="scalar symmetry integration with cross-check")
    common(p)
    p.add_argument("--field", action="append", required=False)
    p.add_argument("--cov", action="append", help="change-of-variables name or builtin:scaling")
    p.add_argument("--x0", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--paths", type=int, default=10000)
    p.add_argument("--horizon", type=float, default=1.0)
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("reduce", help="reduce by one or more symmetries")
    common(p)
    p.add_argument("--field", action="append", required=False)
    p.add_argument("--cov", action="append", help="cov names, or builtin:scaling / builtin:rotation")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("simulate", help="simulate the model and dump statistics")
    common(p)
    p.add_argument("--x0", type=float, default=1.0, help="initial value for every component")
    p.add_argument("--x0-list", dest="x0_list", help="comma-separated initial state")
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--paths", type=int, default=10000)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--csv-out", dest="csv_out", help="write the t/mean/var/se table here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("examples", help="run the bundled regression suite")
    common(p, model=False)
    p.add_argument("--only", help="run a single named case")
    p.set_defaults(func=cmd_examples)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ModelFileError, ExprSyntaxError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
