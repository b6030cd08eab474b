"""Command-line interface.

Subcommands: simulate, train, tune, experiment, pm10, bounds.  Every flag
can also be supplied through ``--config FILE`` holding flat ``key = value``
lines (command-line values win).  Exit codes: 0 on success, 1 on a runtime
error, 2 on a usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import bounds as bounds_mod
from .dgp import DgpSpec, make_supervised, simulate_arx_arch, write_trajectory_csv
from .errors import BelowThresholdError, SpdnnError
from .harness import (CRITERION_FOR_LOSS, ExperimentSpec, TuningGrid, pm10_pipeline,
                      results_to_csv, run_replications, synthetic_pm10_csv, tune_grid)
from .loss import LossKind
from .network import Architecture, save_network
from .penalty import PenaltyConfig
from .rng import derive_seed
from .train import TrainConfig, train_spdnn, write_training_log


def _parse_config_file(path: str) -> dict:
    """Flat ``key = value`` lines; '#' starts a comment."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpdnnError(f"{path}:{lineno}: expected 'key = value'")
        key, _, raw = line.partition("=")
        values[key.strip().replace("-", "_")] = raw.strip()
    return values


def _coerce(raw: str):
    parts = raw.split()
    if len(parts) > 1:
        return [_coerce(p) for p in parts]
    lowered = raw.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            continue
    return raw


def _common_flags(sp):
    sp.add_argument("--seed", type=int, default=0, help="master RNG seed")
    sp.add_argument("--out", default=".", help="output directory")
    sp.add_argument("--config", default=None, help="flat key = value config file")
    sp.add_argument("--threads", type=int, default=1, help="worker pool size")


def _train_flags(sp):
    sp.add_argument("--lr", type=float, default=1e-3)
    sp.add_argument("--batch-size", type=int, default=32)
    sp.add_argument("--patience", type=int, default=30)
    sp.add_argument("--max-epochs", type=int, default=2000)
    sp.add_argument("--no-shuffle", action="store_true")


def _arch_flags(sp, default_input=3):
    sp.add_argument("--input-dim", type=int, default=default_input)
    sp.add_argument("--hidden", type=int, nargs="+", default=[100, 100])
    sp.add_argument("--weight-bound", type=float, default=1e3)
    sp.add_argument("--output-bound", type=float, default=1e3)


def _dgp_flags(sp):
    sp.add_argument("--dgp", choices=["dgp1", "dgp2"], default="dgp1")
    sp.add_argument("--phi0", type=float, default=0.25)
    sp.add_argument("--phi1", type=float, default=0.1)
    sp.add_argument("--alpha0", type=float, default=0.5)
    sp.add_argument("--alpha1", type=float, default=0.5)
    sp.add_argument("--burn-in", type=int, default=1000)


def _as_list(value):
    """Config files collapse single-element nargs='+' values to scalars."""
    return list(value) if isinstance(value, (list, tuple)) else [value]


def _dgp_from(args) -> DgpSpec:
    return DgpSpec(kind=args.dgp, phi0=args.phi0, phi1=args.phi1,
                   alpha0=args.alpha0, alpha1=args.alpha1, burn_in=args.burn_in)


def _arch_from(args) -> Architecture:
    return Architecture.of(args.input_dim, _as_list(args.hidden),
                           weight_bound=args.weight_bound, output_bound=args.output_bound)


def _cfg_from(args) -> TrainConfig:
    return TrainConfig(learning_rate=args.lr, batch_size=args.batch_size,
                       patience=args.patience, max_epochs=args.max_epochs,
                       seed=args.seed, shuffle=not args.no_shuffle)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_simulate(args) -> int:
    traj = simulate_arx_arch(_dgp_from(args), args.n, args.seed)
    path = _outdir(args) / f"{args.dgp}_n{args.n}_seed{args.seed}.csv"
    write_trajectory_csv(traj, path)
    print(path)
    return 0


def _cmd_train(args) -> int:
    spec = _dgp_from(args)
    traj = simulate_arx_arch(spec, args.n, derive_seed(args.seed, "train"))
    data = make_supervised(traj)
    kind = LossKind(args.loss)
    cfg = _cfg_from(args)
    model = train_spdnn(data, _arch_from(args), PenaltyConfig(args.lam, args.tau)
                        if args.lam > 0 else PenaltyConfig(0.0, 1.0), kind, cfg)
    out = _outdir(args)
    name = "spdnn" if args.lam > 0 else "npdnn"
    save_network(model.network, out / f"{name}.net")
    write_training_log(model, out / f"{name}_log.csv")
    print(f"{name}: stopped at epoch {model.stopped_epoch}, "
          f"best objective {model.best_objective:.6g} (epoch {model.best_epoch})")
    return 0


def _cmd_tune(args) -> int:
    spec = _dgp_from(args)
    seed = args.seed
    train_set = make_supervised(simulate_arx_arch(spec, args.n, derive_seed(seed, "train")))
    valid_set = make_supervised(simulate_arx_arch(spec, args.n, derive_seed(seed, "valid")))
    criterion = CRITERION_FOR_LOSS[args.loss]
    grid = (TuningGrid.full(criterion) if args.full else TuningGrid.thinned(criterion)).bind(args.n)
    result = tune_grid(train_set, valid_set, grid, _arch_from(args), LossKind(args.loss),
                       replace(_cfg_from(args), seed=derive_seed(seed, "tune")))
    out = _outdir(args) / "score_table.csv"
    lambdas, taus = grid.lambda_values(), grid.tau_values()
    with open(out, "w", encoding="ascii") as fh:
        fh.write(f"# seed={seed}\n")
        fh.write("lambda\\tau," + ",".join(repr(t) for t in taus) + "\n")
        for i, lam in enumerate(lambdas):
            cells = ",".join(repr(v) if np.isfinite(v) else "failed"
                             for v in result.score_table[i])
            fh.write(f"{lam!r},{cells}\n")
    print(f"best lambda = {result.best_lambda!r}, best tau = {result.best_tau!r} "
          f"({grid.criterion} = {result.score_table[result.best_i, result.best_j]!r})")
    print(out)
    return 0


def _cmd_experiment(args) -> int:
    spec = ExperimentSpec(
        dgp=_dgp_from(args),
        sizes=tuple(_as_list(args.sizes)),
        replications=args.reps,
        test_size=args.test_size,
        losses=tuple(_as_list(args.losses)),
        arch=_arch_from(args),
        master_seed=args.seed,
    )
    grid = TuningGrid.full() if args.full else TuningGrid.thinned()
    rows = run_replications(spec, grid, _cfg_from(args), threads=args.threads)
    path = _outdir(args) / "results.csv"
    results_to_csv(rows, path, args.seed)
    print(path)
    return 0


def _cmd_pm10(args) -> int:
    out = _outdir(args)
    data_path = args.data
    if args.synthetic:
        data_path = out / "pm10_synthetic.csv"
        synthetic_pm10_csv(data_path, seed=args.seed)
    if data_path is None:
        raise SpdnnError("pm10 needs --data FILE (CSV with columns date,pm10,rh) "
                         "or --synthetic")
    grid = TuningGrid.full("mse") if args.full else TuningGrid.thinned("mse")
    arch = Architecture.of(2, _as_list(args.hidden), weight_bound=args.weight_bound,
                           output_bound=args.output_bound)
    reports = pm10_pipeline(data_path, arch, grid, _cfg_from(args),
                            out_csv=out / "pm10_predictions.csv")
    print(f"{'predictor':<10} {'mean rel pred error (%)':>24} {'mean abs pred error':>20}")
    for name in ("spdnn", "npdnn", "dar"):
        rep = reports[name]
        print(f"{name:<10} {100 * rep.mean_rel:>24.2f} {rep.mean_abs:>20.2f}")
    print(out / "pm10_predictions.csv")
    return 0


def _cmd_bounds(args) -> int:
    quantities: dict[str, object] = {}
    inputs = bounds_mod.BoundInputs(
        n=args.n, eta=args.eta, nu0=args.nu0, M=args.M, theta_inf=args.theta_inf,
        G=args.G, C_sigma=args.C_sigma, L=args.depth, N=args.width,
        B=args.weight_bound, S=args.sparsity)
    thresholds = bounds_mod.sample_size_thresholds(inputs)
    quantities["n"] = args.n
    quantities["n0_threshold"] = thresholds["n0"]
    quantities["n_closed_threshold"] = thresholds["n_closed"]
    try:
        eps1, eps_prime = bounds_mod.generalization_epsilon(inputs)
        quantities["eps1"] = eps1
        quantities["eps_prime"] = eps_prime
        quantities["eps1_cap_2M_n_nu0_half"] = 2.0 * args.M / args.n ** (args.nu0 / 2.0)
        quantities["log_covering_at_eps1"] = bounds_mod.log_covering_bound(
            eps1, args.depth, args.width, args.weight_bound, args.sparsity,
            args.G, args.C_sigma)
        quantities["concentration_at_eps1"] = bounds_mod.concentration_bound(inputs, eps1)
    except BelowThresholdError as exc:
        quantities["eps1"] = f"unavailable ({exc})"

    dep = bounds_mod.DependenceParams(psi_kind=args.psi, L1=args.L1, L2=args.L2, mu=args.mu)
    params = bounds_mod.ScheduleParams(nu1=args.nu1, nu2=args.nu2, nu3=args.nu3,
                                       nu4=args.nu4, nu5=args.nu5, nu6=args.nu6,
                                       K_ell=args.K_ell, C1n=args.C1n, C2n=args.C2n)
    regime = args.regime.replace("-", "_")
    arch = Architecture.of(args.input_dim, [args.width] * args.depth,
                           weight_bound=args.weight_bound)
    sched = bounds_mod.schedule(regime, params, dep, arch, args.n,
                                lambda_scale=args.lambda_scale)
    quantities["regime"] = regime
    quantities["lambda_n"] = sched.lambda_n
    quantities["tau_n_max"] = sched.tau_n_max
    quantities["rho_n"] = sched.rho_n
    rho4 = bounds_mod.rho_n_weak_dependence(dep, args.M, args.n)
    quantities["rate_exponent"] = rho4.exponent
    quantities["C1n_from_dependence"] = rho4.C1n
    quantities["C2n_from_dependence"] = rho4.C2n

    rate = bounds_mod.holder_rate(args.smoothness, args.input_dim,
                                  args.nu3, args.nu4, args.nu6)
    quantities["holder_exponent_approx"] = rate.exponent_approx
    quantities["holder_exponent_tail"] = rate.exponent_tail
    quantities["holder_exponent_overall"] = rate.overall
    quantities["holder_nu1"] = rate.nu1
    quantities["holder_nu2"] = rate.nu2
    quantities["holder_rate"] = rate.rate_string

    if args.json:
        print(json.dumps({k: (v if isinstance(v, (int, float, str)) else str(v))
                          for k, v in quantities.items()}, indent=2))
    else:
        width = max(len(k) for k in quantities)
        for key, value in quantities.items():
            if isinstance(value, float):
                print(f"{key:<{width}}  {value!r}")
            else:
                print(f"{key:<{width}}  {value}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spdnn",
                                     description="Sparse-penalized network estimation "
                                                 "for dependent time series")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="emit a trajectory CSV")
    _common_flags(sp)
    _dgp_flags(sp)
    sp.add_argument("--n", type=int, required=True)
    sp.set_defaults(func=_cmd_simulate)

    sp = sub.add_parser("train", help="one penalized or unpenalized fit")
    _common_flags(sp)
    _dgp_flags(sp)
    _arch_flags(sp)
    _train_flags(sp)
    sp.add_argument("--n", type=int, default=500)
    sp.add_argument("--loss", choices=["l1", "l2"], default="l2")
    sp.add_argument("--lam", type=float, default=0.0, help="penalty weight (0 = unpenalized)")
    sp.add_argument("--tau", type=float, default=1e-2, help="clipping threshold")
    sp.set_defaults(func=_cmd_train)

    sp = sub.add_parser("tune", help="grid search; emits the score table")
    _common_flags(sp)
    _dgp_flags(sp)
    _arch_flags(sp)
    _train_flags(sp)
    sp.add_argument("--n", type=int, default=500)
    sp.add_argument("--loss", choices=["l1", "l2"], default="l2")
    sp.add_argument("--full", action="store_true",
                    help="the full 11x11 grid instead of the desk-scale 6x6")
    sp.set_defaults(func=_cmd_tune)

    sp = sub.add_parser("experiment", help="replication sweep; emits results.csv")
    _common_flags(sp)
    _dgp_flags(sp)
    _arch_flags(sp)
    _train_flags(sp)
    sp.add_argument("--sizes", type=int, nargs="+", default=[250, 500, 1000])
    sp.add_argument("--reps", type=int, default=20)
    sp.add_argument("--test-size", type=int, default=10_000)
    sp.add_argument("--losses", nargs="+", choices=["l1", "l2"], default=["l1", "l2"])
    sp.add_argument("--full", action="store_true",
                    help="the full 11x11 grid instead of the desk-scale 6x6")
    sp.set_defaults(func=_cmd_experiment)

    sp = sub.add_parser("pm10", help="forecasting pipeline with the DAR baseline")
    _common_flags(sp)
    _train_flags(sp)
    sp.add_argument("--data", default=None, help="CSV with columns date,pm10,rh")
    sp.add_argument("--synthetic", action="store_true",
                    help="generate and use a noise-free synthetic series")
    sp.add_argument("--full", action="store_true",
                    help="the full 11x11 grid instead of the desk-scale 6x6")
    sp.add_argument("--hidden", type=int, nargs="+", default=[100, 100])
    sp.add_argument("--weight-bound", type=float, default=1e3)
    sp.add_argument("--output-bound", type=float, default=1e3)
    sp.set_defaults(func=_cmd_pm10)

    sp = sub.add_parser("bounds", help="theory calculators")
    _common_flags(sp)
    sp.add_argument("--regime", choices=["psi", "theta-inf"], default="psi")
    sp.add_argument("--psi", choices=["theta", "eta", "kappa", "lambda"], default="theta")
    sp.add_argument("--mu", type=float, default=0.0)
    sp.add_argument("--L1", type=float, default=1.0)
    sp.add_argument("--L2", type=float, default=1.0)
    sp.add_argument("--M", type=float, default=1.0)
    sp.add_argument("--n", type=int, default=10_000)
    sp.add_argument("--eta", type=float, default=0.05)
    sp.add_argument("--nu0", type=float, default=0.5)
    sp.add_argument("--theta-inf", type=float, default=0.0)
    sp.add_argument("--G", type=float, default=1.0)
    sp.add_argument("--C-sigma", dest="C_sigma", type=float, default=1.0)
    sp.add_argument("--depth", type=int, default=2)
    sp.add_argument("--width", type=int, default=100)
    sp.add_argument("--weight-bound", type=float, default=1.0)
    sp.add_argument("--sparsity", type=float, default=100.0)
    for i in range(1, 7):
        sp.add_argument(f"--nu{i}", type=float,
                        default={1: 0.01, 2: 0.01, 3: 1.0, 4: 0.3, 5: 0.66, 6: 0.16}[i])
    sp.add_argument("--K-ell", dest="K_ell", type=float, default=1.0)
    sp.add_argument("--C1n", type=float, default=1.0)
    sp.add_argument("--C2n", type=float, default=1.0)
    sp.add_argument("--smoothness", type=float, default=3.0)
    sp.add_argument("--input-dim", type=int, default=3)
    sp.add_argument("--lambda-scale", type=float, default=1.0,
                    help="multiplier on lambda_n for sensitivity studies")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=_cmd_bounds)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "config", None):
        try:
            overrides = {k: _coerce(v) for k, v in _parse_config_file(args.config).items()}
        except (OSError, SpdnnError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        # command line wins: reparse with config values as defaults
        parser = build_parser()
        for action in parser._subparsers._group_actions[0].choices.values():  # noqa: SLF001
            known = {a.dest for a in action._actions}  # noqa: SLF001
            action.set_defaults(**{k: v for k, v in overrides.items() if k in known})
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return int(exc.code or 0)
    try:
        return args.func(args)
    except SpdnnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
