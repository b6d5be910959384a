"""Command-line interface: seed, bench, aspect, approx, check, gen.

Every command emits one delimited report (stdout or --out). When --out is
set, matplotlib figures are rendered next to the report file unless
--no-plot is given; figure failures never fail the command. Exit codes:
0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import checks as checks_mod
from . import oracle
from .approx_scheme import EnumerationBudgetError, SchemeParams, approx_scheme
from .approx_ip import IpEstimatorConfig
from .data import (
    DataFormatError,
    DataSet,
    aspect_ratio,
    gaussian_mixture,
    load_csv,
    load_raw,
    store_raw,
)
from .osq import SamplingExhausted
from .report import render_report, write_report
from .seeding import (
    afk_mc2,
    build_seeding_matrix,
    estimate_phi_bound,
    kmeanspp,
    pseudo_approx_2k,
    qi_kmeanspp,
    qi_noisy_kmeanspp,
)

ALGOS = ("kmpp", "qikmpp", "qikmpp-noisy", "afkmc2", "pseudo2k")
SQ_ALGOS = {"qikmpp", "qikmpp-noisy", "pseudo2k"}


def _load_dataset(args) -> DataSet:
    if args.format == "csv":
        return load_csv(args.input)
    if args.shape is None:
        raise DataFormatError("raw format needs --shape N,D")
    try:
        n, d = (int(tok) for tok in args.shape.split(","))
    except ValueError:
        raise DataFormatError(f"--shape must be N,D, got {args.shape!r}") from None
    return load_raw(args.input, n, d)


def _emit(args, kind: str, meta: dict, columns: list[str], rows: list[dict], figure=None):
    text = render_report(kind, meta, columns, rows)
    if args.out:
        write_report(args.out, kind, meta, columns, rows)
        print(f"wrote {args.out}")
        if figure is not None and not args.no_plot:
            fig_path = args.out + ".png"
            try:
                figure(fig_path)
                print(f"wrote {fig_path}")
            except Exception as exc:  # figures are best-effort
                print(f"figure skipped: {exc}", file=sys.stderr)
    else:
        sys.stdout.write(text)


def _noisy_cfg(args, ds: DataSet):
    if args.ip_group_size is None and args.ip_groups is None:
        return None  # derive the faithful default inside the seeder
    group_size = args.ip_group_size or 64
    n_groups = args.ip_groups or 5
    if n_groups % 2 == 0:
        n_groups += 1
    return IpEstimatorConfig(eps=args.eps, delta=args.delta, group_size=group_size, n_groups=n_groups)


def _make_runner(args, ds: DataSet, algo: str):
    """Returns (runner(seed) -> SeedingResult, shared_setup_seconds)."""
    if algo in SQ_ALGOS:
        t0 = time.perf_counter()
        matrix = build_seeding_matrix(ds)
        phi_hat = estimate_phi_bound(ds)
        setup_s = time.perf_counter() - t0
        if algo == "qikmpp":
            runner = lambda s: qi_kmeanspp(
                ds, args.k, delta=args.delta, seed=s, matrix=matrix, phi_hat=phi_hat
            )
        elif algo == "pseudo2k":
            runner = lambda s: pseudo_approx_2k(
                ds, args.k, seed=s, use_sq=True, delta=args.delta,
                matrix=matrix, phi_hat=phi_hat,
            )
        else:
            if args.eps is None:
                raise ValueError("qikmpp-noisy needs --eps")
            cfg = _noisy_cfg(args, ds)
            if cfg is None:
                est_cfg = IpEstimatorConfig.from_tolerance(
                    args.eps, args.delta, max(1.0, phi_hat / 32.0) ** 2
                )
                if est_cfg.draws > 10**8:
                    raise ValueError(
                        f"noisy estimator schedule needs {est_cfg.draws} draws per "
                        "distance at this eps/delta/data scale; pass "
                        "--ip-group-size/--ip-groups to pin a fixed budget"
                    )
                if est_cfg.draws > 10**6:
                    print(
                        f"note: noisy estimator schedule is {est_cfg.draws} draws per distance; "
                        "pass --ip-group-size/--ip-groups for a fixed budget",
                        file=sys.stderr,
                    )
            runner = lambda s: qi_noisy_kmeanspp(
                ds, args.k, eps=args.eps, delta=args.delta, seed=s,
                matrix=matrix, phi_hat=phi_hat, cfg=cfg,
            )
        return runner, setup_s
    if algo == "kmpp":
        return (lambda s: kmeanspp(ds, args.k, seed=s)), 0.0
    if algo == "afkmc2":
        return (lambda s: afk_mc2(ds, args.k, chain_len=args.chain_len, seed=s)), 0.0
    raise ValueError(f"unknown algorithm {algo!r}")


def _run_many(runner, seeds: list[int], threads: int):
    if threads <= 1:
        return [runner(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(runner, seeds))


def _split_setup_sample(result):
    """Per-run split: chain/q setup happens in round 1 for afkmc2, else 0."""
    if result.algorithm == "afkmc2":
        setup = result.per_round[0].seconds
        sample = sum(r.seconds for r in result.per_round[1:])
        return setup, sample
    return 0.0, result.sample_seconds


def _seed_rows(ds, results, seeds):
    rows = []
    for run, (res, s) in enumerate(zip(results, seeds)):
        setup_s, sample_s = _split_setup_sample(res)
        rows.append(
            {
                "run": run,
                "seed": s,
                "cost": oracle.exact_cost(ds, res.centers),
                "setup_s": setup_s,
                "sample_s": sample_s,
                "trials": res.total_trials,
                "centers": ";".join(str(i) for i in res.center_indices),
            }
        )
    return rows


def _append_summary(rows, runs: int):
    if runs < 2:
        return
    costs = np.array([float(r["cost"]) for r in rows[:runs]])
    rows.append(
        {
            "run": "mean",
            "seed": "",
            "cost": float(costs.mean()),
            "setup_s": float(np.mean([float(r["setup_s"]) for r in rows[:runs]])),
            "sample_s": float(np.mean([float(r["sample_s"]) for r in rows[:runs]])),
            "trials": float(np.mean([float(r["trials"]) for r in rows[:runs]])),
            "centers": "",
        }
    )
    rows.append(
        {
            "run": "var",
            "seed": "",
            "cost": float(costs.var(ddof=1)),
            "setup_s": "",
            "sample_s": "",
            "trials": "",
            "centers": "",
        }
    )


def cmd_seed(args) -> int:
    ds = _load_dataset(args)
    runner, shared_setup = _make_runner(args, ds, args.algo)
    seeds = [args.seed + r for r in range(args.runs)]
    results = _run_many(runner, seeds, args.threads)
    rows = _seed_rows(ds, results, seeds)
    _append_summary(rows, args.runs)
    meta = {
        "command": "seed",
        "input": args.input,
        "n_points": ds.n_points,
        "n_dims": ds.n_dims,
        "algo": args.algo,
        "k": args.k,
        "delta": args.delta,
        "eps": "" if args.eps is None else args.eps,
        "chain_len": args.chain_len,
        "runs": args.runs,
        "base_seed": args.seed,
        "shared_setup_s": shared_setup,
    }
    columns = ["run", "seed", "cost", "setup_s", "sample_s", "trials", "centers"]
    per_round = [(r.round, r.trials, r.seconds) for r in results[0].per_round]
    from .plots import render_seed_figure

    _emit(args, "seed", meta, columns, rows, figure=lambda p: render_seed_figure(per_round, p))
    return 0


def cmd_bench(args) -> int:
    ds = _load_dataset(args)
    algos = [a.strip() for a in args.algos.split(",") if a.strip()]
    for a in algos:
        if a not in ALGOS:
            raise ValueError(f"unknown algorithm {a!r} (choose from {', '.join(ALGOS)})")
    k_list = sorted({int(tok) for tok in args.k_list.split(",") if tok.strip()})
    rows = []
    curves = {}
    for algo in algos:
        cum = None
        curves[algo] = {"k": [], "cum_s": [], "cost_mean": []}
        for k in k_list:
            sub = argparse.Namespace(**{**vars(args), "k": k, "algo": algo})
            runner, shared_setup = _make_runner(sub, ds, algo)
            if cum is None:
                cum = shared_setup  # one-off structure build charged once
            seeds = [args.seed + r for r in range(args.runs)]
            results = _run_many(runner, seeds, args.threads)
            costs, setups, samples = [], [], []
            for run, (res, s) in enumerate(zip(results, seeds)):
                setup_s, sample_s = _split_setup_sample(res)
                costs.append(oracle.exact_cost(ds, res.centers))
                setups.append(setup_s)
                samples.append(sample_s)
                rows.append(
                    {
                        "algo": algo, "k": k, "run": run, "seed": s,
                        "cost": costs[-1], "setup_s": setup_s, "sample_s": sample_s,
                        "cum_s": "",
                    }
                )
            cum += float(np.mean(setups)) + float(np.mean(samples))
            rows.append(
                {
                    "algo": algo, "k": k, "run": "mean", "seed": "",
                    "cost": float(np.mean(costs)),
                    "setup_s": float(np.mean(setups)),
                    "sample_s": float(np.mean(samples)),
                    "cum_s": cum,
                }
            )
            curves[algo]["k"].append(k)
            curves[algo]["cum_s"].append(cum)
            curves[algo]["cost_mean"].append(float(np.mean(costs)))
    meta = {
        "command": "bench",
        "input": args.input,
        "n_points": ds.n_points,
        "n_dims": ds.n_dims,
        "algos": ",".join(algos),
        "k_list": ",".join(str(k) for k in k_list),
        "delta": args.delta,
        "eps": "" if args.eps is None else args.eps,
        "chain_len": args.chain_len,
        "runs": args.runs,
        "base_seed": args.seed,
    }
    columns = ["algo", "k", "run", "seed", "cost", "setup_s", "sample_s", "cum_s"]
    from .plots import render_bench_figure

    _emit(args, "bench", meta, columns, rows, figure=lambda p: render_bench_figure(curves, p))
    return 0


def cmd_aspect(args) -> int:
    ds = _load_dataset(args)
    rep = aspect_ratio(ds, sample_size=args.sample, seed=args.seed)
    meta = {
        "command": "aspect",
        "input": args.input,
        "n_points": ds.n_points,
        "n_dims": ds.n_dims,
        "sampled": "" if args.sample is None else args.sample,
    }
    columns = ["d_min", "d_max", "zeta", "duplicate_pairs", "n_points_used"]
    rows = [
        {
            "d_min": rep.d_min,
            "d_max": rep.d_max,
            "zeta": rep.zeta,
            "duplicate_pairs": rep.duplicate_pairs,
            "n_points_used": rep.n_points_used,
        }
    ]
    _emit(args, "aspect", meta, columns, rows)
    return 0


def cmd_approx(args) -> int:
    ds = _load_dataset(args)
    if args.rho is not None or args.tau is not None or args.rounds is not None:
        base = SchemeParams.from_tolerance(args.k, args.eps, budget=args.budget)
        params = SchemeParams(
            k=args.k,
            rho=args.rho or base.rho,
            tau=args.tau or base.tau,
            outer_rounds=args.rounds or base.outer_rounds,
            budget=args.budget,
        )
    else:
        params = None
    result = approx_scheme(
        ds, args.k, args.eps, seed=args.seed, budget=args.budget, params=params
    )
    row = {
        "cost": result.cost,
        "c_init_cost": result.c_init_cost,
        "n_candidates": result.n_candidates,
        "rounds": result.rounds_run,
        "rho": result.params.rho,
        "tau": result.params.tau,
        "opt_cost": "",
        "ratio": "",
        "seconds_s": result.seconds,
    }
    if args.oracle:
        opt_cost, _ = oracle.optimal_kmeans_bruteforce(ds, args.k)
        row["opt_cost"] = opt_cost
        if opt_cost > 0:
            row["ratio"] = result.cost / opt_cost
        else:
            row["ratio"] = 1.0 if result.cost == 0 else float("inf")
        print(f"cost/OPT ratio = {row['ratio']}")
    meta = {
        "command": "approx",
        "input": args.input,
        "n_points": ds.n_points,
        "n_dims": ds.n_dims,
        "k": args.k,
        "eps": args.eps,
        "budget": args.budget,
        "base_seed": args.seed,
    }
    columns = list(row.keys())
    _emit(args, "approx", meta, columns, [row])
    return 0


def cmd_check(args) -> int:
    results = checks_mod.run_checks(name_filter=args.filter, seed=args.seed, fault=args.inject)
    if not results:
        print(f"no checks match filter {args.filter!r}", file=sys.stderr)
        return 1
    rows = []
    for res in results:
        print(f"{'PASS' if res.passed else 'FAIL'} {res.name}: {res.detail}")
        rows.append({"check": res.name, "passed": res.passed, "detail": res.detail})
    if args.out:
        meta = {"command": "check", "filter": args.filter or "", "base_seed": args.seed}
        write_report(args.out, "check", meta, ["check", "passed", "detail"], rows)
        print(f"wrote {args.out}")
    return 0 if all(r.passed for r in results) else 1


def cmd_gen(args) -> int:
    ds = gaussian_mixture(
        n_points=args.n,
        n_dims=args.d,
        n_components=args.components,
        separation=args.separation,
        seed=args.seed,
        noise=args.noise,
    )
    if args.format == "csv":
        with open(args.out, "w", encoding="utf-8") as fh:
            for row in ds.values:
                fh.write(",".join(repr(float(x)) for x in row) + "\n")
    else:
        store_raw(ds, args.out)
    print(f"wrote {args.out} ({ds.n_points}x{ds.n_dims})")
    return 0


def _add_io_args(p):
    p.add_argument("--input", required=True, help="dataset file")
    p.add_argument("--format", choices=("csv", "raw"), default="csv")
    p.add_argument("--shape", default=None, help="N,D (required for raw format)")
    p.add_argument("--out", default=None, help="report path (stdout when omitted)")
    p.add_argument("--no-plot", action="store_true", help="skip figure rendering")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="d2seed",
        description="Squared-distance seeding with sample-query tree acceleration",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("seed", help="run one seeding algorithm")
    _add_io_args(p)
    p.add_argument("--algo", choices=ALGOS, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--chain-len", type=int, default=200)
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument(
        "--ip-group-size", type=int, default=None,
        help="noisy variant: samples per inner-product group (overrides the derived schedule)",
    )
    p.add_argument(
        "--ip-groups", type=int, default=None,
        help="noisy variant: median-of-means group count, rounded up to odd",
    )
    p.set_defaults(func=cmd_seed)

    p = sub.add_parser("bench", help="compare algorithms across k")
    _add_io_args(p)
    p.add_argument("--algos", default="kmpp,qikmpp")
    p.add_argument("--k-list", default="2,4,6,8,10")
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--chain-len", type=int, default=200)
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument(
        "--ip-group-size", type=int, default=None,
        help="noisy variant: samples per inner-product group (overrides the derived schedule)",
    )
    p.add_argument(
        "--ip-groups", type=int, default=None,
        help="noisy variant: median-of-means group count, rounded up to odd",
    )
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("aspect", help="extremal distance diagnostics")
    _add_io_args(p)
    p.add_argument("--sample", type=int, default=None, help="subsample size for large inputs")
    p.set_defaults(func=cmd_aspect)

    p = sub.add_parser("approx", help="enumeration-based (1+eps) refinement")
    _add_io_args(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--budget", type=int, default=10**7)
    p.add_argument("--rho", type=int, default=None)
    p.add_argument("--tau", type=int, default=None)
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--oracle", action="store_true", help="compare against brute-force optimum")
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser("check", help="statistical invariant suites")
    p.add_argument("--filter", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--inject", default=None, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("gen", help="write a synthetic Gaussian-mixture dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "raw"), default="csv")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--d", type=int, default=16)
    p.add_argument("--components", type=int, default=10)
    p.add_argument("--separation", type=float, default=20.0)
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        DataFormatError,
        SamplingExhausted,
        EnumerationBudgetError,
        ValueError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
