"""Command-line entry point: ``quenchlab <subcommand> ...``.

Exit codes: 0 success, 2 usage or configuration error, 3 infeasible scheme.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys

import numpy as np

from . import harness
from .environments import ParameterError
from .selectors import (
    InfeasibleSchemeError,
    UniformPermutation,
    UniformSubset,
    UpRightPath,
    UpRightPathAvoidSquare,
    UpRightPathThrough,
    L_statistic,
    count_configurations,
    iter_inclusion_rows,
)
from .theory import (
    BoundParams,
    ScalingRegime,
    convergence_conditions,
    lemma22_threshold_and_tail,
    lemma23_tail,
    lemma26_tail_and_validity,
)

EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _num(s: str) -> float:
    s = s.strip().lower()
    if s in ("inf", "infinity"):
        return math.inf
    return float(s)


def _point(s: str) -> tuple:
    i, j = s.split(",")
    return int(i), int(j)


def _grid(s: str) -> np.ndarray:
    """``a:b:k`` (k evenly spaced values) or a comma list."""
    if ":" in s:
        a, b, k = s.split(":")
        return np.linspace(_num(a), _num(b), int(k))
    return np.array([_num(x) for x in s.split(",")])


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="quenchlab", description="Quenched limit theorems for randomly selected sums.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="run a two-level Monte Carlo experiment")
    src = sim.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="INI experiment config")
    src.add_argument("--preset", help="named preset (see `presets`)")
    sim.add_argument("--output", help="result file (overrides the config)")
    sim.add_argument("--format", choices=("csv", "json"))
    sim.add_argument("--seed", type=int)
    sim.add_argument("--threads", type=int)
    sim.add_argument("--n-env", type=int)
    sim.add_argument("--n-sel", type=int)
    sim.add_argument("--sizes", help="comma list of sizes")

    pre = sub.add_parser("presets", help="list presets or print one as a config file")
    pre.add_argument("name", nargs="?")

    inc = sub.add_parser("inclusion", help="exact inclusion probabilities as CSV")
    inc.add_argument("--scheme", required=True, choices=("uprr", "through", "avoid", "subset", "perm"))
    inc.add_argument("--N", type=int)
    inc.add_argument("--M", type=int)
    inc.add_argument("--waypoint", type=_point, action="append", default=[], help="i,j (repeatable)")
    inc.add_argument("--beta", type=float, default=0.5)
    inc.add_argument("--n", type=int)
    inc.add_argument("--m", type=int)

    cc = sub.add_parser("check-conditions", help="moment/exponent conditions for convergence")
    cc.add_argument("--alpha", type=_num, required=True)
    cc.add_argument("--p", type=_num, default=math.inf)
    cc.add_argument("--eta", type=_num, required=True)
    cc.add_argument("--mu", type=_num, required=True)
    cc.add_argument("--lambda", dest="lam", type=_num, required=True)
    cc.add_argument("--tau", type=_num, default=0.0)
    cc.add_argument("--env", choices=("moment", "sgc", "sec", "stable"), default="moment")

    bd = sub.add_parser("bounds", help="evaluate concentration bounds over a t grid (CSV)")
    bd.add_argument("--lemma", required=True, choices=("22", "23", "26"))
    bd.add_argument("--case", type=int, default=2, help="lemma 22 case (1 or 2)")
    bd.add_argument("--kind", default="SGC", help="lemma 23: SGC or SEC")
    bd.add_argument("--t", type=_grid, default=np.linspace(0.1, 2.0, 20), help="a:b:k or list")
    bd.add_argument("--s", type=_num, default=0.1)
    bd.add_argument("--D", type=_num, default=0.0, help="D (lemma 22/26) or E (lemma 23)")
    bd.add_argument("--alpha-prime", type=_num)
    for name in ("C", "c", "K_alpha", "L", "m", "n", "R", "K", "p", "alpha", "levy_mass"):
        bd.add_argument(f"--{name.replace('_', '-')}", dest=name, type=_num)

    rt = sub.add_parser("rate", help="log-log rate fit of a metric in a result file")
    rt.add_argument("--input", required=True)
    rt.add_argument("--metric", required=True)
    rt.add_argument("--epsilon", type=_num)
    return p


def _scheme_from_args(a):
    if a.scheme == "subset":
        if a.n is None or a.m is None:
            raise ParameterError("subset needs --n and --m")
        return UniformSubset(a.n, a.m)
    if a.N is None:
        raise ParameterError(f"{a.scheme} needs --N")
    if a.scheme == "perm":
        return UniformPermutation(a.N)
    if a.scheme == "avoid":
        return UpRightPathAvoidSquare(a.N, a.beta)
    M = a.N if a.M is None else a.M
    if a.scheme == "through":
        return UpRightPathThrough(a.N, M, tuple(a.waypoint))
    return UpRightPath(a.N, M)


def cmd_simulate(a) -> int:
    cfg = harness.load_config(a.config) if a.config else harness.preset(a.preset)
    over = {}
    if a.output:
        over["output"] = a.output
    if a.format:
        over["format"] = a.format
    if a.seed is not None:
        over["seed"] = a.seed
    if a.n_env is not None:
        over["n_env"] = a.n_env
    if a.n_sel is not None:
        over["n_sel"] = a.n_sel
    if a.sizes:
        over["sizes"] = tuple(int(s) for s in a.sizes.split(","))
    cfg = harness.replace(cfg, **over) if over else cfg
    result = harness.run_experiment(cfg, threads=a.threads)
    if cfg.output:
        path = result.save(cfg.output, cfg.format)
        print(f"wrote {path}", file=sys.stderr)
    else:
        sys.stdout.write(result.to_csv() if cfg.format == "csv" else result.to_json() + "\n")
    for row in result.summary()["rows"]:
        print(
            f"N={row['N']:>6} {row['metric']:>3} median={row['median']:.4g} "
            f"q10={row['q10']:.4g} q90={row['q90']:.4g} tail>{result.epsilon:g}={row['tail_fraction']:.3f}",
            file=sys.stderr,
        )
    return 0


def cmd_presets(a) -> int:
    if a.name:
        sys.stdout.write(harness.dump_config(harness.preset(a.name)))
    else:
        print("\n".join(harness.PRESETS))
    return 0


def cmd_inclusion(a) -> int:
    scheme = _scheme_from_args(a)
    count_configurations(scheme)  # raises when infeasible
    wr = csv.writer(sys.stdout, lineterminator="\n")
    wr.writerow(("i", "j", "p_num", "p_den", "p_float"))
    for i, j, num, den, pf in iter_inclusion_rows(scheme):
        wr.writerow((i, j, num, den, repr(pf)))
    print(f"L,{L_statistic(scheme)!r}", file=sys.stderr)
    return 0


def cmd_check(a) -> int:
    regime = ScalingRegime(alpha=a.alpha, p=a.p, eta=a.eta, mu=a.mu, lam=a.lam, tau=a.tau)
    rep = convergence_conditions(regime, a.env)
    if rep.wip_threshold is not None:
        print(f"wip_threshold_p={rep.wip_threshold:g}")
        print(f"almost_sure_threshold_p={rep.as_threshold:g}")
    print(f"wip={str(rep.wip).lower()}")
    print(f"almost_sure={str(rep.almost_sure).lower()}")
    print(f"reason={rep.reason}")
    return 0


def cmd_bounds(a) -> int:
    fields = {
        k: getattr(a, k)
        for k in ("C", "c", "K_alpha", "L", "m", "n", "R", "K", "p", "alpha", "levy_mass")
        if getattr(a, k) is not None
    }
    if a.lemma == "26" and "alpha" not in fields:
        fields["alpha"] = 1.8
    params = BoundParams(**fields)
    wr = csv.writer(sys.stdout, lineterminator="\n")
    if a.lemma == "26":
        wr.writerow(("t", "threshold", "tail", "tail_raw", "valid"))
    else:
        wr.writerow(("t", "threshold", "tail", "tail_raw"))
    for t in a.t:
        t = float(t)
        if a.lemma == "22":
            b = lemma22_threshold_and_tail(a.case, params, a.s, t, D=a.D)
        elif a.lemma == "23":
            b = lemma23_tail(a.kind, params, t, E=a.D)
        else:
            b = lemma26_tail_and_validity(params, t, a.alpha_prime, D=a.D)
        wr.writerow((repr(t), *(repr(x) if isinstance(x, float) else str(x).lower() for x in b)))
    return 0


def cmd_rate(a) -> int:
    result = harness.load_result(a.input)
    if a.epsilon is not None:
        result.epsilon = a.epsilon
    slope, stderr = harness.rate_fit(result, a.metric)
    print(f"slope={slope!r}")
    print(f"stderr={stderr!r}")
    for N, frac in harness.wip_tail(result, a.metric).items():
        print(f"tail N={N} fraction={frac!r}")
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "presets": cmd_presets,
    "inclusion": cmd_inclusion,
    "check-conditions": cmd_check,
    "bounds": cmd_bounds,
    "rate": cmd_rate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except InfeasibleSchemeError as exc:
        print(f"infeasible scheme: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (harness.ConfigError, ParameterError, KeyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
