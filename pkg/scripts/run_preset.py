"""Run one or more presets and print the median metric and rate fit per size.

    python scripts/run_preset.py thm12 thm15-hoeffding --out results/
    python scripts/run_preset.py thm12 --n-env 20 --sizes 16,32,64
"""
import argparse
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from quenchlab.harness import preset, rate_fit, run_experiment, wip_tail


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("names", nargs="+")
    ap.add_argument("--out", type=Path, help="directory for result files")
    ap.add_argument("--threads", type=int)
    ap.add_argument("--n-env", type=int)
    ap.add_argument("--n-sel", type=int)
    ap.add_argument("--sizes")
    args = ap.parse_args(argv)

    for name in args.names:
        cfg = preset(name)
        over = {}
        if args.n_env:
            over["n_env"] = args.n_env
        if args.n_sel:
            over["n_sel"] = args.n_sel
        if args.sizes:
            over["sizes"] = tuple(int(s) for s in args.sizes.split(","))
        cfg = replace(cfg, **over)

        t0 = time.perf_counter()
        res = run_experiment(cfg, threads=args.threads)
        print(f"== {name} ({time.perf_counter() - t0:.1f}s)")
        for metric in res.metrics:
            meds = [float(np.median(res.values(metric, N))) for N in res.sizes]
            line = "  ".join(f"N={N}:{m:.4f}" for N, m in zip(res.sizes, meds))
            print(f"  {metric:>9}  median  {line}")
            if cfg.kind == "quenched":
                tail = wip_tail(res, metric)
                print(f"  {'':>9}  P(>eps) " + "  ".join(f"N={N}:{p:.2f}" for N, p in tail.items()))
            if len(res.sizes) >= 3:
                slope, se = rate_fit(res, metric)
                print(f"  {'':>9}  slope {slope:.3f} +- {se:.3f}")
        if args.out:
            path = res.save(args.out / f"{name}.{cfg.format}", cfg.format)
            print(f"  wrote {path}")


if __name__ == "__main__":
    main()
