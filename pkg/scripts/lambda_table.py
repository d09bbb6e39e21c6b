"""Tabulate L(N) for the three path families and the fitted growth exponent.

Also prints L(N)^2 / sqrt(N) for the unconstrained square grid, which
settles at sqrt(2 pi) and shows the exponent is exactly 1/4 there.
"""
import argparse
import math

from quenchlab.harness import SchemeFamily
from quenchlab.selectors import L_statistic, UpRightPath, lambda_fit


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="16,32,64,128,256,512,1024")
    args = ap.parse_args(argv)
    sizes = [int(s) for s in args.sizes.split(",")]

    for kind in ("uprr", "through", "avoid"):
        fit = lambda_fit(SchemeFamily(kind).build, sizes)
        print(f"{kind:>8}: lambda = {fit.slope:.4f} +- {fit.stderr:.4f}")
        for N, L in zip(fit.sizes, fit.L):
            print(f"{'':>10}N={N:<5d} L={L:.6f}")

    print(f"\nL^2/sqrt(N) for the unconstrained grid (limit sqrt(2 pi) = {math.sqrt(2 * math.pi):.4f})")
    for N in sizes:
        print(f"  N={N:<5d} {L_statistic(UpRightPath(N, N)) ** 2 / math.sqrt(N):.4f}")


if __name__ == "__main__":
    main()
