"""Rescaled A field eps^{-3/4} A_{eps t}(f): variance exponent and fBm covariance for shrinking eps."""

import argparse
import json

from qsep import continuum as C
from qsep.rng import make_rng
from qsep.testfns import resolve_1d


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--f", default="cos")
    p.add_argument("--K", type=int, default=512)
    p.add_argument("--replicas", type=int, default=4000)
    p.add_argument("--eps", type=float, nargs="+", default=[1e-2, 1e-3, 1e-4])
    p.add_argument("--seed", type=int, default=4)
    args = p.parse_args()

    res = C.fbm_rescale_check(resolve_1d(args.f), args.eps, args.replicas, make_rng(args.seed, 0, "fbm"), K=args.K)
    for row in res["rows"]:
        print(f"eps={row['eps']:.0e}  c={row['c']:.4f}  Var ratio t=2/t=1: {row['ratio_2_1']:.3f} (fBm {2**1.5:.3f})  cov_ok={row['cov_ok']}")
    print(json.dumps({"predicted_c": res["predicted_c"], "stated_c": res["stated_c"]}, indent=2))


if __name__ == "__main__":
    main()
