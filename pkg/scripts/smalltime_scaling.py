"""Small-time scaling of Var A_t(f): exact mode sums against Duhamel Monte Carlo."""

import argparse

import numpy as np

from qsep import continuum as C
from qsep.rng import make_rng
from qsep.testfns import resolve_1d


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--f", default="cos")
    p.add_argument("--K", type=int, default=512)
    p.add_argument("--replicas", type=int, default=4000)
    p.add_argument("--seed", type=int, default=1)
    args = p.parse_args()

    f = resolve_1d(args.f)
    ts = np.array([1e-4, 3e-4, 1e-3, 3e-3, 1e-2])
    print("t         exact       MC          se          MC/exact   exact/t^1.5")
    mc = []
    for i, t in enumerate(ts):
        exact = C.exact_var_A(f, t, args.K)
        est = C.a_duhamel_stats(f, t, args.K, args.replicas, make_rng(args.seed, i, "smalltime"))
        mc.append(est.var)
        print(f"{t:.1e}   {exact:.4e}  {est.var:.4e}  {est.se_var:.1e}    {est.var / exact:.3f}      {exact / t**1.5:.4f}")
    slope = np.polyfit(np.log(ts), np.log(mc), 1)[0]
    print(f"\nfitted exponent {slope:.3f}")
    print(f"limit of Var A_t / t^1.5:  (2+sqrt2) kappa/4 <f,-Lap f> = {C.smalltime_prediction(f):.4f}")
    print(f"(kappa/4) <f,-Lap f> for comparison                 = {C.stated_smalltime_amplitude(f):.4f}")


if __name__ == "__main__":
    main()
