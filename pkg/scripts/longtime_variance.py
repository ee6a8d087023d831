"""Var A_t(f) / t for growing t against the long-time limit S(f)/4."""

import argparse

from qsep import continuum as C
from qsep.rng import make_rng
from qsep.testfns import resolve_1d


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--f", default="cos")
    p.add_argument("--K", type=int, default=256)
    p.add_argument("--replicas", type=int, default=2000)
    p.add_argument("--seed", type=int, default=2)
    args = p.parse_args()

    f = resolve_1d(args.f)
    pred = C.longtime_prediction(f, args.K)
    print(f"S(f)/4 = {pred:.5f}")
    print("t      exact/t    MC/t       se/t")
    for i, t in enumerate((0.1, 0.5, 1.0, 2.0, 5.0, 10.0)):
        est = C.a_duhamel_stats(f, t, args.K, args.replicas, make_rng(args.seed, i, "longtime"))
        print(f"{t:<6g} {C.exact_var_A(f, t, args.K) / t:.5f}    {est.var / t:.5f}    {est.se_var / t:.5f}")


if __name__ == "__main__":
    main()
