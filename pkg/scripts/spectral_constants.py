"""Print the Fourier constants: kappa, a(u), S(f), mollifier exponents and the small-time ratio."""

import argparse
import math

from qsep import spectral as S
from qsep.testfns import suite_1d


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--K", type=int, default=4096)
    args = p.parse_args()

    print(f"kappa quadrature  {S.kappa():.15f}")
    print(f"kappa closed form {S.kappa_closed_form():.15f}")
    print("\nu      a(u) direct   a(u) residue")
    for u in (1, 2, 3, 4, 8, 16, 64, 256):
        print(f"{u:<6d} {S.a_coefficient(u, 20000 * u):.8f}    {S.a_coefficient_closed(u):.8f}")
    print(f"plateau {S.a_plateau():.8f}  (pi = {math.pi:.8f}, pi/2 = {math.pi / 2:.8f})")

    print("\nf       S(f) K=512   S(f) via a(u)   mollifier slope")
    for fid, f in suite_1d().items():
        fit = S.lemma41_fit(f, K=args.K)
        print(f"{fid:<7s} {S.longtime_energy(f, 512):.6f}     {S.longtime_energy_from_a(f):.6f}        {fit['slope']:.4f}")

    cos = suite_1d()["cos"]
    print(f"\nsmall-time ratio for cos, limit 2 sqrt2 kappa <f,-Lap f> = {S.smalltime_limit(cos):.5f}")
    for t in (1e-2, 1e-3, 1e-4, 1e-5):
        print(f"  t={t:.0e}  {S.smalltime_ratio(cos, t, args.K, check=False):.5f}")


if __name__ == "__main__":
    main()
