"""Random user drops: approximation against simulation at two system sizes.

A drop places users uniformly in the coverage area and draws lognormal
shadowing and path loss to each receive site. The transmit power is
calibrated so that almost every location sees a usable best-site SNR. The
result is one concrete power matrix per drop; the SNR axis then scales the
noise so that ``rho = P_T / sigma2``.

The first block uses three single-antenna sites and three users, the second
three two-antenna sites and six users. At high SNR the bound's leading term
``log2(Perm(P) g**N)`` takes over: capacity grows by about ``N`` bits per
doubling of SNR, so the six-user system pulls away.

Run with ``python demos/random_drops.py [trials]``.
"""

import sys

import numpy as np

from macrocap import ScenarioSpec, approx_capacity, jensen_bound, mc_capacity, noise_power, random_drop

TRIALS = int(sys.argv[1]) if len(sys.argv) > 1 else 20_000
SNR_DB = (0, 5, 10, 15, 20, 25)
SYSTEMS = {
    "3 sites x 1 antenna, 3 users": dict(n_bs=3, n_users=3),
    "3 sites x 2 antennas, 6 users": dict(n_bs=3, antennas_per_bs=2, n_users=6),
}


def main():
    for title, kw in SYSTEMS.items():
        print(title)
        for seed in (1, 2):
            P = np.asarray(random_drop(ScenarioSpec(kind="random-drop", seed=seed, **kw)))
            spread = 10 * np.log10(P.max() / P.min())
            print(f"  drop {seed}: power spread {spread:.0f} dB")
            print(f"  {'rho dB':>6} {'approx':>8} {'mc':>8} {'+-':>6} {'rel err':>8} {'bound':>8}")
            for rho in SNR_DB:
                s2 = noise_power(P, rho)
                ap = approx_capacity(P, s2)
                mc = mc_capacity(P, s2, TRIALS, seed=1)
                jb = jensen_bound(P, 1.0 / s2).bits
                print(f"  {rho:6g} {ap:8.3f} {mc.mean:8.3f} {mc.stderr:6.3f} "
                      f"{(ap - mc.mean) / mc.mean:8.2%} {jb:8.3f}")
        print()


if __name__ == "__main__":
    main()
