"""The Jensen bound and its two one-term limits across SNR.

The bound is ``log2 sum_i theta_i g**i`` with ``g = 1/sigma2``. At low SNR
the linear term ``theta_1 = P_T`` dominates, so only the total received
power matters. At high SNR the top term ``Perm(P) g**N`` dominates, so the
cross products of powers on distinct sites and users decide the capacity.
The script prints the coefficients and shows where each one-term version
meets the full bound, next to a simulation for scale.

Run with ``python demos/bound_regimes.py [scenario] [trials]``.
"""

import sys

import numpy as np

from macrocap import jensen_bound, mc_capacity, scenario_table1

SID = sys.argv[1] if len(sys.argv) > 1 else "S3"
TRIALS = int(sys.argv[2]) if len(sys.argv) > 2 else 20_000


def main():
    P, _ = scenario_table1(SID, 0.0)
    print(f"{SID} power matrix:\n{np.array2string(np.asarray(P), precision=4)}")
    theta = jensen_bound(P, 1.0).theta
    print("theta:", ", ".join(f"{t:.4g}" for t in theta), "\n")
    print(f"{'rho dB':>6} {'bound':>8} {'low':>8} {'high':>8} {'mc':>8}")
    for rho in range(-10, 45, 5):
        P, s2 = scenario_table1(SID, rho)
        b = jensen_bound(P, 1.0 / s2)
        mc = mc_capacity(P, s2, TRIALS, seed=1)
        print(f"{rho:6d} {b.bits:8.3f} {b.low_snr_bits:8.3f} {b.high_snr_bits:8.3f} {mc.mean:8.3f}")


if __name__ == "__main__":
    main()
