"""Print a reduced navigation-success matrix.

Runs a 3 x 4 slice of the bench factorial (10 entrances per cell) and
prints the fraction of capsules that reached branch A for each
gradient and mean velocity. Stronger pull wins; faster flow resists.
"""

import time

from capnav.sweep import FactorialDesign, run_factorial


def main() -> None:
    design = FactorialDesign(
        velocities=(0.65, 0.75, 0.85),
        gradients_tpm=(0.0, 0.15, 0.30, 0.45),
        entrance_count=10,
    )
    t0 = time.perf_counter()
    result = run_factorial(design)
    elapsed = time.perf_counter() - t0

    header = "gradient " + "  ".join(f"{v:.2f} m/s" for v in design.velocities)
    print(header)
    for gi, g in enumerate(design.gradients_tpm):
        cells = "      ".join(
            f"{result.success_ratio(gi, vi):.2f}" for vi in range(len(design.velocities))
        )
        print(f"{g:.2f} T/m  {cells}")
    print(f"\n{design.trajectories} trajectories in {elapsed:.1f} s")


if __name__ == "__main__":
    main()
