"""Show the two developed velocity profiles and the junction flux balance.

The slow regime (0.40 m/s mean) is laminar and parabolic; the fast
regime (0.85 m/s mean) is turbulent and follows the blunter 1/7
power-law shape. Both must push exactly as much fluid into the
daughters as the inlet carries.
"""

import numpy as np

from capnav.flowfield import FluidProperties, cross_section_flux, make_flow, reynolds
from capnav.geometry import build_y_junction


def main() -> None:
    junction = build_y_junction()
    water = FluidProperties.water()
    radii = np.linspace(-junction.radius, junction.radius, 13)

    for mean in (0.40, 0.85):
        flow = make_flow(junction, water, mean)
        re = reynolds(water, mean, junction.diameter)
        print(f"mean {mean} m/s  Re {re:.0f}  profile {flow.profile}")
        print("  r [mm]   u_x [m/s]")
        for r in radii:
            u = flow.velocity_at([0.02, r * 0.9999, 0.0])[0]
            print(f"  {r * 1000:+6.2f}   {u:.4f}")

        q_in = cross_section_flux(flow, [0.02, 0, 0], [1, 0, 0], junction.radius)
        jp = junction.junction_point
        q_a = cross_section_flux(
            flow, jp + 0.02 * junction.branch_dir_a, junction.branch_dir_a, junction.radius
        )
        q_b = cross_section_flux(
            flow, jp + 0.02 * junction.branch_dir_b, junction.branch_dir_b, junction.radius
        )
        print(f"  flux in {q_in * 1e6:.3f} mL/s, out {(q_a + q_b) * 1e6:.3f} mL/s")
        print(f"  imbalance {abs(q_in - q_a - q_b) / q_in:.2e}")
        print()


if __name__ == "__main__":
    main()
