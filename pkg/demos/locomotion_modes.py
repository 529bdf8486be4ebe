"""Tabulate the two contact locomotion modes.

Rolling: forward speed against field rotation frequency, including the
bounce band and the step-out cutoff. Gradient pulling: the strongest
mean counterflow a wall-resting capsule can hold against, per gradient.
"""

import numpy as np

from capnav.dynamics import CapsuleSpec
from capnav.flowfield import FluidProperties
from capnav.locomotion import CAL_DIAMETER, RollingModel, max_counterflow, rolling_velocity
from capnav.magnetics import default_capsule_curve


def main() -> None:
    model = RollingModel.calibrated()
    print("rolling (1.69 mm capsule)")
    print("  f [Hz]   v [cm/s]")
    for f in (0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 10.0, 12.0, 12.5, 15.0):
        v = rolling_velocity(model, CAL_DIAMETER, f)
        print(f"  {f:5.1f}    {v * 100:.3f}")

    capsule = CapsuleSpec()
    water = FluidProperties.water()
    curve = default_capsule_curve()
    print("\ngradient pulling (1.4 mm capsule on the lower wall)")
    print("  grad [T/m]   held counterflow [cm/s]")
    for g in np.arange(0.1, 0.55, 0.1):
        hold = max_counterflow(capsule, water, curve, float(g))
        print(f"  {g:.1f}          {hold * 100:.1f}")


if __name__ == "__main__":
    main()
