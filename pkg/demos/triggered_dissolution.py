"""Heat a parked capsule with the alternating field until it dissolves.

The field switches on at t = 5 s. The embedded nanoparticles warm the
gelatin shell toward its melt point; above it the shell erodes at a
steady rate until the capsule is gone.
"""

from capnav.hyperthermia import default_dissolution, simulate_dissolution


def main() -> None:
    result = simulate_dissolution(default_dissolution(), lambda t: t >= 5.0, 60.0)

    print("  t [s]   temp [C]   dissolved")
    for mark in (0.0, 5.0, 10.0, 20.0, 30.0, 40.0, 45.0, 50.0, 60.0):
        i = min(range(len(result.times_s)), key=lambda k: abs(result.times_s[k] - mark))
        print(
            f"  {result.times_s[i]:5.1f}   {result.temps_c[i]:7.2f}"
            f"    {result.dissolved_fraction[i] * 100:5.1f} %"
        )
    if result.dissolution_time_s is not None:
        print(f"\nfully dissolved at t = {result.dissolution_time_s:.1f} s")
    else:
        print("\ncapsule survived the window")


if __name__ == "__main__":
    main()
