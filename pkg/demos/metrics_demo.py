"""Compare displacement-error conventions and check for collisions.

The prediction drives straight at 4 m/s while ground truth does 5 m/s, so
the gap grows 0.5 m per step. The at-horizon convention reads the error at
each horizon; the cumulative-mean convention averages all steps up to it.
A swerving agent track shows the oriented-rectangle collision test.
"""

from supeval import (
    AT_HORIZON,
    CUMULATIVE_MEAN,
    ObstacleTrack,
    collision_flags,
    displacement_error,
    rects_overlap,
)
from supeval.scenario import Trajectory

PRED = Trajectory(tuple((4.0 * 0.5 * i, 0.0) for i in range(7)), dt=0.5)
GT = Trajectory(tuple((5.0 * 0.5 * i, 0.0) for i in range(7)), dt=0.5)


def main():
    horizons = (1.0, 2.0, 3.0)
    at, avg_at = displacement_error(PRED, GT, horizons, AT_HORIZON)
    cum, avg_cum = displacement_error(PRED, GT, horizons, CUMULATIVE_MEAN)
    print(f"{'horizon':>8s} {'at-horizon':>11s} {'cumulative':>11s}")
    for h in horizons:
        print(f"{h:8.1f} {at[h]:11.3f} {cum[h]:11.3f}")
    print(f"{'average':>8s} {avg_at:11.3f} {avg_cum:11.3f}")

    # an agent cutting across the ego path from the left
    agent = ObstacleTrack(
        centers=tuple((2.0 + 0.2 * i, 3.0 - 0.6 * i) for i in range(7)),
        size=(4.0, 2.0), yaws=(0.0,) * 7,
    )
    flags = collision_flags(PRED, (agent,), ego_dims=(4.5, 2.0))
    print()
    print("collision flag per horizon vs crossing agent:")
    for h, hit in flags.items():
        print(f"  {h:.1f} s: {hit}")

    touching = rects_overlap((0.0, 0.0), (2.0, 2.0), 0.0,
                             (2.0, 0.0), (2.0, 2.0), 0.0)
    print(f"edge-touching rectangles overlap: {touching} "
          "(touching does not count)")


if __name__ == "__main__":
    main()
