"""Mine a drive log for challenging moments and split a scenario corpus.

A synthetic 100 Hz log contains a hard brake and a sharp swerve. Rolling
variance over a 2 s window flags both intervals; the keyframe lands 0.75 s
before each onset so the cause is still visible. A 1000-record corpus is
then split 7.5 : 1 : 1.5 by hashed identifiers.
"""

import math

from supeval import DriveLog, mine_challenging, select_keyframe, split_corpus
from supeval.scenario import (
    BBox2D,
    CriticalObject,
    DecisionDescription,
    EgoState,
    EnvironmentDescription,
    ObjectAnalysis,
    ScenarioRecord,
    Trajectory,
    action_sequence,
)


def build_log():
    n = 3001  # 30 s at 100 Hz
    ts = [i / 100.0 for i in range(n)]
    accel = [-4.0 if 8.0 <= t < 9.0 else 0.0 for t in ts]
    yaw = [0.5 * math.sin(2 * math.pi * (t - 20.0)) if 20.0 <= t < 21.0 else 0.0
           for t in ts]
    speed = [12.0]
    for a in accel[:-1]:
        speed.append(speed[-1] + a / 100.0)
    return DriveLog(tuple(ts), tuple(speed), tuple(yaw), (0.0,) * n,
                    tuple(accel))


def tiny_record(record_id):
    waypoints = tuple((2.5 * i, 0.0) for i in range(7))
    return ScenarioRecord(
        id=record_id,
        frames=("frames/front_0001.jpg",),
        environment=EnvironmentDescription(weather="sunny", time="day",
                                           road="urban", lane="two lanes"),
        critical_objects=(CriticalObject(category="car",
                                         box=BBox2D(100, 120, 220, 240),
                                         free_text="sedan ahead"),),
        analyses=((0, ObjectAnalysis(influence="forces slowing down",
                                     motion_state="moving slowly")),),
        scene_summary="a slow sedan ahead",
        meta_actions=action_sequence(("Slow down", "Stop")),
        decision=DecisionDescription(action="Slow down", subject="the sedan",
                                     duration="until it clears"),
        trajectory=Trajectory(waypoints=waypoints, dt=0.5),
        ego=EgoState(position=(0.0, 0.0), heading=0.0, speed=5.0),
        detections=(),
    )


def main():
    log = build_log()
    intervals = mine_challenging(log)
    print(f"{len(intervals)} challenging interval(s):")
    for lo, hi in intervals:
        result = select_keyframe(log, (lo, hi))
        note = " (clamped)" if result.clamped else ""
        print(f"  [{lo:6.2f}, {hi:6.2f}] s -> keyframe at "
              f"{result.timestamp:.2f} s{note}")

    records = [tiny_record(f"scn-{i:04d}") for i in range(1000)]
    splits = split_corpus(records)
    print()
    print("corpus split:")
    for name in ("train", "val", "test"):
        print(f"  {name:5s} {len(splits[name]):4d} records")


if __name__ == "__main__":
    main()
