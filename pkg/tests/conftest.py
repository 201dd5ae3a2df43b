import pytest

from supeval.scenario import (
    BBox2D,
    CriticalObject,
    DecisionDescription,
    Detection3D,
    EgoState,
    EnvironmentDescription,
    ObjectAnalysis,
    ScenarioRecord,
    Trajectory,
    action_sequence,
)


def make_record(record_id="scn-001", tokens=("Slow down", "Stop"), speed=5.0,
                waypoints=None, detections=()):
    if waypoints is None:
        waypoints = tuple((speed * 0.5 * i, 0.0) for i in range(7))
    return ScenarioRecord(
        id=record_id,
        frames=("frames/front_0001.jpg",),
        environment=EnvironmentDescription(
            weather="sunny", time="day", road="urban",
            lane="three lanes; ego in the middle lane",
        ),
        critical_objects=(
            CriticalObject(category="car", box=BBox2D(100, 120, 220, 240),
                           free_text="slow sedan ahead"),
        ),
        analyses=(
            (0, ObjectAnalysis(influence="the sedan forces the ego car to slow down",
                               motion_state="moving slowly in the ego lane")),
        ),
        scene_summary="a slow sedan ahead in an urban three-lane road",
        meta_actions=action_sequence(tokens),
        decision=DecisionDescription(action=tokens[0], subject="the sedan ahead",
                                     duration="until it clears the lane"),
        trajectory=Trajectory(waypoints=waypoints, dt=0.5),
        ego=EgoState(position=waypoints[0], heading=0.0, speed=speed),
        detections=tuple(detections),
    )


@pytest.fixture
def record():
    return make_record()


@pytest.fixture
def record_with_detection():
    det = Detection3D(category="car", center=(15.0, 0.0, 0.8),
                      size=(4.5, 2.0, 1.6), yaw=0.0)
    return make_record(detections=(det,))
