"""Match annotated critical objects to projected 3D detections.

A front camera projects two 3D boxes into the image; the annotated 2D boxes
are compared with asymmetric IoU (intersection over the projected box area)
and matched greedily one-to-one above a threshold.
"""

from supeval import MatchConfig, a_iou, match_objects, project_box
from supeval.scenario import BBox2D, CameraModel, CriticalObject, Detection3D

# camera at the ego origin looking along +x: camera z = ego x
FRONT = CameraModel(
    fx=500.0, fy=500.0, cx=320.0, cy=240.0,
    rotation=((0.0, -1.0, 0.0), (0.0, 0.0, -1.0), (1.0, 0.0, 0.0)),
    translation=(0.0, 0.0, 0.0), width=640, height=480,
)

DETECTIONS = (
    Detection3D(category="car", center=(15.0, 0.0, 0.8),
                size=(4.5, 2.0, 1.6), yaw=0.0),
    Detection3D(category="pedestrian", center=(12.0, -4.0, 0.9),
                size=(0.6, 0.6, 1.8), yaw=0.0),
)


def main():
    projected = [project_box(det, FRONT) for det in DETECTIONS]
    for det, box in zip(DETECTIONS, projected):
        print(f"{det.category:10s} at {det.center} projects to "
              f"({box.x1:.0f}, {box.y1:.0f}, {box.x2:.0f}, {box.y2:.0f})")

    # annotations drawn loosely around the projected cars
    annotated = (
        CriticalObject(category="car", box=BBox2D(230, 175, 395, 310),
                       free_text="slow sedan ahead"),
        CriticalObject(category="pedestrian", box=BBox2D(460, 165, 500, 245),
                       free_text="pedestrian near the right curb"),
    )
    for obj, box in zip(annotated, projected):
        print(f"aIoU(annotated {obj.category}, projection) = "
              f"{a_iou(obj.box, box):.3f}")

    outcome = match_objects(annotated, DETECTIONS, (FRONT,),
                            MatchConfig(tau=0.5))
    print()
    print("matched pairs:", outcome.matched)
    print("unmatched annotations:", outcome.unmatched_critical)
    print("unmatched detections:", outcome.unmatched_detections)


if __name__ == "__main__":
    main()
