"""Scene-understanding-for-planning evaluation stack and dual-system planning."""

from .vocabulary import DEFAULT_VOCABULARY, Vocabulary, is_conservative
from .scenario import (
    BBox2D,
    CameraModel,
    CriticalObject,
    DecisionDescription,
    Detection3D,
    EgoState,
    EnvironmentDescription,
    MetaAction,
    ObjectAnalysis,
    ScenarioRecord,
    Trajectory,
    parse_scenario,
    serialize_scenario,
)
from .action_score import (
    AlignmentResult,
    ScoreWeights,
    align,
    generate_alternatives,
    oracle_align,
    score_with_alternatives,
)
from .description_score import (
    KeyInfo,
    ScoreBreakdown,
    aggregate_score,
    classify_matches,
    extract_key_info,
    extract_key_info_from_text,
    score_description,
)
from .object_matcher import MatchConfig, MatchOutcome, a_iou, match_objects, project_box
from .planner import (
    ObstacleTrack,
    PlannerConfig,
    PlannerInputs,
    dual_loop,
    gradient,
    min_clearance,
    objective,
    refine,
)
from .metrics import (
    AT_HORIZON,
    CUMULATIVE_MEAN,
    MetricsReport,
    collision_flags,
    displacement_error,
    rects_overlap,
)
from .pipeline import (
    DriveLog,
    MiningConfig,
    corpus_stats,
    mine_challenging,
    select_keyframe,
    split_corpus,
    validate_corpus,
)

__version__ = "0.1.0"
