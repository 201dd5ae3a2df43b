"""Command-line entry point binding every subsystem.

Subcommands: eval-actions, eval-description, match-objects, refine,
simulate-dual, metrics, mine, keyframe, validate, stats. Input corpora
are JSON Lines; single documents are JSON. Reports go to stdout or
``--out``, as a human table or as machine-readable JSON with stable
field names. Exit codes: 0 success, 1 input/schema error, 2 gateway or
runtime failure, 64 usage error.
"""

from __future__ import annotations

import json
import random
import sys

import click
import numpy as np

from . import action_score, description_score, metrics as metrics_mod
from . import object_matcher, pipeline, planner, scenario
from .description_score import HttpJudge, JudgeError, StubJudge
from .scenario import ScenarioError
from .vocabulary import DEFAULT_VOCABULARY, UnknownTokenError, Vocabulary


class InputError(Exception):
    """Bad input file or schema; maps to exit code 1."""


def _load_vocab(path: str | None) -> Vocabulary:
    if path is None:
        return DEFAULT_VOCABULARY
    with open(path) as f:
        doc = json.load(f)
    return Vocabulary(tokens=tuple(doc["tokens"]),
                      conservative=frozenset(doc.get("conservative", ())))


def _load_jsonl(path: str) -> list[dict]:
    docs = []
    with open(path) as f:
        for n, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                docs.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise InputError(f"{path}:{n}: malformed JSON: {e}") from e
    return docs


def _emit(report: dict, table_lines: list[str], fmt: str, out: str | None) -> None:
    if fmt == "machine":
        text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    else:
        text = "\n".join(table_lines) + "\n"
    if out:
        with open(out, "w") as f:
            f.write(text)
    else:
        click.echo(text, nl=False)


_common = [
    click.option("--format", "fmt", type=click.Choice(["table", "machine"]),
                 default="table", show_default=True),
    click.option("--out", type=click.Path(dir_okay=False), default=None,
                 help="Write the report to a file instead of stdout."),
]


def common_options(f):
    for opt in reversed(_common):
        f = opt(f)
    return f


@click.group()
@click.option("--seed", type=int, default=0, show_default=True,
              help="Seed for any randomized data generation.")
@click.option("--vocab", "vocab_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON vocabulary override (tokens + conservative).")
@click.pass_context
def cli(ctx, seed, vocab_path):
    random.seed(seed)
    np.random.seed(seed % 2**32)
    ctx.obj = {"vocab": _load_vocab(vocab_path)}


@cli.command("eval-actions")
@click.option("--corpus", required=True, type=click.Path(exists=True, dir_okay=False),
              help="JSONL of {id, reference, candidate, alternatives?}.")
@click.option("--expand-alternatives/--no-expand-alternatives", default=False,
              help="Also generate substitution-table alternatives per reference.")
@common_options
@click.pass_context
def eval_actions(ctx, corpus, expand_alternatives, fmt, out):
    """Score candidate meta-action sequences against references."""
    vocab = ctx.obj["vocab"]
    rows = []
    for doc in _load_jsonl(corpus):
        refs = [doc["reference"]] + [list(a) for a in doc.get("alternatives", [])]
        if expand_alternatives:
            refs += [list(a) for a in
                     action_score.generate_alternatives(doc["reference"], vocab=vocab)]
        score, ref_idx = action_score.score_with_alternatives(
            refs, doc["candidate"], vocab=vocab)
        rows.append({"id": doc.get("id", ""), "score": score,
                     "selected_reference": ref_idx})
    mean = sum(r["score"] for r in rows) / len(rows) if rows else 0.0
    report = {"scenarios": rows, "mean_score": mean}
    lines = [f"{r['id']:<24} {r['score']:.6f}  (ref #{r['selected_reference']})"
             for r in rows]
    lines.append(f"{'mean':<24} {mean:.6f}")
    _emit(report, lines, fmt, out)


@cli.command("eval-description")
@click.option("--corpus", required=True, type=click.Path(exists=True, dir_okay=False),
              help="JSONL of {id, reference, output}.")
@click.option("--judge", type=click.Choice(["structured", "gateway", "stub"]),
              default="structured", show_default=True)
@click.option("--judge-endpoint", default=None, help="Gateway URL.")
@click.option("--stub-responses", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON map of request key to canned response.")
@common_options
@click.pass_context
def eval_description(ctx, corpus, judge, judge_endpoint, stub_responses, fmt, out):
    """Score output scene descriptions against references."""
    judge_fn = None
    if judge == "gateway":
        if not judge_endpoint:
            raise click.UsageError("--judge gateway requires --judge-endpoint")
        judge_fn = HttpJudge(judge_endpoint)
    elif judge == "stub":
        if not stub_responses:
            raise click.UsageError("--judge stub requires --stub-responses")
        with open(stub_responses) as f:
            judge_fn = StubJudge(json.load(f))

    rows = []
    scored = []
    for doc in _load_jsonl(corpus):
        try:
            b = description_score.score_description(
                doc["reference"], doc["output"], judge=judge_fn)
        except JudgeError as e:
            rows.append({"id": doc.get("id", ""), "unscored": True, "error": str(e)})
            continue
        scored.append(b.score)
        rows.append({"id": doc.get("id", ""), "score": b.score,
                     "n_matched": b.n_matched, "n_partial": b.n_partial,
                     "n_hallucination": b.n_hallucination, "n_gt": b.n_gt})
    report = {"scenarios": rows,
              "mean_score": sum(scored) / len(scored) if scored else None,
              "n_unscored": sum(1 for r in rows if r.get("unscored"))}
    lines = []
    for r in rows:
        if r.get("unscored"):
            lines.append(f"{r['id']:<24} UNSCORED ({r['error']})")
        else:
            lines.append(f"{r['id']:<24} {r['score']:.6f}  "
                         f"m={r['n_matched']} p={r['n_partial']} "
                         f"h={r['n_hallucination']} gt={r['n_gt']}")
    if scored:
        lines.append(f"{'mean':<24} {report['mean_score']:.6f}")
    _emit(report, lines, fmt, out)


def _load_cameras(path: str) -> list[scenario.CameraModel]:
    with open(path) as f:
        doc = json.load(f)
    try:
        return [
            scenario.CameraModel(
                fx=c["fx"], fy=c["fy"], cx=c["cx"], cy=c["cy"],
                rotation=tuple(tuple(row) for row in c["rotation"]),
                translation=tuple(c["translation"]),
                width=c["width"], height=c["height"],
            )
            for c in doc["cameras"]
        ]
    except (KeyError, TypeError) as e:
        raise InputError(f"{path}: bad calibration file: {e}") from e


@cli.command("match-objects")
@click.option("--scenario", "scenario_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--calibration", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="JSON {cameras: [{fx, fy, cx, cy [px], rotation (3x3 "
                   "ego-to-camera), translation [m], width, height [px]}]}.")
@click.option("--tau", type=float, default=0.5, show_default=True)
@common_options
@click.pass_context
def match_objects_cmd(ctx, scenario_path, calibration, tau, fmt, out):
    """Match a scenario's critical objects against its 3D detections."""
    with open(scenario_path) as f:
        record = scenario.parse_scenario(f.read(), ctx.obj["vocab"])
    cams = _load_cameras(calibration)
    outcome = object_matcher.match_objects(
        list(record.critical_objects), list(record.detections), cams,
        object_matcher.MatchConfig(tau=tau))
    report = {
        "matched": [{"critical": c, "detection": d, "a_iou": v}
                    for c, d, v in outcome.matched],
        "unmatched_critical": list(outcome.unmatched_critical),
        "unmatched_detections": list(outcome.unmatched_detections),
    }
    lines = [f"matched: critical {c} <-> detection {d} (aIoU {v:.4f})"
             for c, d, v in outcome.matched]
    lines.append(f"unmatched critical: {list(outcome.unmatched_critical)}")
    lines.append(f"unmatched detections: {list(outcome.unmatched_detections)}")
    _emit(report, lines, fmt, out)


@cli.command("refine")
@click.option("--scenario", "scenario_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--w-ref", type=float, default=1.0, show_default=True)
@click.option("--w-smooth", type=float, default=1.0, show_default=True)
@click.option("--w-obs", type=float, default=10.0, show_default=True)
@click.option("--clearance", type=float, default=1.0, show_default=True)
@common_options
@click.pass_context
def refine_cmd(ctx, scenario_path, w_ref, w_smooth, w_obs, clearance, fmt, out):
    """Refine a scenario's trajectory; detections become obstacles."""
    with open(scenario_path) as f:
        record = scenario.parse_scenario(f.read(), ctx.obj["vocab"])
    n = len(record.trajectory.waypoints)
    obstacles = tuple(
        planner.obstacle_from_detection(d, n, record.trajectory.dt)
        for d in record.detections
    )
    cfg = planner.PlannerConfig(w_ref=w_ref, w_smooth=w_smooth, w_obs=w_obs,
                                clearance=clearance)
    inputs = planner.PlannerInputs(w_slow=record.trajectory, ego=record.ego,
                                   obstacles=obstacles)
    fast = planner.refine(inputs, cfg)
    report = {"waypoints": [list(w) for w in fast.waypoints], "dt": fast.dt,
              "objective": planner.objective(fast.as_array(), inputs, cfg),
              "seed_objective": planner.objective(
                  np.array(record.trajectory.waypoints), inputs, cfg)}
    lines = [f"({x:.4f}, {y:.4f})" for x, y in fast.waypoints]
    lines.append(f"objective {report['objective']:.6f} "
                 f"(seed {report['seed_objective']:.6f})")
    _emit(report, lines, fmt, out)


@cli.command("simulate-dual")
@click.option("--latency-ms", type=float, default=410.0, show_default=True)
@click.option("--hz", type=float, default=10.0, show_default=True)
@click.option("--duration-s", type=float, default=10.0, show_default=True)
@common_options
@click.pass_context
def simulate_dual(ctx, latency_ms, hz, duration_s, fmt, out):
    """Simulate the asynchronous slow/fast planning loop."""
    ego = scenario.EgoState(position=(0.0, 0.0), heading=0.0, speed=5.0)
    ref = planner._bootstrap_trajectory(ego)

    def slow_source(_seq):
        return planner.PlannerInputs(w_slow=ref, ego=ego)

    trace = planner.dual_loop(slow_source, hz, duration_s, latency_ms / 1000.0, ego)
    report = {"ticks": [
        {"index": t.index, "time": t.time, "slow_seq": t.slow_seq,
         "slow_age": t.slow_age, "bootstrap": t.bootstrap}
        for t in trace
    ], "n_ticks": len(trace)}
    lines = [
        f"tick {t.index:>4} t={t.time:7.3f}s "
        + ("bootstrap (no reference)" if t.bootstrap
           else f"slow #{t.slow_seq} age {t.slow_age:.3f}s")
        for t in trace
    ]
    lines.append(f"{len(trace)} fast ticks")
    _emit(report, lines, fmt, out)


def _traj_from_doc(doc: dict) -> scenario.Trajectory:
    return scenario.Trajectory(waypoints=tuple(tuple(w) for w in doc["waypoints"]),
                               dt=doc["dt"])


def _agents_from_doc(docs) -> tuple[planner.ObstacleTrack, ...]:
    return tuple(
        planner.ObstacleTrack(centers=tuple(tuple(c) for c in a["centers"]),
                              size=tuple(a["size"]),
                              yaws=tuple(a["yaws"]))
        for a in docs
    )


@cli.command("metrics")
@click.option("--corpus", required=True, type=click.Path(exists=True, dir_okay=False),
              help="JSONL of {id, pred: {waypoints, dt}, gt: {...}, agents?}.")
@click.option("--mode", type=click.Choice([metrics_mod.AT_HORIZON,
                                           metrics_mod.CUMULATIVE_MEAN]),
              default=metrics_mod.AT_HORIZON, show_default=True)
@click.option("--ego-length", type=float, default=4.5, show_default=True)
@click.option("--ego-width", type=float, default=2.0, show_default=True)
@common_options
@click.pass_context
def metrics_cmd(ctx, corpus, mode, ego_length, ego_width, fmt, out):
    """Displacement error and collision rate over a paired corpus."""
    pairs = []
    for doc in _load_jsonl(corpus):
        pairs.append((_traj_from_doc(doc["pred"]), _traj_from_doc(doc["gt"]),
                      _agents_from_doc(doc.get("agents", ()))))
    rep = metrics_mod.evaluate(pairs, ego_dims=(ego_length, ego_width), mode=mode)
    horizons = sorted(rep.de_per_horizon)
    report = {
        "mode": rep.mode,
        "de_per_horizon": {str(h): rep.de_per_horizon[h] for h in horizons},
        "de_avg": rep.de_avg,
        "collision_per_horizon": {str(h): rep.collision_per_horizon[h]
                                  for h in horizons},
        "collision_avg": rep.collision_avg,
    }
    head = "            " + "".join(f"{h:>8.0f}s" for h in horizons) + f"{'Avg':>9}"
    de_row = "L2 (m)      " + "".join(f"{rep.de_per_horizon[h]:9.3f}" for h in horizons)
    de_row += f"{rep.de_avg:9.3f}"
    cr_row = "Collision(%)" + "".join(
        f"{100 * rep.collision_per_horizon[h]:9.3f}" for h in horizons)
    cr_row += f"{100 * rep.collision_avg:9.3f}"
    _emit(report, [f"mode: {rep.mode}", head, de_row, cr_row], fmt, out)


def _load_drivelog(path: str) -> pipeline.DriveLog:
    with open(path) as f:
        doc = json.load(f)
    try:
        return pipeline.DriveLog(
            timestamps=tuple(doc["timestamps"]),
            speed=tuple(doc["speed"]),
            yaw_rate=tuple(doc["yaw_rate"]),
            steering=tuple(doc["steering"]),
            acceleration=tuple(doc["acceleration"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"{path}: bad drive log: {e}") from e


def _mining_cfg(window, lead) -> pipeline.MiningConfig:
    return pipeline.MiningConfig(window=window, keyframe_lead=lead)


@cli.command("mine")
@click.option("--log", "log_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="JSON drive log: timestamps [s], speed [m/s], yaw_rate "
                   "[rad/s], steering, acceleration [m/s^2].")
@click.option("--window", type=float, default=2.0, show_default=True)
@common_options
@click.pass_context
def mine_cmd(ctx, log_path, window, fmt, out):
    """Mine challenging intervals from a drive log."""
    log = _load_drivelog(log_path)
    intervals = pipeline.mine_challenging(log, _mining_cfg(window, 0.75))
    report = {"intervals": [list(i) for i in intervals]}
    lines = [f"[{lo:.3f}, {hi:.3f}] s" for lo, hi in intervals] or ["(none)"]
    _emit(report, lines, fmt, out)


@cli.command("keyframe")
@click.option("--log", "log_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--start", type=float, required=True)
@click.option("--end", type=float, required=True)
@click.option("--lead", type=float, default=0.75, show_default=True,
              help="Seconds before maneuver onset, in [0.5, 1.0].")
@common_options
@click.pass_context
def keyframe_cmd(ctx, log_path, start, end, lead, fmt, out):
    """Pick the keyframe within a mined interval."""
    log = _load_drivelog(log_path)
    res = pipeline.select_keyframe(log, (start, end), _mining_cfg(2.0, lead))
    report = {"timestamp": res.timestamp, "onset": res.onset,
              "clamped": res.clamped, "fallback": res.fallback}
    line = f"keyframe at {res.timestamp:.3f} s"
    if res.onset is not None:
        line += f" (onset {res.onset:.3f} s)"
    flags = [n for n in ("clamped", "fallback") if getattr(res, n)]
    if flags:
        line += " [" + ", ".join(flags) + "]"
    _emit(report, [line], fmt, out)


@cli.command("validate")
@click.option("--corpus", required=True, type=click.Path(exists=True, dir_okay=False))
@common_options
@click.pass_context
def validate_cmd(ctx, corpus, fmt, out):
    """Run annotation QA checks over a scenario corpus."""
    records = scenario.load_corpus(corpus, ctx.obj["vocab"])
    violations = pipeline.validate_corpus(records, ctx.obj["vocab"])
    report = {"violations": [
        {"record": v.record_id, "check": v.check, "detail": v.detail}
        for v in violations
    ]}
    lines = [f"{v.record_id}: {v.check}: {v.detail}" for v in violations] or ["clean"]
    _emit(report, lines, fmt, out)


@cli.command("stats")
@click.option("--corpus", required=True, type=click.Path(exists=True, dir_okay=False))
@common_options
@click.pass_context
def stats_cmd(ctx, corpus, fmt, out):
    """Meta-action statistics and split counts for a scenario corpus."""
    records = scenario.load_corpus(corpus, ctx.obj["vocab"])
    stats = pipeline.corpus_stats(records)
    splits = pipeline.split_corpus(records)
    report = {
        "n_records": stats.n_records,
        "position_frequencies": [dict(p) for p in stats.position_frequencies],
        "length_histogram": {str(k): v for k, v in stats.length_histogram.items()},
        "split_counts": {k: len(v) for k, v in splits.items()},
    }
    lines = [f"{stats.n_records} records"]
    for i, table in enumerate(stats.position_frequencies, 1):
        lines.append(f"position {i}:")
        lines += [f"  {tok:<34} {f:.4f}" for tok, f in table.items()]
    lines.append("sequence lengths:")
    lines += [f"  {k}: {v}" for k, v in stats.length_histogram.items()]
    lines.append("splits: " + ", ".join(f"{k}={len(v)}" for k, v in splits.items()))
    _emit(report, lines, fmt, out)


def main(argv=None) -> int:
    """Entry point with the documented exit-code contract."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.UsageError as e:
        e.show(file=sys.stderr)
        return 64
    except (InputError, ScenarioError, UnknownTokenError) as e:
        click.echo(f"error: {e}", err=True)
        return 1
    except (JudgeError, ValueError, OSError) as e:
        click.echo(f"error: {e}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
