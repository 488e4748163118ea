"""
End-to-end benchmark: generate -> corrupt -> preprocess -> predict -> plan -> oracle
"""

import time
from dataclasses import dataclass, field

import numpy as np

from src.dataset.pipeline import apply_input_mode, check_mode
from src.grasping.extract import DEFAULT_EPSILON, DEFAULT_SIGMA, extract_best_grasp
from src.grasping.planner import PlannerConfig, plan_direct, plan_grasp
from src.perception.preprocess import (
    NormalizationStats,
    assemble_input,
    crop_array,
    preprocess_depth,
    uncrop_pixel,
)
from src.sim.autolabel import labeled_sample
from src.sim.oracle import GripperModel, evaluate_plan
from src.sim.scene import MATERIALS, CatalogParams, generate_scene


@dataclass
class BenchmarkConfig:
    catalog: CatalogParams = field(default_factory=CatalogParams)
    corruption: object = None
    gripper: GripperModel = field(default_factory=GripperModel)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    preprocess: object = None
    quality_sigma: float = DEFAULT_SIGMA
    plateau_epsilon: float = DEFAULT_EPSILON


def scene_rngs(seed, n):
    """Independent generator per scene"""
    return [np.random.default_rng(child) for child in np.random.SeedSequence(seed).spawn(n)]


def plan_for_mode(mode, g_p, raw, conditioned, offset, size, camera, planner):
    """Plan with the depth each training mode is allowed to see"""
    depth = crop_array(conditioned.depth, offset, size)
    if mode == "fsg":
        valid = crop_array(conditioned.valid_mask, offset, size)
        return plan_grasp(g_p, depth, camera, planner, valid_mask=valid, crop_offset=offset)
    if mode == "rgbd_no_height":
        return plan_direct(g_p, depth, camera, planner, crop_offset=offset)
    return plan_direct(g_p, crop_array(raw.depth, offset, size), camera, planner, crop_offset=offset)


def evaluate_scene(net, scene, rng, mode, stats, config, scene_id="scene"):
    """
    Run the whole pipeline on one scene

    Returns:
        tuple: (per-scene record dict, forward time in seconds)
    """
    sample, rendered = labeled_sample(scene, rng, scene_id, config.corruption, config.gripper.max_opening)
    size = net.config.input_size
    conditioned, _ = preprocess_depth(sample.frame, config=config.preprocess)
    tensor = apply_input_mode(assemble_input(conditioned, stats, size=size), mode)
    offset = conditioned.crop_offset

    start = time.perf_counter()
    maps = net.predict(tensor)[0]
    elapsed = time.perf_counter() - start

    g_p = extract_best_grasp(maps, config.quality_sigma, config.plateau_epsilon)
    plan = plan_for_mode(mode, g_p, sample.frame, conditioned, offset, size, scene.camera, config.planner)
    outcome = evaluate_plan(scene, plan, config.gripper)

    x, y = uncrop_pixel(int(g_p.x_p), int(g_p.y_p), offset)
    true_height = max(0.0, float(rendered.table_depth[y, x] - rendered.depth[y, x]))
    record = {
        "id": scene_id,
        "material": scene.target.material,
        "object_height_mm": scene.target.height,
        "primitive": plan.primitive.value,
        "success": outcome.success,
        "failure_reason": outcome.failure_reason,
        "h_star_mm": float(g_p.h_star),
        "true_height_mm": true_height,
        "z_grasp_mm": float(plan.z_grasp),
    }
    return record, elapsed


def _height_summary(errors):
    if not errors:
        return {"count": 0}
    values = np.asarray(errors, dtype=np.float64)
    return {
        "count": int(values.size),
        "median": float(np.median(values)),
        "mean": float(values.mean()),
        "p90": float(np.percentile(values, 90)),
        "max": float(values.max()),
        "under_20mm": float(np.mean(values < 20.0)),
        "values": [float(v) for v in values],
    }


def run_benchmark(net, n_scenes, seed, mode="fsg", stats=None, config=None):
    """
    Evaluate a trained network on freshly generated corrupted scenes

    Args:
        net (FSGNet): Trained network
        n_scenes (int): Number of scenes
        seed (int): Benchmark seed; scene i uses the i-th spawned child seed
        mode (str): fsg, rgbd_no_height or depth_only
        stats (NormalizationStats): Input normalization used in training
        config (BenchmarkConfig): Simulator, gripper and planner settings

    Returns:
        dict: Benchmark report; only the "timing" entry varies between runs
    """
    check_mode(mode)
    config = config or BenchmarkConfig()
    stats = stats or NormalizationStats()

    records = []
    forward_times = []
    for index, rng in enumerate(scene_rngs(seed, n_scenes)):
        scene = generate_scene(rng, config.catalog)
        record, elapsed = evaluate_scene(net, scene, rng, mode, stats, config, f"scene_{index:05d}")
        records.append(record)
        forward_times.append(elapsed)
    records.sort(key=lambda r: r["id"])

    per_material = {m: {"attempts": 0, "successes": 0} for m in MATERIALS}
    failures = {}
    primitives = {}
    for record in records:
        bucket = per_material[record["material"]]
        bucket["attempts"] += 1
        bucket["successes"] += int(record["success"])
        if not record["success"]:
            failures[record["failure_reason"]] = failures.get(record["failure_reason"], 0) + 1
        primitives[record["primitive"]] = primitives.get(record["primitive"], 0) + 1

    successes = sum(int(r["success"]) for r in records)
    height_errors = [abs(r["h_star_mm"] - r["true_height_mm"]) for r in records] if mode == "fsg" else []
    return {
        "mode": mode,
        "seed": seed,
        "n_scenes": n_scenes,
        "per_material": per_material,
        "overall_rate": successes / n_scenes if n_scenes else 0.0,
        "failure_histogram": failures,
        "primitive_histogram": primitives,
        "height_error_mm": _height_summary(height_errors),
        "scenes": records,
        "timing": {"mean_forward_ms": 1000.0 * float(np.mean(forward_times)) if forward_times else 0.0},
    }
