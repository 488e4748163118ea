"""
Main module - Entry point for the FSG grasping pipeline
"""

import os
import sys
import time
import argparse

import numpy as np
from colorama import init

from src import __version__
from src.dataset.pipeline import apply_input_mode, check_mode
from src.dataset.storage import load_dataset, load_sample, save_manifest, save_sample, split
from src.grasping.extract import extract_best_grasp
from src.grasping.overlay import render_overlay, save_overlay
from src.grasping.planner import PlannerConfig
from src.nn.checkpoint import load_checkpoint, read_checkpoint_meta, save_checkpoint
from src.nn.network import LAYER_TABLES, NetworkConfig, build_network
from src.nn.training import TrainConfig, train
from src.perception.preprocess import NormalizationStats, PreprocessConfig, assemble_input, crop_array, preprocess_depth
from src.sim.autolabel import labeled_sample
from src.sim.benchmark import BenchmarkConfig, plan_for_mode, run_benchmark
from src.sim.oracle import GripperModel
from src.sim.scene import CatalogParams, generate_scene
from src.utils import console
from src.utils.config import load_run_config
from src.utils.errors import ConfigurationError, FSGError
from src.utils.reporter import BenchmarkReporter, TrainReporter

# Initialize colorama for cross-platform colored output
init(autoreset=True)

EXIT_OK = 0
EXIT_ERROR = 1


def network_config(run):
    if run.layer_table not in LAYER_TABLES:
        raise ConfigurationError(f"Unknown layer table '{run.layer_table}', expected one of {sorted(LAYER_TABLES)}")
    return NetworkConfig(
        layers=LAYER_TABLES[run.layer_table],
        input_size=run.input_size,
        learning_rate=run.learning_rate,
        batch_size=run.batch_size,
        epochs=run.epochs,
        seed=run.seed,
    )


def preprocess_config(run):
    return PreprocessConfig(
        sigma_s=run.sigma_s,
        sigma_r=run.sigma_r,
        iterations=run.filter_iterations,
        temporal_alpha=run.temporal_alpha,
        temporal_delta=run.temporal_delta,
        inpaint_radius=run.inpaint_radius,
    )


def catalog_params(run):
    return CatalogParams(
        material_mix=run.material_weights(),
        image_size=run.image_size,
        focal=run.focal,
        camera_height=run.camera_height,
    )


def gripper_model(run):
    return GripperModel(
        max_opening=run.max_opening, finger_thickness=run.finger_thickness, compliance_band=run.compliance_band
    )


def planner_config(run):
    return PlannerConfig(h_c=run.h_c, z1=run.z1, z_pre=run.z_pre)


def cmd_gen_data(args, run):
    """Generate labeled synthetic samples and their manifest"""
    if run.n_samples <= 0:
        raise ConfigurationError(f"n_samples must be positive, got {run.n_samples}")
    console.info(f"🧪 Generating {run.n_samples} samples into {args.out}")
    catalog = catalog_params(run)
    seeds = np.random.SeedSequence(run.seed).generate_state(run.n_samples)
    entries = []
    for index, sample_seed in enumerate(seeds):
        rng = np.random.default_rng(int(sample_seed))
        scene = generate_scene(rng, catalog)
        sample_id = f"sample_{index:05d}"
        sample, _ = labeled_sample(scene, rng, sample_id, max_opening=run.max_opening)
        save_sample(args.out, sample)
        entries.append(
            {
                "id": sample_id,
                "seed": int(sample_seed),
                "material": scene.target.material,
                "object": scene.target.to_dict(),
                "n_grasps": len(sample.grasps),
            }
        )
    save_manifest(args.out, entries, seed=run.seed)
    console.ok(f"Wrote {len(entries)} samples and manifest.json")
    return EXIT_OK


def cmd_train(args, run):
    """Train a network on a dataset directory"""
    dataset = load_dataset(args.data)
    console.info(f"📂 Loaded {len(dataset)} samples from {args.data}")
    if len(dataset) >= 10:
        train_set, eval_set = split(dataset, run.eval_fraction, run.seed)
    else:
        console.warn(f"Only {len(dataset)} samples: training and evaluating on the whole set")
        train_set, eval_set = dataset, dataset

    net = build_network(network_config(run))
    console.info(
        f"🧠 Network: {net.parameter_count()} trainable parameters "
        f"({net.parameter_count(folded=True)} after folding)"
    )
    config = TrainConfig(
        mode=check_mode(run.mode),
        micro_batch=run.micro_batch,
        augment=run.augment,
        preprocess=preprocess_config(run),
    )
    start = time.perf_counter()
    report = train(net, (train_set, eval_set), config)
    elapsed = time.perf_counter() - start

    save_checkpoint(net, args.out, meta={"mode": run.mode, "normalization": report.stats.to_dict()})
    reporter = TrainReporter(report.to_dict())
    reporter.print_console_report()
    if args.metrics:
        reporter.result["timing"] = {"train_seconds": elapsed}
        reporter.save_json_report(args.metrics)
        console.ok(f"Metrics saved to: {args.metrics}")
    console.ok(f"Checkpoint saved to: {args.out} ({elapsed:.1f} s)")
    return EXIT_OK


def _load_for_inference(path):
    net = load_checkpoint(path)
    meta = read_checkpoint_meta(path)
    stats = NormalizationStats.from_dict(meta["normalization"]) if meta.get("normalization") else None
    return net, meta.get("mode", "fsg"), stats


def cmd_infer(args, run):
    """Plan a grasp for one stored sample"""
    net, mode, stats = _load_for_inference(args.checkpoint)
    sample = load_sample(args.data, args.sample_id)
    camera = sample.frame.camera
    size = net.config.input_size

    conditioned, _ = preprocess_depth(sample.frame, config=preprocess_config(run))
    tensor = apply_input_mode(assemble_input(conditioned, stats, size=size), mode)
    offset = conditioned.crop_offset

    start = time.perf_counter()
    maps = net.predict(tensor)[0]
    forward_ms = 1000.0 * (time.perf_counter() - start)

    g_p = extract_best_grasp(maps, run.quality_sigma, run.plateau_epsilon)
    plan = plan_for_mode(mode, g_p, sample.frame, conditioned, offset, size, camera, planner_config(run))

    with open(args.plan, "w", encoding="utf-8") as f:
        f.write(plan.to_json())
    overlay = render_overlay(crop_array(sample.frame.rgb, offset, size), g_p, plan.primitive.value)
    save_overlay(args.overlay, overlay)

    console.ok(f"Primitive: {plan.primitive.value} (h* = {g_p.h_star:.1f} mm, q = {g_p.q:.3f})")
    console.info(f"⏱️  Forward pass: {forward_ms:.1f} ms")
    console.ok(f"Plan saved to: {args.plan}; overlay saved to: {args.overlay}")
    return EXIT_OK


def cmd_eval(args, run):
    """Benchmark a checkpoint on generated scenes"""
    net, mode, stats = _load_for_inference(args.checkpoint)
    if args.mode is None:
        run.mode = mode
    if mode != run.mode:
        raise ConfigurationError(f"Checkpoint was trained in mode '{mode}', benchmark requested '{run.mode}'")
    config = BenchmarkConfig(
        catalog=catalog_params(run),
        gripper=gripper_model(run),
        planner=planner_config(run),
        preprocess=preprocess_config(run),
        quality_sigma=run.quality_sigma,
        plateau_epsilon=run.plateau_epsilon,
    )
    console.info(f"🔍 Evaluating {run.n_scenes} scenes in mode {mode}")
    result = run_benchmark(net, run.n_scenes, run.seed, mode, stats, config)
    reporter = BenchmarkReporter(result)
    reporter.print_console_report()
    reporter.save_json_report(args.out)
    console.ok(f"Report saved to: {args.out}")
    return EXIT_OK


def _positive_int(value):
    number = int(value)
    if number <= 0:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {value}")
    return number


def _non_negative_int(value):
    number = int(value)
    if number < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return number


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fsg",
        description="Fuzzy-depth soft grasping - data generation, training, inference and benchmarks",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Generate 200 synthetic samples
  python -m src.fsg gen-data --out data --n-samples 200 --seed 7

  # Train and save a checkpoint
  python -m src.fsg train --data data --out fsg.ckpt --metrics train.json

  # Plan a grasp for one sample
  python -m src.fsg infer --checkpoint fsg.ckpt --data data --sample-id sample_00000 \\
      --overlay grasp.png --plan plan.json

  # Benchmark on 100 fresh corrupted scenes
  python -m src.fsg eval --checkpoint fsg.ckpt --n-scenes 100 --seed 1 --out report.json
        """,
    )
    parser.add_argument("-v", "--version", action="version", version=f"FSG grasping v{__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Flat YAML file of configuration keys", default=None)
    common.add_argument("--seed", type=int, default=None, help="Global seed")

    gen = sub.add_parser("gen-data", parents=[common], help="Generate synthetic labeled samples")
    gen.add_argument("--out", required=True, help="Output dataset directory")
    gen.add_argument("--n-samples", type=_positive_int, default=None, help="Number of samples")
    gen.add_argument("--material-mix", default=None, help="e.g. opaque:0.25,specular:0.25,...")
    gen.set_defaults(handler=cmd_gen_data)

    tr = sub.add_parser("train", parents=[common], help="Train a network")
    tr.add_argument("--data", required=True, help="Dataset directory")
    tr.add_argument("--out", required=True, help="Checkpoint path")
    tr.add_argument("--metrics", default=None, help="Training report JSON path")
    tr.add_argument("--epochs", type=_non_negative_int, default=None)
    tr.add_argument("--batch-size", type=_positive_int, default=None)
    tr.add_argument("--learning-rate", type=float, default=None)
    tr.add_argument("--mode", choices=["fsg", "rgbd_no_height", "depth_only"], default=None)
    tr.set_defaults(handler=cmd_train)

    inf = sub.add_parser("infer", parents=[common], help="Plan a grasp for one sample")
    inf.add_argument("--checkpoint", required=True)
    inf.add_argument("--data", required=True, help="Dataset directory holding the sample")
    inf.add_argument("--sample-id", required=True)
    inf.add_argument("--overlay", required=True, help="Overlay PNG path")
    inf.add_argument("--plan", required=True, help="Grasp plan JSON path")
    inf.set_defaults(handler=cmd_infer)

    ev = sub.add_parser("eval", parents=[common], help="Benchmark a checkpoint on generated scenes")
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--n-scenes", type=_positive_int, default=None)
    ev.add_argument("--mode", choices=["fsg", "rgbd_no_height", "depth_only"], default=None)
    ev.add_argument("--out", required=True, help="Benchmark report JSON path")
    ev.set_defaults(handler=cmd_eval)
    return parser


_OVERRIDE_KEYS = ("seed", "n_samples", "material_mix", "epochs", "batch_size", "learning_rate", "mode", "n_scenes")


def main(argv=None):
    """Main entry point; returns the process exit code"""
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {key: getattr(args, key) for key in _OVERRIDE_KEYS if getattr(args, key, None) is not None}

    console.banner(f"FSG grasping v{__version__}", f"{args.command}")
    try:
        run = load_run_config(args.config, overrides)
        console.print_config(run.to_dict())
        for path in (getattr(args, name, None) for name in ("out", "metrics", "overlay", "plan")):
            if path and args.command != "gen-data" and os.path.dirname(path):
                os.makedirs(os.path.dirname(path), exist_ok=True)
        return args.handler(args, run)
    except KeyboardInterrupt:
        console.warn("Interrupted by user")
        return EXIT_ERROR
    except (FSGError, OSError) as e:
        console.fail(f"{type(e).__name__}: {str(e)}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
