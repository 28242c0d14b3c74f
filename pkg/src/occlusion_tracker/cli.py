#!/usr/bin/env python3
"""
Command Line Interface for the occlusion-aware tracker
"""
import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import (EXIT_CONFIG, EXIT_FAILURE, EXIT_INTERRUPTED, EXIT_LOST, EXIT_OK, InvalidArgumentError,
                     OcclusionTrackerError, SpecValidationError, TargetLostError)

# Mode emoji mapping
MODE_EMOJIS = {
    'TRACKING': '🎯',
    'PREDICTING': '🔮',
    'LOST': '🛑',
}


def get_mode_emoji(mode: str) -> str:
    """Get emoji for a tracker mode"""
    return MODE_EMOJIS.get(mode, '❓')


def print_result(success: bool, message: str, prefix: str = ""):
    """Print a result message with appropriate emoji"""
    emoji = "✅" if success else "❌"
    print(f"{prefix}{emoji} {message}")


def print_info(message: str, prefix: str = ""):
    """Print an info message"""
    print(f"{prefix}ℹ️  {message}")


def setup_logging(level: str = "INFO"):
    """Setup logging configuration"""
    logging.basicConfig(
        level=getattr(logging, level.upper()),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    # Reduce noise from third-party libraries
    logging.getLogger('PIL').setLevel(logging.WARNING)
    logging.getLogger('matplotlib').setLevel(logging.WARNING)


def _parse_box(text: str):
    from .appearance import BoundingBox
    try:
        cx, cy, w, h = (float(v) for v in text.split(','))
    except ValueError as e:
        raise InvalidArgumentError(f"--init expects cx,cy,w,h, got '{text}'") from e
    return BoundingBox(cx, cy, w, h)


def _parse_ints(text: str):
    try:
        return [int(v) for v in text.split(',') if v.strip()]
    except ValueError as e:
        raise InvalidArgumentError(f"expected comma-separated integers, got '{text}'") from e


def _scenarios(args):
    from .simulator import crossing_scenario, load_spec
    if args.spec:
        return [load_spec(path) for path in args.spec]
    return [crossing_scenario(seed=args.seed + k, frames=args.frames, noise=args.noise)
            for k in range(args.scenarios)]


def _load_predictor(path):
    from .io_formats import read_params
    if not path:
        return None
    params = read_params(path)
    print_info(f"Using trajectory GAN from {path} (t_obs={params.t_obs}, n_pred={params.n_pred})")
    return params


def cmd_simulate(args, config):
    """Render a scenario to PGM frames plus a truth table"""
    from .io_formats import write_manifest, write_sequence
    from .simulator import crossing_scenario, load_spec, simulate

    spec = load_spec(args.spec) if args.spec else crossing_scenario(args.seed, args.frames, args.noise)
    print(f"🎬 Simulating {spec.frames} frames ({len(spec.distractors)} distractors)")
    frames, truth = simulate(spec)
    out = write_sequence(args.out, frames, truth)
    (out / "scenario.json").write_text(spec.model_dump_json(indent=2), encoding='utf-8')
    write_manifest(out, config, extra={'scenario_seed': spec.seed})
    print_result(True, f"Wrote {len(frames)} frames to {out}")
    print(f"   Occluded frames: {int(truth['occluded'].sum())}")
    return EXIT_OK


def cmd_track(args, config):
    """Track the target through a PGM sequence"""
    from .cli_utils import print_metrics
    from .io_formats import read_sequence, write_manifest, write_table
    from .metrics import evaluate, supervision_losses
    from .pipeline import ended_lost, results_to_frame, run_sequence, track_appearance_only
    from .appearance import BoundingBox

    frames, truth = read_sequence(args.seq)
    if args.init:
        init_box = _parse_box(args.init)
    elif truth is not None:
        first = truth.sort_values('frame').iloc[0]
        init_box = BoundingBox(float(first['cx']), float(first['cy']), float(first['w']), float(first['h']))
    else:
        raise InvalidArgumentError("no truth table in the sequence; pass --init cx,cy,w,h")

    print(f"🎯 Tracking {len(frames)} frames from {args.seq}")
    if args.appearance_only:
        results = track_appearance_only(frames, init_box, config, truth)
    else:
        results = run_sequence(frames, init_box, _load_predictor(args.predictor), config, truth)

    table = results_to_frame(results)
    write_table(args.out, table)
    write_manifest(Path(args.out).parent, config, extra={'sequence': str(args.seq), 'predictor': args.predictor})
    predicted = int((table['mode'] == 'PREDICTING').sum())
    print_result(True, f"Wrote {len(table)} results to {args.out}")
    print(f"   {get_mode_emoji('PREDICTING')} Predicted frames: {predicted}")

    if truth is not None:
        print_metrics(evaluate(table, truth), supervision_losses(table, truth, config.loss))

    if ended_lost(results):
        lost_at = next(r.frame_id for r in results if r.target_lost)
        raise TargetLostError(f"Target lost at frame {lost_at}, beyond the {config.pipeline.max_predict}-frame "
                              f"prediction horizon")
    return EXIT_OK


def cmd_train_predictor(args, config):
    """Train the trajectory GAN on recorded or synthetic trajectories"""
    from .cli_utils import ProgressReporter
    from .io_formats import companion_path, read_trajectories, write_manifest, write_params, write_table
    from .trajectory_gan import evaluate_ade, sliding_splits, synthesize_trajectories, train_gan

    gan_cfg = config.gan
    progress = ProgressReporter(total_steps=3)
    progress.start_workflow("trajectory predictor training")

    progress.step("Loading trajectories")
    if args.data:
        trajectories = read_trajectories(args.data)
    elif args.synthetic:
        trajectories = synthesize_trajectories(args.synthetic, args.length, args.family,
                                               field_size=gan_cfg.field_size, noise=args.noise, seed=gan_cfg.seed)
    else:
        raise InvalidArgumentError("train-predictor needs --data or --synthetic")
    splits = sliding_splits(trajectories, gan_cfg.t_obs, gan_cfg.n_pred, args.stride)
    progress.result("Trajectories", len(trajectories))
    progress.result("Training windows", len(splits))

    progress.step(f"Training for {gan_cfg.steps} steps")
    gen, disc, log = train_gan(splits, gan_cfg)
    last = log.steps[-1]
    progress.stats({'d_loss': last.d_loss, 'g_loss': last.g_loss, 'l2_loss': last.l2_loss,
                    'train_ade': evaluate_ade(gen, splits, seed=gan_cfg.seed)})

    progress.step("Writing parameters")
    out = Path(args.out)
    write_params(out, gen)
    write_params(companion_path(out, 'discriminator'), disc)
    log_path = out.with_suffix('.log.csv')
    write_table(log_path, log.to_frame())
    write_manifest(out.parent, config, extra={'trajectories': len(trajectories), 'windows': len(splits)})
    progress.success(f"Generator written to {out}")
    progress.result("Training log", log_path)
    return EXIT_OK


def cmd_finetune(args, config):
    """Fit the score calibration head with occlusion supervision on tracked scenarios"""
    from .cli_utils import ProgressReporter
    from .finetune import ScoreCalibration, ScoreSamples, calibration_summary, collect_samples, finetune_calibration
    from .io_formats import write_manifest, write_table
    from .sweep import run_scenarios

    scenarios = _scenarios(args)
    predictor = _load_predictor(args.predictor)
    progress = ProgressReporter(total_steps=3)
    progress.start_workflow("occlusion-supervised fine-tuning")

    progress.step(f"Tracking {len(scenarios)} scenarios with the raw score")
    identity = ScoreCalibration().to_config(config)
    runs = run_scenarios(scenarios, identity, predictor, workers=args.workers)
    samples = ScoreSamples.concat(collect_samples(results, truth) for results, truth in runs)
    progress.result("Scored frames", len(samples))
    progress.result("Occluded frames", int(samples.gammas.sum()))

    progress.step(f"Fine-tuning for {config.finetune.steps} steps")
    result = finetune_calibration(samples, config.loss, config.finetune)
    progress.stats(calibration_summary(result))

    progress.step("Writing calibrated configuration")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    tuned = result.calibration.to_config(config)
    out.write_text(json.dumps(tuned.to_dict(), indent=2), encoding='utf-8')
    log_path = out.with_suffix('.log.csv')
    write_table(log_path, result.log)
    write_manifest(out.parent, tuned, extra={'scenarios': len(scenarios), 'samples': len(samples)})
    progress.success(f"Calibrated configuration written to {out}")
    progress.result("Fine-tuning log", log_path)
    return EXIT_OK


def cmd_eval(args, config):
    """Compare tracker results with ground truth"""
    from .cli_utils import print_metrics
    from .io_formats import read_results, read_truth
    from .metrics import evaluate, supervision_losses

    results, truth = read_results(args.results), read_truth(args.truth)
    report = evaluate(results, truth)
    losses = supervision_losses(results, truth, config.loss) if 'score' in results else None
    print_metrics(report, losses)
    if args.out:
        payload = {'metrics': report.to_dict(), 'losses': losses}
        Path(args.out).write_text(json.dumps(payload, indent=2), encoding='utf-8')
        print_result(True, f"Wrote report to {args.out}")
    return EXIT_OK


def cmd_sweep(args, config):
    """Sweep one occlusion threshold over a set of scenarios"""
    from .cli_utils import print_table
    from .io_formats import write_manifest, write_table
    from .sweep import parse_values, sweep, sweep_preset

    scenarios = _scenarios(args)
    predictor = _load_predictor(args.predictor)
    if args.preset:
        print(f"📊 Sweeping preset grid '{args.preset}' over {len(scenarios)} scenarios")
        table = sweep_preset(scenarios, args.preset, config, predictor, workers=args.workers)
    else:
        if not args.param or not args.values:
            raise InvalidArgumentError("sweep needs --preset or both --param and --values")
        print(f"📊 Sweeping {args.param} over {len(scenarios)} scenarios")
        table = sweep(scenarios, args.param, parse_values(args.values), config, predictor, workers=args.workers)

    print_table("Sweep results", table, ['value', 'mean_iou', 'failures', 'occlusion_precision', 'occlusion_recall'])
    if args.out:
        write_table(args.out, table)
        write_manifest(Path(args.out).parent, config, extra={'scenarios': len(scenarios)})
        print_result(True, f"Wrote sweep table to {args.out}")
    return EXIT_OK


def cmd_study_obs_length(args, config):
    """Held-out ADE as a function of the observation length"""
    from .cli_utils import print_table
    from .io_formats import read_trajectories, write_manifest, write_table
    from .trajectory_gan import observation_length_study, synthesize_trajectories

    lengths = _parse_ints(args.lengths)
    counts = _parse_ints(args.counts) if args.counts else None
    if args.data:
        dataset = read_trajectories(args.data)
    else:
        dataset = synthesize_trajectories(args.synthetic, max(lengths) + config.gan.n_pred, args.family,
                                          field_size=config.gan.field_size, noise=args.noise,
                                          seed=config.gan.seed)
    print(f"🧪 Observation-length study over {len(dataset)} trajectories, lengths {lengths}")
    table = observation_length_study(dataset, lengths, config.gan, counts)
    print_table("Mean ADE", table)
    if args.out:
        write_table(args.out, table)
        write_manifest(Path(args.out).parent, config, extra={'lengths': lengths, 'sample_counts': counts})
        print_result(True, f"Wrote study table to {args.out}")
    return EXIT_OK


def _add_scenario_args(parser, with_count: bool):
    parser.add_argument('--seed', type=int, default=0, help='Seed of the built-in crossing scenario (default: 0)')
    parser.add_argument('--frames', type=int, default=50, help='Frames per built-in scenario (default: 50)')
    parser.add_argument('--noise', type=float, default=0.0, help='Pixel noise of built-in scenarios (default: 0)')
    if with_count:
        parser.add_argument('--scenarios', type=int, default=10,
                            help='Number of built-in crossing scenarios, seeds seed..seed+n-1 (default: 10)')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="occlusion-tracker",
        description="Occlusion-aware single-target tracker with trajectory prediction",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Render the built-in crossing scenario
  occlusion-tracker simulate --out runs/seq0

  # Track with the constant-velocity baseline, or a trained GAN
  occlusion-tracker track --seq runs/seq0 --out runs/seq0/results.csv
  occlusion-tracker track --seq runs/seq0 --predictor gan.bin --out runs/seq0/results.csv

  # Train the trajectory predictor on synthetic motion
  occlusion-tracker train-predictor --synthetic 200 --out gan.bin

  # Fit the score calibration on crossing scenarios, then track with it
  occlusion-tracker finetune --out calibrated.json
  occlusion-tracker --config calibrated.json track --seq runs/seq0 --out runs/seq0/results.csv

  # Evaluate, sweep and study
  occlusion-tracker eval --results runs/seq0/results.csv --truth runs/seq0/truth.csv
  occlusion-tracker sweep --param epsilon_t --values 0.55:0.95:0.05 --out sweep.csv
  occlusion-tracker sweep --preset i --workers 4
  occlusion-tracker study-obs-length --lengths 2,4,6,8 --counts 10,20,40

Environment Variables:
  OCCLUSION_TRACKER_CONFIG - Path to a JSON configuration file
  OT_EPSILON_THRESHOLD     - Occlusion threshold epsilon_t
  OT_MIX_WEIGHT            - Composite index mix weight i
  OT_SEED                  - Pipeline seed
        """
    )

    parser.add_argument(
        "--log-level", "-l",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default="INFO",
        help="Log level (default: INFO)"
    )
    parser.add_argument(
        "--debug", "-d",
        action="store_true",
        help="Enable debug mode (equivalent to --log-level DEBUG)"
    )
    parser.add_argument('--config', help='JSON configuration file (default: environment / built-in defaults)')
    parser.add_argument('--set', action='append', default=[], metavar='SECTION.FIELD=VALUE',
                        help='Override one configuration value (repeatable)')

    subparsers = parser.add_subparsers(dest='command', help='Available commands')

    simulate_parser = subparsers.add_parser('simulate', help='Render a scenario to PGM frames and truth.csv')
    simulate_parser.add_argument('--spec', help='Scenario spec JSON (default: built-in crossing scenario)')
    simulate_parser.add_argument('--out', required=True, help='Output directory')
    _add_scenario_args(simulate_parser, with_count=False)

    track_parser = subparsers.add_parser('track', help='Track the target through a PGM sequence')
    track_parser.add_argument('--seq', required=True, help='Sequence directory')
    track_parser.add_argument('--predictor', help='Generator parameter file (default: constant-velocity baseline)')
    track_parser.add_argument('--init', help='Initial box cx,cy,w,h (default: first truth row)')
    track_parser.add_argument('--appearance-only', action='store_true',
                              help='Ignore occlusion verdicts and always follow the appearance model')
    track_parser.add_argument('--out', required=True, help='Results CSV')

    train_parser = subparsers.add_parser('train-predictor', help='Train the trajectory GAN')
    train_parser.add_argument('--data', help='Trajectory CSV (frame_id, x, y, track_id)')
    train_parser.add_argument('--synthetic', type=int, help='Train on this many synthetic trajectories instead')
    train_parser.add_argument('--family', choices=['linear', 'sinusoidal', 'mixed'], default='mixed',
                              help='Synthetic motion family (default: mixed)')
    train_parser.add_argument('--length', type=int, default=24, help='Synthetic trajectory length (default: 24)')
    train_parser.add_argument('--noise', type=float, default=0.0, help='Synthetic position noise (default: 0)')
    train_parser.add_argument('--stride', type=int, default=1, help='Spacing of training windows (default: 1)')
    train_parser.add_argument('--out', required=True, help='Generator parameter file')

    finetune_parser = subparsers.add_parser('finetune', help='Fit the score calibration with occlusion supervision')
    finetune_parser.add_argument('--spec', nargs='+', help='Scenario spec JSON files (default: crossing scenarios)')
    finetune_parser.add_argument('--predictor', help='Generator parameter file (default: constant-velocity baseline)')
    finetune_parser.add_argument('--workers', type=int, default=1, help='Parallel scenario runs (default: 1)')
    finetune_parser.add_argument('--out', required=True, help='Calibrated configuration JSON')
    _add_scenario_args(finetune_parser, with_count=True)

    eval_parser = subparsers.add_parser('eval', help='Evaluate tracker results against ground truth')
    eval_parser.add_argument('--results', required=True, help='Results CSV')
    eval_parser.add_argument('--truth', required=True, help='Truth CSV')
    eval_parser.add_argument('--out', help='Write the report as JSON')

    sweep_parser = subparsers.add_parser('sweep', help='Sweep one occlusion threshold')
    sweep_parser.add_argument('--param', help='d_t, s_t, epsilon_t or i')
    sweep_parser.add_argument('--values', help="'start:stop:step' or a comma-separated list")
    sweep_parser.add_argument('--preset', help='Use the built-in grid for d_t, s_t, epsilon_t or i')
    sweep_parser.add_argument('--spec', nargs='+', help='Scenario spec JSON files (default: crossing scenarios)')
    sweep_parser.add_argument('--predictor', help='Generator parameter file (default: constant-velocity baseline)')
    sweep_parser.add_argument('--workers', type=int, default=1, help='Parallel scenario runs (default: 1)')
    sweep_parser.add_argument('--out', help='Sweep table CSV')
    _add_scenario_args(sweep_parser, with_count=True)

    study_parser = subparsers.add_parser('study-obs-length', help='Held-out ADE per observation length')
    study_parser.add_argument('--lengths', default='2,4,6,8', help='Observation lengths (default: 2,4,6,8)')
    study_parser.add_argument('--counts', help='Training-set sizes, e.g. 10,20,40,60 (default: whole pool)')
    study_parser.add_argument('--data', help='Trajectory CSV (default: synthetic trajectories)')
    study_parser.add_argument('--synthetic', type=int, default=80, help='Synthetic trajectories (default: 80)')
    study_parser.add_argument('--family', choices=['linear', 'sinusoidal', 'mixed'], default='sinusoidal',
                              help='Synthetic motion family (default: sinusoidal)')
    study_parser.add_argument('--noise', type=float, default=0.0, help='Synthetic position noise (default: 0)')
    study_parser.add_argument('--out', help='Study table CSV')
    return parser


def main(argv=None):
    """Main CLI entry point"""
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return EXIT_FAILURE

    # Determine log level: --debug flag overrides --log-level
    log_level = "DEBUG" if args.debug else args.log_level
    setup_logging(log_level)

    try:
        from .config import load_config

        try:
            config = load_config(args.config, args.set)
        except SpecValidationError as e:
            print(f"\n❌ Configuration Error:")
            for error in e.errors:
                print(f"   • {error}")
            print("\n📖 See README.md for the configuration sections and fields")
            return EXIT_CONFIG

        command_functions = {
            'simulate': cmd_simulate,
            'track': cmd_track,
            'train-predictor': cmd_train_predictor,
            'finetune': cmd_finetune,
            'eval': cmd_eval,
            'sweep': cmd_sweep,
            'study-obs-length': cmd_study_obs_length,
        }
        return command_functions[args.command](args, config)

    except KeyboardInterrupt:
        print("\n🛑 Operation cancelled by user")
        return EXIT_INTERRUPTED
    except (SpecValidationError, InvalidArgumentError) as e:
        print(f"❌ Invalid input: {e}")
        return EXIT_CONFIG
    except TargetLostError as e:
        print(f"{get_mode_emoji('LOST')} {e}")
        return EXIT_LOST
    except OcclusionTrackerError as e:
        print(f"❌ {e}")
        return EXIT_FAILURE
    except Exception as e:
        print(f"❌ Unexpected error: {e}")
        if log_level == "DEBUG":
            import traceback
            traceback.print_exc()
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
