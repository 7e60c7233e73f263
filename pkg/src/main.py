"""Command-line entry point for action-synth."""
import argparse
import json
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from loguru import logger

from .agents.compositor_agent import CompositorAgent
from .agents.corpus_agent import CorpusAgent
from .agents.evaluation_agent import EvaluationAgent
from .agents.gradcheck_agent import run_gradcheck_suite
from .agents.synthesis_agent import (
    SynthesisAgent,
    expand_dataset,
    inject_new_actions,
    perspective_augment,
    plan_generated_jobs,
    substitute_subjects,
)
from .agents.trajectory_agent import TrajectoryAgent, examples_from_manifest
from .config import Config, load_config, resolve_config_path
from .schemas.models import ClipManifest, SubjectRecord, SynthesisJob, ToyCorpusSpec
from .utils.logger import setup_logging
from .utils.manifest_io import load_jobs, load_manifest, save_jobs
from .utils.skeleton_io import save_skeleton_sequence

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

JOBS_FILE = "jobs.json"


def _csv(value: str) -> List[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def _global_flags(default: object) -> argparse.ArgumentParser:
    """Flags accepted both before and after the command name."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=default, help="Root seed (overrides config)")
    common.add_argument("--config", type=Path, default=default, help="Path to config file")
    common.add_argument(
        "--verbose", action="store_true", default=default, help="Enable debug logging"
    )
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="action-synth",
        description="Synthesize human action videos from small seed datasets",
        parents=[_global_flags(None)],
    )
    parser.set_defaults(verbose=False)
    common = _global_flags(argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", metavar="command")

    def add(name: str, summary: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, help=summary, parents=[common])

    p = add("train-traj", "Train the trajectory GAN on a manifest's skeletons")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument(
        "--out", type=Path, help="Checkpoint path (default: <checkpoints_dir>/trajectory.ckpt)"
    )
    p.add_argument("--steps", type=int)
    p.add_argument("--labels", type=int, help="Expected label count (checked against manifest)")

    p = add("sample-traj", "Sample skeleton sequences for one action label")
    p.add_argument("--ckpt", type=Path, required=True)
    p.add_argument("--label", required=True, help="Label name or index")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--out", type=Path, required=True, help="Output directory")

    p = add("train-frames", "Train the frame compositor GAN")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument(
        "--out", type=Path, help="Checkpoint path (default: <checkpoints_dir>/frames.ckpt)"
    )
    p.add_argument("--steps", type=int)
    p.add_argument("--size", type=int, help="Square canvas side in pixels")
    p.add_argument("--k", type=int, help="Reference frames per target")
    p.add_argument("--lambda", "--lambda-l1", type=float, dest="lambda_l1")
    p.add_argument("--beta", "--beta-regional", type=float, dest="beta_regional")

    p = add("render", "Render a saved job plan")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--jobs", type=Path, required=True)
    _render_flags(p, required_ckpt=True)

    p = add("expand", "Pair every clip with every subject")
    _plan_flags(p)

    p = add("substitute", "Replace each clip's subject with a new one")
    p.add_argument("--subjects", type=Path, required=True, help="JSON list of new subjects")
    _plan_flags(p)

    p = add("inject", "Render new actions from external skeleton files")
    p.add_argument(
        "--skeletons", type=Path, required=True, help="Directory with one folder per label"
    )
    p.add_argument("--labels", type=_csv, required=True, help="Comma-separated new labels")
    p.add_argument("--count", type=int, help="Clips per subject and action")
    _plan_flags(p)

    p = add("augment", "Perspective-transform skeletons over pool backgrounds")
    p.add_argument("--jitter", type=float, help="Corner displacement bound in [0, 0.25]")
    p.add_argument("--base-jobs", type=Path, help="Plan to augment (default: original clips)")
    _plan_flags(p)

    p = add("generate", "Render trajectory-GAN samples with subjects round-robin")
    p.add_argument("--per-label", type=int, required=True)
    _plan_flags(p)

    p = add("eval", "Score a trajectory or frame checkpoint")
    p.add_argument("target", choices=["traj", "frames"])
    p.add_argument("--ckpt", type=Path, required=True)
    p.add_argument("--corpus", "--manifest", type=Path, required=True, dest="manifest")
    p.add_argument("--report", type=Path, required=True)
    p.add_argument("--samples", type=int, help="Generated samples per label")

    add("gradcheck", "Finite-difference check of every primitive and network")

    p = add("toy-corpus", "Write a procedural stick-figure corpus")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--labels", type=int, default=2)
    p.add_argument("--per-label", type=int, default=100)
    p.add_argument("--subjects", type=int, default=4)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--no-frames", action="store_true", help="Skeletons and manifest only")
    return parser


def _render_flags(p: argparse.ArgumentParser, required_ckpt: bool) -> None:
    p.add_argument("--out", type=Path, help="Output directory (default: paths.output_dir)")
    p.add_argument("--ckpt", type=Path, required=required_ckpt, help="Frame checkpoint")
    p.add_argument("--traj-ckpt", type=Path, help="Trajectory checkpoint for generated skeletons")
    p.add_argument("--workers", type=int)
    p.add_argument("--grayscale-prob", type=float, dest="grayscale_prob")


def _plan_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--manifest", type=Path, required=True)
    _render_flags(p, required_ckpt=False)
    p.add_argument("--dry-run", action="store_true", help="Write the job plan without rendering")
    p.add_argument("--exclude-subjects", type=_csv, default=[])
    p.add_argument("--exclude-clips", type=_csv, default=[])


# Commands


def _checkpoint_out(args: argparse.Namespace, config: Config, name: str) -> Path:
    out = args.out or Path(config.paths.checkpoints_dir) / name
    out.parent.mkdir(parents=True, exist_ok=True)
    return out


def _output_dir(args: argparse.Namespace, config: Config) -> Path:
    return args.out or Path(config.paths.output_dir)


def cmd_train_traj(args: argparse.Namespace, config: Config) -> int:
    manifest = load_manifest(args.manifest)
    examples, names = examples_from_manifest(manifest)
    if args.labels is not None and args.labels != len(names):
        raise ValueError(f"--labels {args.labels} but the manifest has {len(names)} labels")
    agent = TrajectoryAgent(config.trajectory, len(names), config.seed, names)
    out = _checkpoint_out(args, config, "trajectory.ckpt")
    summary = agent.train(examples, steps=args.steps, checkpoint_path=out)
    print(f"Trained {summary.steps} steps -> {summary.checkpoint}")
    return EXIT_OK


def cmd_sample_traj(args: argparse.Namespace, config: Config) -> int:
    agent = TrajectoryAgent.load(args.ckpt)
    label = int(args.label) if args.label.isdigit() else agent.label_names.index(args.label)
    size = config.frames.size
    for i, seq in enumerate(agent.sample(label, args.count, config.seed)):
        save_skeleton_sequence(
            args.out / f"{agent.label_names[label]}_{i:04d}.json", seq, size, size
        )
    print(f"{args.count} samples -> {args.out}")
    return EXIT_OK


def cmd_train_frames(args: argparse.Namespace, config: Config) -> int:
    frames = config.frames
    overrides = {
        key: getattr(args, key)
        for key in ("size", "k", "lambda_l1", "beta_regional")
        if getattr(args, key) is not None
    }
    if overrides:
        frames = frames.model_validate({**frames.model_dump(), **overrides})
    manifest = load_manifest(args.manifest)
    agent = CompositorAgent(frames, config.seed)
    out = _checkpoint_out(args, config, "frames.ckpt")
    summary = agent.train(manifest, steps=args.steps, checkpoint_path=out)
    print(f"Trained {summary.steps} steps -> {summary.checkpoint}")
    return EXIT_OK


def _execute(
    args: argparse.Namespace, config: Config, manifest: ClipManifest, jobs: List[SynthesisJob]
) -> int:
    agent = SynthesisAgent(config.synthesis, manifest, args.ckpt, args.traj_ckpt, config.seed)
    stats = agent.run(jobs, _output_dir(args, config), args.workers, args.grayscale_prob)
    print(
        f"{stats['success']} rendered, {stats['skipped']} skipped, {stats['failed']} failed"
    )
    return EXIT_OK if stats["failed"] == 0 else EXIT_FAILURE


def cmd_render(args: argparse.Namespace, config: Config) -> int:
    manifest = load_manifest(args.manifest)
    return _execute(args, config, manifest, load_jobs(args.jobs))


def _load_new_subjects(path: Path) -> List[SubjectRecord]:
    """Subjects from a JSON list (or ``{"subjects": [...]}``); paths resolve against the file."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    items = data["subjects"] if isinstance(data, dict) else data
    records = [SubjectRecord.model_validate(s) for s in items]
    base = Path(path).resolve().parent
    for record in records:
        for ref in record.reference_frames:
            ref.image = str(base / ref.image)
            ref.skeleton_file = str(base / ref.skeleton_file)
    return records


def _plan(args: argparse.Namespace, config: Config, manifest: ClipManifest) -> List[SynthesisJob]:
    excludes = {"exclude_subjects": args.exclude_subjects}
    if args.command == "expand":
        return expand_dataset(manifest, exclude_clips=args.exclude_clips, **excludes)
    if args.command == "substitute":
        new = _load_new_subjects(args.subjects)
        manifest.subjects.extend(new)
        return substitute_subjects(
            manifest, [s.subject_id for s in new], exclude_clips=args.exclude_clips, **excludes
        )
    if args.command == "inject":
        root = args.skeletons.resolve()
        files = {label: sorted((root / label).glob("*.json")) for label in args.labels}
        count = config.synthesis.inject_count if args.count is None else args.count
        return inject_new_actions(files, manifest, count, config.seed, **excludes)
    if args.command == "augment":
        if args.base_jobs:
            base = load_jobs(args.base_jobs)
        else:
            base = [
                job
                for job in expand_dataset(manifest, exclude_clips=args.exclude_clips, **excludes)
                if job.subject_id == manifest.clip(job.source.clip_id or "").subject_id
            ]
        jitter = config.synthesis.jitter if args.jitter is None else args.jitter
        return perspective_augment(base, manifest, config.seed, jitter)
    if args.command == "generate":
        if args.traj_ckpt is None:
            raise ValueError("generate needs --traj-ckpt")
        names = TrajectoryAgent.load(args.traj_ckpt).label_names
        return plan_generated_jobs(manifest, names, args.per_label, config.seed, **excludes)
    raise ValueError(f"Not a planning command: {args.command}")


def cmd_plan(args: argparse.Namespace, config: Config) -> int:
    manifest = load_manifest(args.manifest)
    jobs = _plan(args, config, manifest)
    save_jobs(_output_dir(args, config) / JOBS_FILE, jobs)
    print(f"{len(jobs)} jobs")
    if args.dry_run:
        return EXIT_OK
    if args.ckpt is None:
        raise ValueError(f"{args.command} needs --ckpt to render (or --dry-run to only plan)")
    return _execute(args, config, manifest, jobs)


def cmd_eval(args: argparse.Namespace, config: Config) -> int:
    evaluator = EvaluationAgent(config.evaluation, config.seed)
    if args.target == "traj":
        manifest = load_manifest(args.manifest, check_files=False)
        examples, _ = examples_from_manifest(manifest)
        report = evaluator.evaluate_trajectories(
            TrajectoryAgent.load(args.ckpt), examples, args.samples
        )
    else:
        manifest = load_manifest(args.manifest)
        report = evaluator.evaluate_frames(CompositorAgent.load(args.ckpt), manifest)
    args.report.parent.mkdir(parents=True, exist_ok=True)
    args.report.write_text(report.model_dump_json(indent=2, exclude_none=True), encoding="utf-8")
    print(report.model_dump_json(exclude_none=True))
    return EXIT_OK


def cmd_gradcheck(args: argparse.Namespace, config: Config) -> int:
    results = run_gradcheck_suite(config.seed)
    failed = [r for r in results if not r.passed]
    for r in results:
        print(f"{'ok  ' if r.passed else 'FAIL'} {r.name:<26} {r.max_rel_error:.2e}")
    print(f"{len(results) - len(failed)}/{len(results)} passed")
    return EXIT_OK if not failed else EXIT_FAILURE


def cmd_toy_corpus(args: argparse.Namespace, config: Config) -> int:
    spec = ToyCorpusSpec(
        num_labels=args.labels,
        per_label=args.per_label,
        subjects=args.subjects,
        size=args.size,
        seed=config.seed,
    )
    manifest = CorpusAgent(spec).write(args.out, render_frames=not args.no_frames)
    print(f"{len(manifest.clips)} clips -> {args.out / 'manifest.json'}")
    return EXIT_OK


COMMANDS: Dict[str, Callable[[argparse.Namespace, Config], int]] = {
    "train-traj": cmd_train_traj,
    "sample-traj": cmd_sample_traj,
    "train-frames": cmd_train_frames,
    "render": cmd_render,
    "expand": cmd_plan,
    "substitute": cmd_plan,
    "inject": cmd_plan,
    "augment": cmd_plan,
    "generate": cmd_plan,
    "eval": cmd_eval,
    "gradcheck": cmd_gradcheck,
    "toy-corpus": cmd_toy_corpus,
}


def cli_dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command; returns 0 on success, 1 on failure, 2 on a usage error."""
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE

    try:
        config = load_config(resolve_config_path(args.config))
    except (FileNotFoundError, ValueError) as e:
        print(f"Error loading config: {e}", file=sys.stderr)
        return EXIT_USAGE
    if args.seed is not None:
        config.seed = args.seed
    if args.verbose:
        config.logging.level = "DEBUG"

    setup_logging(
        log_file=Path(config.logging.file),
        level=config.logging.level,
        max_size_mb=config.logging.max_size_mb,
        backup_count=config.logging.backup_count,
        console=config.logging.console,
    )

    try:
        return COMMANDS[args.command](args, config)
    except Exception as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_FAILURE


def main() -> None:
    sys.exit(cli_dispatch())


if __name__ == "__main__":
    main()
