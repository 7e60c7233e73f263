"""Tests for the command-line interface."""
import json

import numpy as np
import pytest
import yaml
from loguru import logger

from src.main import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, build_parser, cli_dispatch
from src.schemas.models import ClipManifest, GradCheckResult
from src.skeleton.skeleton import SkeletonSequence
from src.utils.image_io import save_image
from src.utils.manifest_io import load_jobs, save_manifest
from src.utils.skeleton_io import save_skeleton_sequence


@pytest.fixture(autouse=True)
def workdir(tmp_path, monkeypatch):
    """Run every command from a scratch directory; drop log sinks afterwards."""
    monkeypatch.chdir(tmp_path)
    yield tmp_path
    logger.remove()


@pytest.fixture
def tiny_config(tmp_path, tiny_traj_config, tiny_frames_config):
    """YAML config with the tiny networks and console logging off."""
    path = tmp_path / "tiny.yaml"
    data = {
        "logging": {"console": False},
        "trajectory": tiny_traj_config.model_dump(mode="json"),
        "frames": tiny_frames_config.model_dump(mode="json"),
        "evaluation": {"samples_per_label": 4},
    }
    path.write_text(yaml.safe_dump(data))
    return path


def write_planning_manifest(root, standing, num_clips, performers, extra_subjects=0):
    """Skeleton-only manifest on disk whose clips share one skeleton file."""
    seq = SkeletonSequence([standing] * 4)
    save_skeleton_sequence(root / "skeletons" / "shared.json", seq, 16, 16)
    save_image(root / "bg.png", np.full((16, 16, 3), 0.5))
    performer_ids = [f"p{i:02d}" for i in range(performers)]
    extra_ids = [f"n{i:02d}" for i in range(extra_subjects)]
    manifest = ClipManifest.model_validate(
        {
            "clips": [
                {
                    "clip_id": f"clip{i:04d}",
                    "action_label": f"action{i % 8}",
                    "subject_id": performer_ids[i % performers],
                    "skeleton_file": "skeletons/shared.json",
                    "background": "bg.png",
                }
                for i in range(num_clips)
            ],
            "subjects": [{"subject_id": s} for s in performer_ids + extra_ids],
            "backgrounds": ["bg.png"],
        }
    )
    path = root / "manifest.json"
    save_manifest(path, manifest)
    return path


class TestUsage:
    """Test argument handling and exit codes."""

    def test_no_arguments(self, capsys):
        """Test a bare invocation prints usage."""
        assert cli_dispatch([]) == EXIT_USAGE
        assert "usage" in capsys.readouterr().err

    def test_unknown_command(self):
        """Test an unknown command is a usage error."""
        assert cli_dispatch(["fly"]) == EXIT_USAGE

    def test_missing_required_flag(self):
        """Test a command without its required flags."""
        assert cli_dispatch(["train-traj"]) == EXIT_USAGE

    def test_help(self):
        """Test --help exits cleanly."""
        assert cli_dispatch(["--help"]) == EXIT_OK

    def test_missing_config(self, capsys):
        """Test an explicit config file that does not exist."""
        assert cli_dispatch(["--config", "absent.yaml", "gradcheck"]) == EXIT_USAGE
        assert "Config file not found" in capsys.readouterr().err

    def test_invalid_config(self, workdir, capsys):
        """Test a config that fails validation."""
        (workdir / "bad.yaml").write_text("synthesis:\n  jitter: 0.5\n")
        assert cli_dispatch(["--config", "bad.yaml", "gradcheck"]) == EXIT_USAGE
        assert "Invalid configuration" in capsys.readouterr().err

    def test_missing_manifest(self):
        """Test a command failure is exit code 1."""
        assert cli_dispatch(["expand", "--manifest", "absent.json", "--dry-run"]) == EXIT_FAILURE

    def test_logs_to_default_file(self, workdir):
        """Test the default log file under ./logs."""
        cli_dispatch(["toy-corpus", "--out", "c", "--per-label", "1", "--no-frames"])
        logger.remove()
        assert "Toy corpus manifest" in (workdir / "logs" / "action_synth.log").read_text()


class TestCommandLines:
    """Test the documented command lines parse, with global flags after the command."""

    def test_train_traj_flags(self):
        """Test train-traj with --labels and a trailing --seed."""
        args = build_parser().parse_args(
            ["train-traj", "--manifest", "x.json", "--labels", "2"]
            + ["--steps", "1", "--seed", "3", "--out", "c.ck"]
        )
        assert (args.labels, args.steps, args.seed, args.out.name) == (2, 1, 3, "c.ck")

    def test_sample_traj_flags(self):
        """Test sample-traj with a trailing --seed."""
        args = build_parser().parse_args(
            ["sample-traj", "--ckpt", "c.ck", "--label", "0", "--count", "2"]
            + ["--seed", "1", "--out", "s"]
        )
        assert (args.label, args.count, args.seed) == ("0", 2, 1)

    def test_train_frames_flags(self):
        """Test train-frames with --size, --lambda and --beta."""
        args = build_parser().parse_args(
            ["train-frames", "--manifest", "x.json", "--size", "64", "--k", "4"]
            + ["--lambda", "10", "--beta", "100", "--steps", "5", "--seed", "2", "--out", "f.ck"]
        )
        assert (args.size, args.k, args.lambda_l1, args.beta_regional) == (64, 4, 10.0, 100.0)
        assert args.seed == 2

    def test_long_weight_spellings(self):
        """Test the long loss-weight flags still parse."""
        args = build_parser().parse_args(
            ["train-frames", "--manifest", "x.json", "--lambda-l1", "1", "--beta-regional", "2"]
        )
        assert (args.lambda_l1, args.beta_regional) == (1.0, 2.0)

    def test_global_flags_before_command(self):
        """Test --seed and --verbose before the command name."""
        args = build_parser().parse_args(["--seed", "5", "--verbose", "gradcheck"])
        assert args.seed == 5 and args.verbose

    def test_global_flags_default(self):
        """Test global flags are unset when not given."""
        args = build_parser().parse_args(["gradcheck"])
        assert args.seed is None and args.config is None and args.verbose is False

    def test_trailing_seed_reaches_command(self, mocker):
        """Test --seed after the command name overrides the config seed."""
        suite = mocker.patch("src.main.run_gradcheck_suite", return_value=[])
        cli_dispatch(["gradcheck", "--seed", "9"])
        suite.assert_called_once_with(9)

    def test_labels_checked_against_manifest(self, workdir, tiny_config):
        """Test a --labels count that disagrees with the manifest fails."""
        cfg = ["--config", str(tiny_config)]
        corpus = ["toy-corpus", "--out", "c", "--per-label", "2", "--subjects", "2", "--size", "16"]
        assert cli_dispatch(cfg + corpus + ["--no-frames"]) == EXIT_OK
        argv = ["train-traj", "--manifest", "c/manifest.json", "--steps", "1", "--out", "t.ck"]
        assert cli_dispatch(cfg + argv + ["--labels", "3"]) == EXIT_FAILURE
        assert not (workdir / "t.ck").exists()
        assert cli_dispatch(cfg + argv + ["--labels", "2", "--seed", "4"]) == EXIT_OK
        assert (workdir / "t.ck").exists()


class TestGradcheckCommand:
    """Test the gradcheck command's exit status."""

    def test_all_pass(self, mocker, capsys):
        """Test a passing suite exits 0."""
        mocker.patch(
            "src.main.run_gradcheck_suite",
            return_value=[
                GradCheckResult(name="mul", max_rel_error=1e-9, tolerance=1e-4, passed=True)
            ],
        )
        assert cli_dispatch(["gradcheck"]) == EXIT_OK
        assert "1/1 passed" in capsys.readouterr().out

    def test_failure(self, mocker, capsys):
        """Test a failing case exits 1."""
        mocker.patch(
            "src.main.run_gradcheck_suite",
            return_value=[
                GradCheckResult(name="mul", max_rel_error=1e-9, tolerance=1e-4, passed=True),
                GradCheckResult(name="conv2d", max_rel_error=0.3, tolerance=1e-4, passed=False),
            ],
        )
        assert cli_dispatch(["gradcheck"]) == EXIT_FAILURE
        out = capsys.readouterr().out
        assert "FAIL conv2d" in out
        assert "1/2 passed" in out

    def test_seed_flag(self, mocker):
        """Test --seed reaches the suite."""
        suite = mocker.patch("src.main.run_gradcheck_suite", return_value=[])
        cli_dispatch(["--seed", "7", "gradcheck"])
        suite.assert_called_once_with(7)


class TestPlanningCommands:
    """Test dry-run planning from the command line."""

    def test_expand_counts(self, workdir, standing, capsys):
        """Test 283 clips over 21 subjects plan 5943 jobs."""
        manifest = write_planning_manifest(workdir, standing, 283, 21)
        code = cli_dispatch(["expand", "--manifest", str(manifest), "--out", "plan", "--dry-run"])
        assert code == EXIT_OK
        assert "5943 jobs" in capsys.readouterr().out
        assert len(load_jobs(workdir / "plan" / "jobs.json")) == 5943

    def test_expand_exclusions(self, workdir, standing, capsys):
        """Test excluded subjects and clips drop out of the plan."""
        manifest = write_planning_manifest(workdir, standing, 4, 2)
        argv = ["expand", "--manifest", str(manifest), "--out", "plan", "--dry-run"]
        assert cli_dispatch(argv + ["--exclude-clips", "clip0000,clip0001"]) == EXIT_OK
        assert "4 jobs" in capsys.readouterr().out

    def test_substitute(self, workdir, standing, capsys):
        """Test replacement subjects read from a JSON list."""
        manifest = write_planning_manifest(workdir, standing, 3, 2)
        (workdir / "new.json").write_text(json.dumps([{"subject_id": "newcomer"}]))
        argv = ["substitute", "--manifest", str(manifest), "--subjects", "new.json"]
        assert cli_dispatch(argv + ["--out", "plan", "--dry-run"]) == EXIT_OK
        assert "3 jobs" in capsys.readouterr().out
        jobs = load_jobs(workdir / "plan" / "jobs.json")
        assert {j.subject_id for j in jobs} == {"newcomer"}

    def test_augment(self, workdir, standing):
        """Test perspective jobs carry a homography per original clip."""
        manifest = write_planning_manifest(workdir, standing, 3, 2)
        argv = ["augment", "--manifest", str(manifest), "--out", "plan", "--dry-run"]
        assert cli_dispatch(argv + ["--jitter", "0.1"]) == EXIT_OK
        jobs = load_jobs(workdir / "plan" / "jobs.json")
        assert len(jobs) == 3
        assert all(j.source.homography is not None for j in jobs)

    def test_render_needs_checkpoint(self, workdir, standing):
        """Test planning without --dry-run needs a frame checkpoint."""
        manifest = write_planning_manifest(workdir, standing, 2, 1)
        argv = ["expand", "--manifest", str(manifest), "--out", "plan"]
        assert cli_dispatch(argv) == EXIT_FAILURE
        assert (workdir / "plan" / "jobs.json").exists()


class TestToyCorpusCommand:
    """Test writing a toy corpus from the command line."""

    def test_writes_manifest(self, workdir, capsys):
        """Test the requested corpus size."""
        argv = ["toy-corpus", "--out", "c", "--labels", "3", "--per-label", "2"]
        assert cli_dispatch(argv + ["--subjects", "2", "--size", "16", "--no-frames"]) == EXIT_OK
        assert "6 clips" in capsys.readouterr().out
        data = json.loads((workdir / "c" / "manifest.json").read_text())
        assert data["labels"] == ["sine-wave", "static", "drift"]

    def test_invalid_corpus_settings(self):
        """Test corpus settings pydantic rejects."""
        assert cli_dispatch(["toy-corpus", "--out", "c", "--labels", "1"]) == EXIT_FAILURE


class TestPipeline:
    """Test training, rendering and evaluation end to end on tiny networks."""

    def test_end_to_end(self, workdir, tiny_config, capsys):
        """Test every stage runs from the command line."""
        cfg = ["--config", str(tiny_config)]
        corpus = ["--manifest", "c/manifest.json"]
        frames = ["--ckpt", "ck/frames.ckpt"]
        steps = [
            ["toy-corpus", "--out", "c", "--per-label", "4", "--subjects", "2", "--size", "16"],
            ["train-traj", *corpus, "--out", "ck/traj.ckpt", "--steps", "2"],
            ["train-frames", *corpus, "--out", "ck/frames.ckpt", "--steps", "1"],
            ["expand", *corpus, *frames, "--out", "out"],
            ["render", *corpus, *frames, "--jobs", "out/jobs.json", "--out", "out"],
            ["sample-traj", "--ckpt", "ck/traj.ckpt", "--label", "static", "--count", "2"]
            + ["--out", "s"],
            ["eval", "traj", "--ckpt", "ck/traj.ckpt", *corpus, "--report", "r/traj.json"],
            ["eval", "frames", "--ckpt", "ck/frames.ckpt", *corpus, "--report", "r/frames.json"],
        ]
        for argv in steps:
            assert cli_dispatch(cfg + argv) == EXIT_OK, argv[0]

        out = capsys.readouterr().out
        assert "16 rendered, 0 skipped, 0 failed" in out
        assert "0 rendered, 16 skipped, 0 failed" in out
        assert sorted(p.name for p in (workdir / "s").iterdir()) == [
            "static_0000.json",
            "static_0001.json",
        ]
        assert "tstr" in json.loads((workdir / "r" / "traj.json").read_text())
        assert "regional_l1" in json.loads((workdir / "r" / "frames.json").read_text())
