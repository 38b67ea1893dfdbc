"""Shared fixtures: one desk-scale benchmark run per session, with timings,
reused across test modules so the expensive part happens once."""

import sys
import time
from pathlib import Path

import pytest

from proxunfold.cli import main as cli_main
from proxunfold.presets import PRESET_NAMES

REPO_ROOT = Path(__file__).resolve().parent.parent
FULL_SCALE_DIR = Path(__file__).resolve().parent / "fixtures" / "full_scale"


@pytest.fixture(scope="session")
def desk_runs(tmp_path_factory):
    """Train all four presets at desk scale through the CLI. Returns
    {"dirs": {preset name: output dir}, "seconds": wall time}. Roughly a
    minute per preset."""
    root = tmp_path_factory.mktemp("desk_runs")
    t0 = time.perf_counter()
    dirs = {}
    for name in PRESET_NAMES:
        outdir = root / name
        rc = cli_main(["train", name, "--desk-scale", "--out", str(outdir)])
        assert rc == 0, f"desk-scale training of {name} failed"
        dirs[name] = outdir
    return {"dirs": dirs, "seconds": time.perf_counter() - t0}


@pytest.fixture(scope="session")
def desk_panels(desk_runs, tmp_path_factory):
    """Evaluate both desk-scale comparison panels (baselines + the two
    learned schedules per algorithm) through the CLI."""
    root = tmp_path_factory.mktemp("desk_panels")
    t0 = time.perf_counter()
    dirs = {}
    for alg in ("ista", "iht"):
        outdir = root / f"eval-{alg}"
        rc = cli_main([
            "eval", f"{alg}-supervised",
            str(desk_runs["dirs"][f"{alg}-supervised"] / "schedule.csv"),
            str(desk_runs["dirs"][f"{alg}-unsupervised"] / "schedule.csv"),
            "--desk-scale", "--out", str(outdir)])
        assert rc == 0, f"desk-scale evaluation of {alg} failed"
        dirs[alg] = outdir
    return {"dirs": dirs, "seconds": time.perf_counter() - t0}


@pytest.fixture
def announce(capsys):
    """Print a PASS/FAIL line straight to the terminal, then assert."""
    def _announce(name: str, ok: bool, detail: str = ""):
        status = "PASS" if ok else "FAIL"
        suffix = f" ({detail})" if detail else ""
        with capsys.disabled():
            print(f"\n[{status}] {name}{suffix}", file=sys.stderr, flush=True)
        assert ok, f"{name}: {detail}"
    return _announce
