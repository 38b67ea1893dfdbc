"""Experiment spec files: flat INI with [experiment]/[problem]/[train]/[eval].

Every key in the schema is required and unknown keys or sections are hard
errors, both reported with file and line anchors; hyperparameter typos must
not silently fall back to defaults. The effective spec can be written back
out and re-read to reproduce a run exactly.
"""

import configparser
import hashlib
import json
import math
import re
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .algorithms import Regularizer
from .problem import ProblemConfig
from .training import TrainConfig
from .unfold import LOSS_KINDS

ALGORITHMS = ("ista", "iht")

# Disjoint RNG streams per pipeline phase, all derived from one experiment
# seed; reruns of any phase see the same stream regardless of the others.
RNG_LIPSCHITZ = 1
RNG_TRAIN = 2
RNG_EVAL = 3
RNG_GENERATE = 4


def subsystem_rng(seed: int, subsystem: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(seed, spawn_key=(subsystem,))))

# section -> key -> converter name
_SCHEMA = {
    "experiment": {"label": "str", "seed": "int", "lipschitz_matrices": "int"},
    "problem": {"n": "int", "m": "int", "p": "float", "snr_db": "float"},
    "train": {"algorithm": "algorithm", "loss": "loss", "lambda": "float",
              "epsilon_guard": "float", "lr": "float", "t_max": "int",
              "updates_per_stage": "int", "batch_size": "int",
              "resample_matrix": "bool"},
    "eval": {"n_matrices": "int", "n_signals_per_matrix": "int", "t_steps": "int"},
}

_BOOL_WORDS = {"true": True, "yes": True, "on": True, "1": True,
               "false": False, "no": False, "off": False, "0": False}


class SpecError(ValueError):
    """An experiment spec file failed to parse or validate."""


@dataclass(frozen=True)
class ExperimentSpec:
    """Validated contents of one spec file."""

    label: str
    seed: int
    lipschitz_matrices: int
    problem: ProblemConfig
    algorithm: str
    loss_kind: str
    lam: float
    epsilon_guard: float
    lr: float
    t_max: int
    updates_per_stage: int
    batch_size: int
    resample_matrix: bool
    n_matrices: int
    n_signals_per_matrix: int
    t_steps: int

    def regularizer(self) -> Regularizer:
        kind = "l1" if self.algorithm == "ista" else "l0"
        return Regularizer(kind=kind, lam=self.lam, epsilon_guard=self.epsilon_guard)

    def train_config(self) -> TrainConfig:
        return TrainConfig(t_max=self.t_max, updates_per_stage=self.updates_per_stage,
                           batch_size=self.batch_size, lr=self.lr,
                           loss_kind=self.loss_kind, reg=self.regularizer(),
                           resample_matrix=self.resample_matrix, seed=self.seed)


def desk_scale(spec: ExperimentSpec) -> ExperimentSpec:
    """Shrink any spec to the fast CI geometry: n=100, m=70, 30 layers, 20x20 eval."""
    return replace(spec,
                   problem=replace(spec.problem, n=100, m=70),
                   t_max=30, t_steps=30, n_matrices=20, n_signals_per_matrix=20)


def _line_of(text: str, section: str, key: str | None = None) -> int:
    """Best-effort line anchor: the key's line inside the section, else the header."""
    in_section = False
    header = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("["):
            in_section = stripped == f"[{section}]"
            if in_section:
                header = lineno
                if key is None:
                    return lineno
            continue
        if in_section and key is not None and re.match(
                rf"^{re.escape(key)}\s*[=:]", stripped):
            return lineno
    return header


def _convert(kind: str, raw: str, where: str):
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            value = float(raw)
            if math.isnan(value):
                raise ValueError("nan is not a valid value")
            return value
        if kind == "bool":
            if raw.lower() not in _BOOL_WORDS:
                raise ValueError(f"expected a boolean, got {raw!r}")
            return _BOOL_WORDS[raw.lower()]
        if kind == "algorithm":
            if raw not in ALGORITHMS:
                raise ValueError(f"expected one of {ALGORITHMS}, got {raw!r}")
            return raw
        if kind == "loss":
            if raw not in LOSS_KINDS:
                raise ValueError(f"expected one of {LOSS_KINDS}, got {raw!r}")
            return raw
        return raw  # str
    except ValueError as exc:
        raise SpecError(f"{where}: {exc}") from None


def parse_spec_text(text: str, source: str = "<spec>") -> ExperimentSpec:
    parser = configparser.ConfigParser(interpolation=None, default_section="",
                                       strict=True)
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise SpecError(str(exc)) from None
    for section in parser.sections():
        if section not in _SCHEMA:
            raise SpecError(f"{source}:{_line_of(text, section)}: "
                            f"unknown section [{section}]")
    values = {}
    for section, keys in _SCHEMA.items():
        if not parser.has_section(section):
            raise SpecError(f"{source}: missing section [{section}]")
        present = dict(parser.items(section))
        for key in present:
            if key not in keys:
                raise SpecError(f"{source}:{_line_of(text, section, key)}: "
                                f"unknown key {key!r} in [{section}]")
        for key, kind in keys.items():
            if key not in present:
                raise SpecError(f"{source}:{_line_of(text, section)}: "
                                f"[{section}] is missing required key {key!r}")
            where = f"{source}:{_line_of(text, section, key)}: key {key!r} in [{section}]"
            values[(section, key)] = _convert(kind, present[key], where)
    label = values[("experiment", "label")].strip()
    if not label:
        raise SpecError(f"{source}:{_line_of(text, 'experiment', 'label')}: "
                        f"label must be nonempty")
    try:
        problem = ProblemConfig(n=values[("problem", "n")], m=values[("problem", "m")],
                                p=values[("problem", "p")],
                                snr_db=values[("problem", "snr_db")],
                                seed=values[("experiment", "seed")])
        spec = ExperimentSpec(
            label=label,
            seed=values[("experiment", "seed")],
            lipschitz_matrices=values[("experiment", "lipschitz_matrices")],
            problem=problem,
            algorithm=values[("train", "algorithm")],
            loss_kind=values[("train", "loss")],
            lam=values[("train", "lambda")],
            epsilon_guard=values[("train", "epsilon_guard")],
            lr=values[("train", "lr")],
            t_max=values[("train", "t_max")],
            updates_per_stage=values[("train", "updates_per_stage")],
            batch_size=values[("train", "batch_size")],
            resample_matrix=values[("train", "resample_matrix")],
            n_matrices=values[("eval", "n_matrices")],
            n_signals_per_matrix=values[("eval", "n_signals_per_matrix")],
            t_steps=values[("eval", "t_steps")],
        )
        spec.regularizer()
        spec.train_config()
        if spec.lipschitz_matrices < 1:
            raise ValueError(f"lipschitz_matrices must be >= 1, got {spec.lipschitz_matrices}")
        if spec.n_matrices < 1 or spec.n_signals_per_matrix < 1 or spec.t_steps < 1:
            raise ValueError("eval counts and t_steps must be >= 1")
        if spec.t_steps > spec.t_max:
            raise ValueError(f"t_steps={spec.t_steps} exceeds t_max={spec.t_max}; "
                             f"trained schedules would be too short")
    except SpecError:
        raise
    except ValueError as exc:
        raise SpecError(f"{source}: {exc}") from None
    return spec


def parse_spec_file(path) -> ExperimentSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SpecError(f"cannot read spec file {path}: {exc}") from None
    return parse_spec_text(text, source=str(path))


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def spec_to_text(spec: ExperimentSpec) -> str:
    """Serialize a spec so that parsing the text reproduces it exactly."""
    p = spec.problem
    lines = [
        "[experiment]",
        f"label = {spec.label}",
        f"seed = {spec.seed}",
        f"lipschitz_matrices = {spec.lipschitz_matrices}",
        "",
        "[problem]",
        f"n = {p.n}",
        f"m = {p.m}",
        f"p = {_fmt(p.p)}",
        f"snr_db = {_fmt(p.snr_db)}",
        "",
        "[train]",
        f"algorithm = {spec.algorithm}",
        f"loss = {spec.loss_kind}",
        f"lambda = {_fmt(spec.lam)}",
        f"epsilon_guard = {_fmt(spec.epsilon_guard)}",
        f"lr = {_fmt(spec.lr)}",
        f"t_max = {spec.t_max}",
        f"updates_per_stage = {spec.updates_per_stage}",
        f"batch_size = {spec.batch_size}",
        f"resample_matrix = {_fmt(spec.resample_matrix)}",
        "",
        "[eval]",
        f"n_matrices = {spec.n_matrices}",
        f"n_signals_per_matrix = {spec.n_signals_per_matrix}",
        f"t_steps = {spec.t_steps}",
        "",
    ]
    return "\n".join(lines)


def spec_as_dict(spec: ExperimentSpec) -> dict:
    p = spec.problem
    return {
        "experiment": {"label": spec.label, "seed": spec.seed,
                       "lipschitz_matrices": spec.lipschitz_matrices},
        "problem": {"n": p.n, "m": p.m, "p": p.p, "snr_db": p.snr_db},
        "train": {"algorithm": spec.algorithm, "loss": spec.loss_kind,
                  "lambda": spec.lam, "epsilon_guard": spec.epsilon_guard,
                  "lr": spec.lr, "t_max": spec.t_max,
                  "updates_per_stage": spec.updates_per_stage,
                  "batch_size": spec.batch_size,
                  "resample_matrix": spec.resample_matrix},
        "eval": {"n_matrices": spec.n_matrices,
                 "n_signals_per_matrix": spec.n_signals_per_matrix,
                 "t_steps": spec.t_steps},
    }


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(outdir, spec: ExperimentSpec, command: str,
                   extra: dict | None = None) -> Path:
    """Write manifest.json: the effective config, the seed, and content hashes
    of every other file in the output directory. No timestamps; reruns of the
    same spec and seed must produce byte-identical manifests."""
    outdir = Path(outdir)
    outputs = {}
    for f in sorted(outdir.iterdir()):
        if f.is_file() and f.name != "manifest.json":
            outputs[f.name] = file_sha256(f)
    manifest = {"command": command, "seed": spec.seed,
                "config": spec_as_dict(spec), "outputs": outputs}
    if extra:
        manifest.update(extra)
    path = outdir / "manifest.json"
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return path
