"""Command-line front end: train / eval / presets / generate.

Each run writes CSV artifacts plus one manifest.json holding the effective
config, the seed, and content hashes of every output, which is enough to
reproduce the run bit for bit.
"""

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .algorithms import StepSchedule
from .errors import TrainingError
from .evaluation import EvalConfig, VariantSpec, baseline_variants, evaluate
from .experiment import (RNG_EVAL, RNG_GENERATE, RNG_LIPSCHITZ, RNG_TRAIN,
                         ExperimentSpec, SpecError, desk_scale, parse_spec_file,
                         spec_to_text, subsystem_rng, write_manifest)
from .presets import PRESET_NAMES, all_presets, make_preset
from .problem import average_lipschitz, generate_problem, save_problem
from .training import incremental_train


def _resolve_spec(spec_arg: str, args) -> ExperimentSpec:
    """A spec argument is either one of the preset names or a spec-file path."""
    if spec_arg in PRESET_NAMES:
        spec = make_preset(spec_arg)
    elif Path(spec_arg).exists():
        spec = parse_spec_file(spec_arg)
    else:
        raise SpecError(f"{spec_arg!r} is neither a preset name {PRESET_NAMES} "
                        f"nor an existing spec file")
    if getattr(args, "seed", None) is not None:
        spec = replace(spec, seed=args.seed,
                       problem=replace(spec.problem, seed=args.seed))
    if getattr(args, "desk_scale", False):
        spec = desk_scale(spec)
    return spec


def _write_effective(spec: ExperimentSpec, outdir: Path) -> None:
    (outdir / "effective.ini").write_text(spec_to_text(spec))


def cmd_train(args) -> int:
    spec = _resolve_spec(args.spec, args)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    l_est = average_lipschitz(spec.problem, k=spec.lipschitz_matrices,
                              rng=subsystem_rng(spec.seed, RNG_LIPSCHITZ))
    print(f"lipschitz: L_avg={l_est.l_avg:.6f} over {l_est.k_matrices} matrices "
          f"(init step {1.0 / l_est.l_avg:.6f})", flush=True)
    try:
        schedule, log = incremental_train(spec.train_config(), spec.problem, l_est,
                                          rng=subsystem_rng(spec.seed, RNG_TRAIN))
    except TrainingError as exc:
        if exc.log is not None:
            exc.log.save(outdir / "trainlog.csv")
            exc.log.final_schedule.save(outdir / "schedule.partial.csv")
        print(f"error: {exc}", file=sys.stderr)
        return 1
    schedule.save(outdir / "schedule.csv")
    log.save(outdir / "trainlog.csv")
    _write_effective(spec, outdir)
    write_manifest(outdir, spec, "train",
                   extra={"lipschitz": {"l_avg": l_est.l_avg,
                                        "k_matrices": l_est.k_matrices},
                          "divergences": len(log.divergences)})
    final = log.records[-1].loss if log.records else float("nan")
    print(f"trained {spec.label}: {len(schedule)} step sizes, "
          f"{len(log.records)} updates, final loss {final!r}", flush=True)
    print(f"wrote {outdir / 'schedule.csv'}", flush=True)
    return 0


def _labels_for(paths) -> list:
    """Unique labels for schedule files. A generic schedule.csv is labeled by
    its run directory; collisions get a parent prefix, then a counter."""
    labels = []
    for path in paths:
        path = Path(path)
        label = path.stem
        if label == "schedule" and path.parent.name:
            label = path.parent.name
        if label in labels:
            label = f"{path.parent.name}-{path.stem}"
        k = 2
        base = label
        while label in labels:
            label = f"{base}-{k}"
            k += 1
        labels.append(label)
    return labels


def cmd_eval(args) -> int:
    spec = _resolve_spec(args.spec, args)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    reg = spec.regularizer()
    l_est = average_lipschitz(spec.problem, k=spec.lipschitz_matrices,
                              rng=subsystem_rng(spec.seed, RNG_LIPSCHITZ))
    variants = baseline_variants(l_est, spec.t_steps, reg)
    labels = _labels_for(args.schedules)
    for path, label in zip(args.schedules, labels):
        try:
            schedule = StepSchedule.load(path)
        except OSError as exc:
            print(f"error: cannot read schedule {path}: {exc}", file=sys.stderr)
            return 2
        if len(schedule) < spec.t_steps:
            print(f"error: schedule {path} has {len(schedule)} entries, "
                  f"needs >= t_steps={spec.t_steps}", file=sys.stderr)
            return 2
        variants.append(VariantSpec(label, schedule, reg))
    config = EvalConfig(variants=variants, n_matrices=spec.n_matrices,
                        n_signals_per_matrix=spec.n_signals_per_matrix,
                        t_steps=spec.t_steps, seed=spec.seed)
    report = evaluate(config, spec.problem,
                      rng=subsystem_rng(spec.seed, RNG_EVAL), threads=args.threads)
    report.save_panels(outdir)
    _write_effective(spec, outdir)
    write_manifest(outdir, spec, "eval",
                   extra={"lipschitz": {"l_avg": l_est.l_avg,
                                        "k_matrices": l_est.k_matrices},
                          "variants": [{"label": v.label,
                                        "divergences": v.divergences,
                                        "n_averaged": v.n_averaged}
                                       for v in report.variants]})
    for v in report.variants:
        print(f"{v.label}: final mse {v.mean_mse_db[-1]:.3f} dB, "
              f"final objective {v.mean_objective[-1]:.6f}, "
              f"{v.divergences} divergent runs", flush=True)
    print(f"wrote panels to {outdir}", flush=True)
    return 0


def cmd_presets(args) -> int:
    for spec in all_presets():
        print(f"# preset: {spec.label}")
        print(spec_to_text(spec))
    if args.write is not None:
        outdir = Path(args.write)
        outdir.mkdir(parents=True, exist_ok=True)
        for spec in all_presets():
            (outdir / f"{spec.label}.ini").write_text(spec_to_text(spec))
        print(f"# wrote {len(PRESET_NAMES)} spec files to {outdir}")
    return 0


def cmd_generate(args) -> int:
    spec = _resolve_spec(args.spec, args)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    rng = subsystem_rng(spec.seed, RNG_GENERATE)
    for i in range(args.count):
        item = generate_problem(spec.problem, rng)
        save_problem(item, outdir / f"problem_{i:04d}.csv")
    _write_effective(spec, outdir)
    write_manifest(outdir, spec, "generate", extra={"count": args.count})
    print(f"wrote {args.count} instances to {outdir}", flush=True)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="proxunfold",
        description="Train and evaluate per-iteration step-size schedules "
                    "for ISTA/IHT sparse recovery.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, threads=False):
        p.add_argument("--seed", type=int, default=None,
                       help="override the spec's experiment seed")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--desk-scale", action="store_true",
                       help="shrink to the fast geometry (n=100, m=70, 30 layers)")
        if threads:
            p.add_argument("--threads", type=int, default=1,
                           help="evaluation threads (results are thread-count invariant)")

    p_train = sub.add_parser("train", help="train a step schedule from a spec or preset")
    p_train.add_argument("spec", help=f"spec file path or preset name {PRESET_NAMES}")
    common(p_train)
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate baselines plus learned schedules")
    p_eval.add_argument("spec", help=f"spec file path or preset name {PRESET_NAMES}")
    p_eval.add_argument("schedules", nargs="*",
                        help="learned schedule CSV files (t,alpha)")
    common(p_eval, threads=True)
    p_eval.set_defaults(func=cmd_eval)

    p_presets = sub.add_parser("presets", help="print the four built-in presets")
    p_presets.add_argument("--write", default=None, metavar="DIR",
                           help="also write each preset as a spec file")
    p_presets.set_defaults(func=cmd_presets)

    p_gen = sub.add_parser("generate", help="dump problem instances as CSV fixtures")
    p_gen.add_argument("spec", help=f"spec file path or preset name {PRESET_NAMES}")
    p_gen.add_argument("--count", type=int, default=1, help="number of instances")
    common(p_gen)
    p_gen.set_defaults(func=cmd_generate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
