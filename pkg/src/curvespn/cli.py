"""Command-line entry point: analyze, evaluate, gen-dataset, reconstruct."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from PIL import Image

from .config import Config, tomllib
from .errors import AnalysisError, ChartInputError, CurveSpnError

EXIT_OK, EXIT_INPUT, EXIT_ANALYSIS = 0, 1, 2

log = logging.getLogger("curvespn")


def _config(args) -> Config:
    cfg = Config.load(args.config) if getattr(args, "config", None) else Config()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "merge_mode", None):
        overrides["merge_mode"] = args.merge_mode
    return Config.from_dict({**cfg.to_dict(), **overrides}) if overrides else cfg


def cmd_analyze(args) -> int:
    from .pipeline import analyze, run_bundle

    desc = analyze(args.image, args.axis, _config(args))
    files = run_bundle(desc, args.output)
    st = desc.stage
    print(f"{len(desc.curves)} curve(s), {sum(len(s) for s in st.segments.values())} segment(s), "
          f"{len(st.sentences)} sentence(s); SSIM {desc.stage_ssim():.4f}")
    for name in files:
        print(Path(args.output) / name)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    from .evaluation import evaluate_corpus

    modes = tuple(args.modes.split(","))
    report = evaluate_corpus(args.dataset, modes, _config(args), workers=args.workers)
    report.write_csv(args.output)
    for s in report.stats():
        print(f"{s.cls:12s} {s.mode}  n={s.n:3d}  mean={s.mean_ssim:.4f}  std={s.std:.4f}  failures={s.failures}")
    return EXIT_OK


def _read_doc(path: str) -> dict:
    p = Path(path)
    try:
        if p.suffix == ".toml":
            with open(p, "rb") as fh:
                return tomllib.load(fh)
        return json.loads(p.read_text())
    except FileNotFoundError as exc:
        raise ChartInputError(f"no such file: {p}") from exc
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ChartInputError(f"malformed dataset spec {p}: {exc}") from exc


def cmd_gen_dataset(args) -> int:
    from .dataset import generate_dataset

    doc = _read_doc(args.spec)
    classes = doc.get("classes")
    if not isinstance(classes, dict) or not classes:
        raise ChartInputError("dataset spec needs a non-empty 'classes' table (name -> count)")
    try:
        paths = generate_dataset(args.output, {str(k): int(v) for k, v in classes.items()}, int(doc.get("seed", 0)))
    except ValueError as exc:
        raise ChartInputError(str(exc)) from exc
    print(f"{len(paths)} chart(s) written to {args.output}")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    from .spn import SpnError, SpnGraph, reconstruct_curves

    try:
        text = Path(args.spn).read_text(encoding="utf-8")
    except OSError as exc:
        raise ChartInputError(f"cannot read {args.spn}: {exc}") from exc
    try:
        net = SpnGraph.from_json(text)
    except SpnError as exc:
        raise ChartInputError(str(exc)) from exc
    try:
        img = reconstruct_curves(net)
    except SpnError as exc:
        raise AnalysisError(str(exc), stage="spn") from exc
    Image.fromarray(img).save(args.output, format="PNG")
    print(args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="curvespn", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="analyze one chart image and write the output bundle")
    a.add_argument("image")
    a.add_argument("--axis", help="axis sidecar JSON")
    a.add_argument("--config", help="TOML configuration file")
    a.add_argument("--seed", type=int)
    a.add_argument("--merge-mode", choices=("rule2", "rule3"))
    a.add_argument("-o", "--output", required=True, help="output directory")
    a.set_defaults(func=cmd_analyze)

    e = sub.add_parser("evaluate", help="score a generated dataset with SSIM")
    e.add_argument("dataset")
    e.add_argument("-o", "--output", required=True, help="report CSV")
    e.add_argument("--config")
    e.add_argument("--modes", default="rule2,rule3")
    e.add_argument("--workers", type=int, default=1)
    e.set_defaults(func=cmd_evaluate)

    g = sub.add_parser("gen-dataset", help="generate a synthetic chart corpus")
    g.add_argument("spec", help="JSON or TOML file: {seed, classes: {name: count}}")
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_gen_dataset)

    r = sub.add_parser("reconstruct", help="redraw curves from an spn.json")
    r.add_argument("spn")
    r.add_argument("-o", "--output", required=True, help="output PNG")
    r.set_defaults(func=cmd_reconstruct)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except AnalysisError as exc:
        print(f"analysis error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS
    except (ChartInputError, OSError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CurveSpnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS


if __name__ == "__main__":
    sys.exit(main())
