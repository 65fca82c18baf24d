"""Command line interface.

Subcommands::

    vofdenoise denoise [CONFIG] [--section.key=value ...]
    vofdenoise suite CONFIG... [--image P ...] [--model M ...] [--looks L ...]
    vofdenoise noise INPUT OUTPUT --looks L [--seed S]
    vofdenoise metrics IMAGE REFERENCE
    vofdenoise config [CONFIG] [--section.key=value ...]
"""

from __future__ import annotations

import argparse
import itertools
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import (
    ConfigError,
    ExperimentConfig,
    apply_overrides,
    load_config,
    serialize_config,
)
from .experiment import SUMMARY_COLUMNS, summary_cell, run_experiment, run_suite, write_summary
from .image import ImageFormatError, load_image, save_image
from .metrics import format_psnr, psnr, ssim
from .noise import NoiseSpec, add_speckle

logger = logging.getLogger("vofdenoise")


def _split_overrides(extra: list[str]) -> dict[str, str]:
    overrides = {}
    for item in extra:
        if not item.startswith("--") or "=" not in item:
            raise ConfigError(f"unrecognized argument {item!r}; overrides look like --coeff.eta=3")
        key, value = item[2:].split("=", 1)
        overrides[key] = value
    return overrides


def _base_config(path: str | None, extra: list[str]) -> ExperimentConfig:
    cfg = load_config(path) if path else ExperimentConfig()
    return apply_overrides(cfg, _split_overrides(extra))


def _print_rows(rows: list[dict]) -> None:
    print(",".join(SUMMARY_COLUMNS))
    for row in rows:
        print(",".join(summary_cell(k, row.get(k)) for k in SUMMARY_COLUMNS))


def cmd_denoise(args, extra) -> int:
    cfg = _base_config(args.config, extra).validate()
    row = run_experiment(cfg)
    if cfg.emit.summary:
        out = Path(cfg.output_dir)
        write_summary([row], out / f"{cfg.label}_summary.csv")
    _print_rows([row])
    return 0


def cmd_suite(args, extra) -> int:
    overrides = _split_overrides(extra)
    bases = [apply_overrides(load_config(p), overrides) for p in args.configs]
    configs = []
    for base in bases:
        images = args.image or [base.input]
        models = args.model or [base.model]
        looks = args.looks or [None if base.noise is None else base.noise.looks]
        for image, model, L in itertools.product(images, models, looks):
            noise = base.noise
            if L is not None:
                noise = NoiseSpec(L, base.noise.seed if base.noise else 0)
            name = None if args.image else base.name
            configs.append(replace(base, input=image, model=model, noise=noise, name=name))
    rows = run_suite(configs, jobs=args.jobs)
    if args.summary:
        Path(args.summary).parent.mkdir(parents=True, exist_ok=True)
        write_summary(rows, args.summary)
    _print_rows(rows)
    return 1 if any(r["error"] for r in rows) else 0


def cmd_noise(args, extra) -> int:
    if extra:
        raise ConfigError(f"unrecognized arguments: {' '.join(extra)}")
    clean = load_image(args.input)
    save_image(add_speckle(clean, NoiseSpec(args.looks, args.seed)), args.output)
    return 0


def cmd_metrics(args, extra) -> int:
    if extra:
        raise ConfigError(f"unrecognized arguments: {' '.join(extra)}")
    a = load_image(args.image)
    b = load_image(args.reference)
    print(f"psnr,{format_psnr(psnr(a, b))}")
    print(f"ssim,{ssim(a, b):.4f}")
    return 0


def cmd_config(args, extra) -> int:
    sys.stdout.write(serialize_config(_base_config(args.config, extra)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vofdenoise",
        description="Variable-order fractional 1-Laplacian speckle denoising.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("denoise", help="run one experiment")
    p.add_argument("config", nargs="?")
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("suite", help="run a batch of experiments")
    p.add_argument("configs", nargs="+")
    p.add_argument("--image", nargs="+", help="input images (overrides config input)")
    p.add_argument("--model", nargs="+", help="models to run")
    p.add_argument("--looks", nargs="+", type=int, help="noise levels L")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--summary", help="summary CSV path")
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("noise", help="synthesize a speckled image")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--looks", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_noise)

    p = sub.add_parser("metrics", help="PSNR and SSIM of IMAGE against REFERENCE")
    p.add_argument("image")
    p.add_argument("reference")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("config", help="print the effective configuration")
    p.add_argument("config", nargs="?")
    p.set_defaults(func=cmd_config)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args, extra)
    except (ConfigError, ImageFormatError, ValueError, OSError) as exc:
        print(f"vofdenoise: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
