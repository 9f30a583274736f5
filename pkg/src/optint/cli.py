"""Command-line driver for the interval pipelines.

Subcommands map to pipeline stages so expensive runs can be resumed:
``pom-info``, ``simulate``, ``sample``, ``marginal``, ``intervals``,
``report`` (everything), and ``jaynes`` (the analytic benchmark).  Exit
codes: 0 success, 2 configuration error, 3 numerical diagnostic failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import jaynes as jx
from .intervals import (
    DiagnosticError,
    PropertyPriorSpec,
    plausible_interval,
    size_credibility,
)
from .marginal import FitModel, ReferenceDensity, likelihood_from_fits
from .pipeline import (
    ConfigError,
    PipelineConfig,
    config_hash,
    run_pipeline,
    stage_seed,
)
from .properties import property_by_name
from .sampling import DensitySpec, save_samples
from .sampling import sample as draw_sample
from .statespace import Counts, pom_to_json, simulate_clicks, tat_pom, tetrahedron_pom

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIAGNOSTIC = 3


def _load_config(path: str, seed: int | None) -> PipelineConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return PipelineConfig.from_dict(doc, seed_override=seed)


def _cmd_pom_info(args) -> int:
    pom = tetrahedron_pom() if args.scheme == "tetrahedron" else tat_pom()
    text = pom_to_json(pom)
    if args.output:
        Path(args.output).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    cfg = _load_config(args.config, args.seed)
    if cfg.simulate is None:
        raise ConfigError("config carries explicit counts; nothing to simulate")
    sim = cfg.simulate
    counts = simulate_clicks(np.asarray(sim["probs"], dtype=float),
                             int(sim["N"]), int(sim["seed"]))
    doc = json.loads(counts.to_json())
    doc["config_sha256"] = config_hash(cfg)
    out = Path(args.output or (Path(cfg.outputs) / "counts.json"))
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_sample(args) -> int:
    cfg = _load_config(args.config, args.seed)
    outdir = Path(cfg.outputs)
    outdir.mkdir(parents=True, exist_ok=True)
    spec = DensitySpec(cfg.reference_prior, None, None, None)
    s = draw_sample(spec, cfg.scheme, int(cfg.sampler["n_points"]),
                    int(cfg.sampler["seed"]))
    save_samples(s, outdir / "samples_reference.csv", config_hash(cfg))
    print(f"wrote {outdir / 'samples_reference.csv'} "
          f"(acceptance {s.diagnostics['acceptance_rate']:.3f}, ESS {s.diagnostics['ess']:.0f})")
    return EXIT_OK


def _cmd_report(args) -> int:
    cfg = _load_config(args.config, args.seed)
    result = run_pipeline(cfg)
    print(json.dumps(result.report, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_marginal(args) -> int:
    cfg = _load_config(args.config, args.seed)
    result = run_pipeline(cfg, through="marginal")
    print(f"likelihood written under {cfg.outputs} "
          f"(iteration converged: {result.reference.converged})")
    return EXIT_OK


def _cmd_intervals(args) -> int:
    cfg = _load_config(args.config, args.seed)
    outdir = Path(cfg.outputs)
    prior_fit_path = outdir / "fit_prior.json"
    post_fit_path = outdir / "fit_posterior.json"
    if not prior_fit_path.exists() or not post_fit_path.exists():
        raise ConfigError("run the marginal stage first: fitted curves not found")
    sha = config_hash(cfg)
    for path in (prior_fit_path, post_fit_path):
        doc = json.loads(path.read_text())
        if doc.get("config_sha256") != sha:
            raise ConfigError(f"{path} was produced by a different config")
    # reconstruct the likelihood from the stored fits, then rebuild intervals
    prop = property_by_name(cfg.prop)
    prior_fit = FitModel.from_dict(json.loads(prior_fit_path.read_text()))
    post_fit = FitModel.from_dict(json.loads(post_fit_path.read_text()))
    curve = likelihood_from_fits(prior_fit, post_fit)
    if cfg.property_prior == "flat":
        prior_spec = PropertyPriorSpec.flat(prop.frange)
    else:
        ref = ReferenceDensity.from_dict(
            json.loads((outdir / "reference_density.json").read_text()))
        prior_spec = PropertyPriorSpec.induced(prop.frange, ref.density)
    family = size_credibility(curve, prior_spec)
    lam, iv = plausible_interval(family)
    print(json.dumps({"lambda_crit": lam, "plausible": iv.to_lists(),
                      "config_sha256": sha}, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_jaynes(args) -> int:
    data = jx.FailureData(tuple(args.times), args.rate)
    table = jx.comparison_table(data, args.level)
    if args.output:
        Path(args.output).write_text(json.dumps(table, indent=2, sort_keys=True) + "\n")
    print(jx.format_table_text(table))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="optint",
        description="Optimal error intervals for state properties from click data.")
    parser.add_argument("--seed", type=int, default=None,
                        help="override all stage seeds (derived per stage)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pom-info", help="emit a measurement definition as JSON")
    p.add_argument("--scheme", choices=("tetrahedron", "tat"), required=True)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(fn=_cmd_pom_info)

    for name, fn, extra in (
        ("simulate", _cmd_simulate, "draw clicks for the configured true state"),
        ("sample", _cmd_sample, "draw the raw reference-prior sample"),
        ("marginal", _cmd_marginal, "run the content iteration and likelihood fit"),
        ("intervals", _cmd_intervals, "rebuild intervals from stored fits"),
        ("report", _cmd_report, "run the full pipeline and print the report"),
    ):
        p = sub.add_parser(name, help=extra)
        p.add_argument("--config", required=True, help="pipeline config JSON")
        if name == "simulate":
            p.add_argument("-o", "--output", default=None)
        p.set_defaults(fn=fn)

    p = sub.add_parser("jaynes", help="first-failure interval comparison table")
    p.add_argument("--times", type=float, nargs="+", required=True)
    p.add_argument("--rate", type=float, default=1.0)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(fn=_cmd_jaynes)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DiagnosticError as exc:
        print(f"diagnostic failure: {exc}", file=sys.stderr)
        return EXIT_DIAGNOSTIC


if __name__ == "__main__":
    sys.exit(main())
