"""Command-line entry point: ``ivnnt {truths,simulate,estimate}``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .dataio import ConfigError, IngestSpec, MissingColumn, ParseError, ingest, load_config
from .dgp import MultipleSolutions, solve_beta
from .domain import IVNNTError, ModelSpec, NoSolution, ValidationError
from .harness import dumps, run_study
from .pipeline import estimate
from .plots import study_boxplots

log = logging.getLogger("ivnnt")

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2


def _err(msg: str) -> None:
    print(f"ivnnt: error: {msg}", file=sys.stderr)


def _solve(cfg):
    try:
        return solve_beta(cfg.dgp), None
    except NoSolution as exc:
        _err(f"infeasible DGP: {exc}")
        return None, EXIT_INFEASIBLE
    except MultipleSolutions as exc:
        print(dumps({"candidates": [t.to_dict() for t in exc.truths]}))
        _err(f"{len(exc.truths)} coefficient vectors satisfy the constraints; "
             "set dgp.root_index to choose one")
        return None, EXIT_ERROR
    except IndexError:
        _err(f"dgp.root_index={cfg.dgp.root_index} is out of range")
        return None, EXIT_ERROR


def cmd_truths(args) -> int:
    cfg = load_config(args.config, link=args.link, seed=args.seed)
    if cfg.dgp is None:
        raise ConfigError("config has no dgp section")
    truth, code = _solve(cfg)
    if truth is None:
        return code
    out = {"link": cfg.link.value, **truth.to_dict()}
    print(dumps(out))
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = load_config(args.config, link=args.link, seed=args.seed)
    if cfg.study is None:
        raise ConfigError("config has no study section")
    truth, code = _solve(cfg)
    if truth is None:
        return code
    out = Path(args.out or "results")
    out.mkdir(parents=True, exist_ok=True)
    total = len(cfg.study.sample_sizes) * cfg.study.replications

    def progress(done):
        log.info("%d / %d replications", done, total)

    summary = run_study(cfg.study, truth, workers=args.workers, progress=progress)
    (out / "summary.csv").write_text(summary.summary_csv(), encoding="utf-8")
    (out / "summary.json").write_text(summary.to_json() + "\n", encoding="utf-8")
    (out / "estimates.csv").write_text(summary.estimates_csv(), encoding="utf-8")
    for index, svg in study_boxplots(summary).items():
        (out / f"boxplot_{index}.svg").write_text(svg, encoding="utf-8")
    print(summary.summary_csv(), end="")
    return EXIT_OK


def _ingest_spec_from_args(args, cfg) -> IngestSpec:
    spec = cfg.ingest
    if args.data is None:
        if spec is None:
            raise ConfigError("no data given: use --data or an estimate section in the config")
        return spec
    if spec is None:
        raise ConfigError("--data needs an estimate section naming the columns")
    return IngestSpec(Path(args.data), spec.outcome_column, spec.exposure_column, spec.instrument_column,
                      spec.exposure_threshold, spec.outcome_threshold, spec.instrument_threshold,
                      spec.header, spec.strict)


def cmd_estimate(args) -> int:
    cfg = load_config(args.config, link=args.link, seed=args.seed)
    spec = _ingest_spec_from_args(args, cfg)
    reports: list = []
    data = ingest(spec, reports)
    rep = estimate(data, ModelSpec(cfg.link), cfg.ci_level)
    out = rep.to_dict()
    out["ingestion"] = reports[0].to_dict()
    text = dumps(out)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ivnnt", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="JSON config file")
        sp.add_argument("--link", choices=["logit", "probit"], help="override model.link")
        sp.add_argument("--seed", type=int, help="override study.master_seed")

    sp = sub.add_parser("truths", help="solve the DGP and print true benefits and indices")
    common(sp)
    sp.set_defaults(func=cmd_truths)

    sp = sub.add_parser("simulate", help="run the Monte Carlo study")
    common(sp)
    sp.add_argument("--out", help="output directory (default ./results)")
    sp.add_argument("--workers", type=int, default=1, help="worker processes")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("estimate", help="estimate EIN, NNE and NNT from a CSV file")
    common(sp)
    sp.add_argument("--data", help="CSV file (overrides estimate.data)")
    sp.add_argument("--out", help="also write the JSON report to this file")
    sp.set_defaults(func=cmd_estimate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        _err("--seed must be an unsigned 64-bit integer")
        return EXIT_ERROR
    try:
        return args.func(args)
    except ValidationError as exc:
        _err(f"invalid data: {exc}")
    except (ConfigError, MissingColumn, ParseError) as exc:
        _err(str(exc))
    except FileNotFoundError as exc:
        _err(str(exc))
    except OSError as exc:
        _err(f"I/O failure: {exc}")
    except IVNNTError as exc:
        _err(f"{type(exc).__name__}: {exc}")
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
