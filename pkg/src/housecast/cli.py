"""Command line interface: ingest, fetch, diagnose, fit, pipeline.

Every subcommand accepts --config/--out/--seed/--offline so individual
stages can be run and debugged in isolation; ``pipeline`` runs the whole
workflow and writes the full report set.
"""

from __future__ import annotations

import argparse
import sys

from .config import PipelineConfig, load_config
from .data import Dataset, fetch_fred, ingest_csv, load_dataset_csv, save_dataset_csv
from .errors import HousecastError, StageFailed
from .pipeline import run_pipeline


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="INI configuration file")
    sub.add_argument("--out", default="out", help="output directory")
    sub.add_argument("--seed", type=int, default=None, help="random seed override")
    sub.add_argument("--offline", action="store_true", help="forbid network access")


def _load_config(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    cfg.output_dir = args.out
    return cfg


def _load_data(args) -> Dataset:
    if args.data:
        return load_dataset_csv(args.data)
    if args.csv:
        return ingest_csv(args.csv)
    raise HousecastError("supply --data <combined.csv> or per-series CSV paths")


def _add_data_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--data", help="combined dataset CSV (DATE,var1,var2,...)")
    sub.add_argument("csv", nargs="*", help="per-series CSV files (DATE,<NAME>)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="housecast",
        description="Econometric and ML forecasting workflow for monthly data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="validate and join per-series CSVs")
    _add_data_args(p_ingest)
    _add_common(p_ingest)

    p_fetch = sub.add_parser("fetch", help="download series from the public data service")
    p_fetch.add_argument("--series", required=True, help="comma-separated series ids")
    p_fetch.add_argument("--start", help="span start YYYY-MM-DD")
    p_fetch.add_argument("--end", help="span end YYYY-MM-DD")
    _add_common(p_fetch)

    p_diag = sub.add_parser("diagnose", help="unit-root search and correlograms only")
    _add_data_args(p_diag)
    _add_common(p_diag)

    p_fit = sub.add_parser("fit", help="run a single model stage")
    p_fit.add_argument(
        "model", choices=["arima", "arimax", "garch", "cointegration", "vecm", "varx"]
    )
    _add_data_args(p_fit)
    _add_common(p_fit)

    p_pipe = sub.add_parser("pipeline", help="run the full workflow")
    _add_data_args(p_pipe)
    _add_common(p_pipe)
    return parser


def _toggles_off(cfg: PipelineConfig) -> None:
    cfg.run_arima = cfg.run_arimax = cfg.run_garch = False
    cfg.run_cointegration = cfg.run_vecm = cfg.run_varx = False
    cfg.run_ml = cfg.run_ensemble = False


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "ingest":
            dataset = _load_data(args)
            import os

            os.makedirs(args.out, exist_ok=True)
            out_path = os.path.join(args.out, "dataset.csv")
            save_dataset_csv(dataset, out_path)
            print(
                f"ingested {len(dataset)} months x {len(dataset.names)} variables "
                f"-> {out_path}"
            )
            return 0

        if args.command == "fetch":
            dataset = fetch_fred(
                [s.strip() for s in args.series.split(",") if s.strip()],
                start=args.start,
                end=args.end,
                out_dir=args.out,
                offline=args.offline,
            )
            import os

            out_path = os.path.join(args.out, "dataset.csv")
            save_dataset_csv(dataset, out_path)
            print(f"fetched {len(dataset)} months -> {out_path}")
            return 0

        dataset = _load_data(args)
        cfg = _load_config(args)
        if cfg.target not in dataset.names:
            cfg.target = dataset.names[0]

        if args.command == "diagnose":
            _toggles_off(cfg)
        elif args.command == "fit":
            _toggles_off(cfg)
            setattr(cfg, f"run_{args.model}", True)
            if args.model == "arimax" and not cfg.arimax_exog:
                cfg.arimax_exog = [n for n in dataset.names if n != cfg.target]
            if args.model == "vecm":
                cfg.run_cointegration = True  # rank search feeds the VECM

        result = run_pipeline(cfg, dataset)
        print(f"wrote reports to {cfg.output_dir}")
        for stage, status in result.stage_status:
            print(f"  {stage}: {status}")
        return 0
    except StageFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except HousecastError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
