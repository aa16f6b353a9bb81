import argparse
import logging
import os
import sys
from typing import List, Optional

from config import SUBCOMMANDS, RunConfig, config
from experiments.runs import RUNNERS, run_report
from experiments.suites import verify_steps
from experiments.supervisor import LabSupervisor
from utils.errors import ConfigurationError, LabError
from utils.io_utils import write_csv

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

logger = logging.getLogger("fhe_lab")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fhe-lab",
        description="Numerical laboratory for the family Hermite-Einstein equation",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS, help="what to run")
    parser.add_argument("--config", metavar="PATH", help="run configuration (KEY=value dotenv file)")
    parser.add_argument("--out", metavar="DIR", help="output directory (overrides RUN_OUT)")
    parser.add_argument("--seed", type=int, metavar="N", help="seed for random fields (overrides RUN_SEED)")
    parser.add_argument("--quiet", action="store_true", help="only log warnings and errors")
    return parser


def configure_logging(quiet: bool):
    level = logging.WARNING if quiet else getattr(logging, config.log_level.upper(), logging.INFO)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    logging.getLogger().setLevel(level)


def load_run_config(args: argparse.Namespace) -> RunConfig:
    """RunConfig from --config (or defaults), with --out and --seed applied on top."""
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    changes = {}
    if args.out is not None:
        changes["out"] = args.out
    if args.seed is not None:
        changes["seed"] = args.seed
    return cfg.replace(**changes) if changes else cfg


def print_configuration(cfg: RunConfig):
    """Log the run configuration"""
    logger.info("⚙️  Configuration:")
    for key, value in cfg.to_dict().items():
        logger.info("   • %s: %s", key, value)


def run_verify(cfg: RunConfig) -> LabSupervisor:
    out_dir = os.path.join(cfg.out, "verify")
    supervisor = LabSupervisor("verify", out_dir, cfg, cfg.seed)

    def write_table(sup: LabSupervisor):
        rows = sup.workflow_state.check_rows()
        sup.record_file(write_csv(rows, "checks.csv", out_dir,
                                  ["check", "statement", "measured", "tolerance", "status"]))

    supervisor.run(verify_steps(cfg.seed), write_table)
    return supervisor


def run(subcommand: str, cfg: RunConfig) -> int:
    """Dispatch one subcommand and map its outcome to an exit status."""
    if subcommand == "report":
        state, _ = run_report(cfg.out)
        return EXIT_OK if state.metadata["failed_steps"] == 0 else EXIT_FAILURE
    if subcommand == "verify":
        supervisor = run_verify(cfg)
    else:
        supervisor = RUNNERS[subcommand](cfg, os.path.join(cfg.out, subcommand))
    return EXIT_OK if supervisor.succeeded else EXIT_FAILURE


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.quiet)
    try:
        cfg = load_run_config(args)
        print_configuration(cfg)
        return run(args.subcommand, cfg)
    except FileNotFoundError as e:
        print(f"❌ configuration file not found: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigurationError as e:
        print(f"❌ invalid configuration: {e}", file=sys.stderr)
        return EXIT_USAGE
    except LabError as e:
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAILURE
    except KeyboardInterrupt:
        print("\n\n⚠️  Interrupted by user", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
