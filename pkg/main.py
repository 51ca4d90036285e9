"""
Main entry point for slopeforge.

Parses the command line, loads the configuration, runs the command over
every instance file through the batch service and prints the reports in
input order.
"""

import asyncio
import os
import sys
from typing import List, Optional

# Add the project root to path for imports
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from src.cli.commands import CommandReport, CommandRunner, build_parser, setup_logging
from src.config import load_config
from src.services.batch_service import BatchService


def _read_source(source: str) -> str:
    if source == '-':
        return sys.stdin.read()
    with open(source, 'r') as f:
        return f.read()


def run(argv: Optional[List[str]] = None) -> int:
    options = build_parser().parse_args(argv)
    config = load_config(options.config)
    level = options.log_level or config['logging']['level']
    setup_logging(level, config['logging']['format'])

    runner = CommandRunner(options, config)
    sources = list(options.instances)
    if not sources:
        report = runner.run(options.command)
        sys.stdout.write(report.render(options.json))
        return report.exit_code

    def run_one(source: str) -> CommandReport:
        try:
            text = _read_source(source)
        except OSError as e:
            report = CommandReport(options.command, exit_code=2)
            report.lines.append(f"error InvalidInput cannot read {source}: {e}")
            return report
        return runner.run_text(options.command, text)

    max_concurrent = options.workers or config['execution']['max_concurrent_instances']
    service = BatchService(max_concurrent)
    results = asyncio.run(service.run_batch(sources, options.command, run_one))

    exit_code = 0
    for source, result in zip(sources, results):
        if isinstance(result, Exception):
            sys.stderr.write(f"{source}: unexpected failure: {result}\n")
            exit_code = max(exit_code, 1)
            continue
        if len(sources) > 1 and not options.json:
            sys.stdout.write(f"# {source}\n")
        sys.stdout.write(result.render(options.json))
        exit_code = max(exit_code, result.exit_code)
    return exit_code


if __name__ == "__main__":
    sys.exit(run())
