"""Command line entry point.

Exit statuses: 0 ok, 2 usage error, 3 I/O error, 4 capacity error.
"""

from __future__ import annotations

import sys

from .config import ConfigError, parse_config
from .runner import run_experiment, write_result
from .walks import CapacityError


def main(argv: list[str] | None = None) -> int:
    try:
        config = parse_config(argv)
    except ConfigError as exc:
        print(f"walklab: {exc}", file=sys.stderr)
        return 2
    try:
        result = run_experiment(config)
    except ConfigError as exc:
        print(f"walklab: {exc}", file=sys.stderr)
        return 2
    except CapacityError as exc:
        print(f"walklab: capacity: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"walklab: i/o: {exc}", file=sys.stderr)
        return 3
    if config.out_path is None:
        write_result(result, sys.stdout, config.output_format)
    return 0


if __name__ == "__main__":
    sys.exit(main())
