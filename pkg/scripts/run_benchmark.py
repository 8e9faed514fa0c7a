#!/usr/bin/env python3
"""Run a benchmark config and write the report bundle.

Thin wrapper over the ``ftft ftft`` subcommand so the whole study is one
command from a checkout:

    python3 scripts/run_benchmark.py --out-dir runs/bench
    python3 scripts/run_benchmark.py --config my.json --out-dir runs/mine --force
"""

import sys

from ftft.cli import main

if __name__ == "__main__":
    sys.exit(main(["ftft", *sys.argv[1:]]))
