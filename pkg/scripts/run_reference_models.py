#!/usr/bin/env python3
"""Run the bundled regression corpus and print the verdict table.

Thin wrapper over `sdesym examples`; exits nonzero on any failure so it
can serve as a smoke gate in automation.

    python scripts/run_reference_models.py [--only NAME] [--seed N] [--json]
"""

import sys

from sdesym.cli import main

if __name__ == "__main__":
    sys.exit(main(["examples"] + sys.argv[1:]))
