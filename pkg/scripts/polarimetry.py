#!/usr/bin/env python3
"""
Command-line entry point for the polarimetry simulator.

    python scripts/polarimetry.py simulate --xi 1.0472 --delta 0.7854 --zeta 0.5236 --r 0.8 --out trace.csv
    python scripts/polarimetry.py extract --trace trace.csv --r 0.8
    python scripts/polarimetry.py fullrun --xi 60 --delta 45 --zeta 30 --degrees --r 0.8 --no-timestamp
"""

import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from cli import main

if __name__ == "__main__":
    sys.exit(main())
