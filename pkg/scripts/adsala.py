#!/usr/bin/env python3
"""
ADSALA GEMM command-line entry point
Runs the sample → gather → install → bench pipeline and its inspection commands.
"""

import sys
from pathlib import Path

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.cli.commands import main

if __name__ == '__main__':
    sys.exit(main())
