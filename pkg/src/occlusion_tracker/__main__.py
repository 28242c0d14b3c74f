#!/usr/bin/env python3
"""
Allow running occlusion_tracker as a module with `python -m occlusion_tracker`
"""

import sys
from .cli import main

if __name__ == "__main__":
    sys.exit(main())
