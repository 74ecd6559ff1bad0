"""Entry point for `python -m belab`."""
import sys

from belab.cli import main

sys.exit(main())
