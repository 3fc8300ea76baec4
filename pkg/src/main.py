#!/usr/bin/env python3
"""
Entry point script for the NBDS synthesis compiler and simulator.
"""

import sys
import os

# Add src directory to path to allow imports
src_dir = os.path.dirname(os.path.abspath(__file__))
if src_dir not in sys.path:
    sys.path.insert(0, src_dir)


def main():
    """Main entry point - forwards the command line to the nbds CLI."""
    from nbds_synth.cli import main as cli_main
    return cli_main(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
