"""
Main entry point for the D-MIMO link simulator.

Loads environment variables (DMIMO_LOG_DIR, DMIMO_LOG_LEVEL, DMIMO_JSON_LOGS)
from a .env file and hands the command line to the simulator CLI.
"""
import sys

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

from dmimo_link.cli import main

if __name__ == "__main__":
    sys.exit(main())
