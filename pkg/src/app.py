"""
Stancy Application

Process entry point for the `stancy` command: loads the environment,
configures logging and dispatches to the command-line interface.
"""

import os
import logging
import sys
from typing import List, Optional

from dotenv import load_dotenv

from src.cli.commands import run

# Load environment variables
load_dotenv()

# Configure logging
logging.basicConfig(
    level=getattr(logging, os.getenv('LOG_LEVEL', 'INFO').upper(), logging.INFO),
    format=os.getenv('LOG_FORMAT', '%(asctime)s - %(name)s - %(levelname)s - %(message)s')
)
logger = logging.getLogger(__name__)


def main(argv: Optional[List[str]] = None) -> None:
    """Run one stancy command and exit with its status code"""
    exit_code = run(argv)
    logger.debug(f"stancy finished with exit code {exit_code}")
    sys.exit(exit_code)


if __name__ == '__main__':
    main()
