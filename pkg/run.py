"""
Main entry point for the singing transcription toolkit
"""
import sys
from pathlib import Path

# Add package directory to path
sys.path.insert(0, str(Path(__file__).parent))

from transcriber.cli import main as cli_main


def main():
    """Main entry point"""
    sys.exit(cli_main())


if __name__ == '__main__':
    main()
