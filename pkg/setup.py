"""
Setup and Installation Script
Run this after cloning the repository to set up the environment.
"""

import subprocess
import sys
from pathlib import Path


def run_command(command, description):
    """Run a shell command and handle errors."""
    print(f"\n{'='*60}")
    print(f"  {description}")
    print('='*60)

    try:
        result = subprocess.run(
            command,
            shell=True,
            check=True,
            capture_output=True,
            text=True
        )
        print(result.stdout)
        return True
    except subprocess.CalledProcessError as e:
        print(f"Error: {e.stderr}")
        return False


def check_numeric_stack():
    """Import the numeric stack and report the versions in use."""
    print("\n" + "="*60)
    print("  Checking Numeric Stack")
    print("="*60)

    try:
        import numpy
        import scipy

        print(f"numpy {numpy.__version__}, scipy {scipy.__version__}")
        return True
    except ImportError as e:
        print(f"Error importing the numeric stack: {str(e)}")
        return False


def main():
    """Main setup function."""

    print("\n" + "="*60)
    print("  QSYNTH - Setup Script")
    print("="*60)

    python_version = sys.version_info
    print(f"\nPython version: {python_version.major}.{python_version.minor}.{python_version.micro}")

    if python_version < (3, 9):
        print("Error: Python 3.9 or higher is required")
        sys.exit(1)

    print("Python version is compatible")

    dev = "--dev" in sys.argv[1:]
    requirements = "requirements-dev.txt" if dev else "requirements.txt"
    success = run_command(
        f"{sys.executable} -m pip install -r {requirements}",
        f"Installing Python packages from {requirements}..."
    )

    if not success:
        print("Failed to install dependencies")
        print(f"Try running manually: pip install -r {requirements}")
        sys.exit(1)

    print("All dependencies installed")

    if not check_numeric_stack():
        sys.exit(1)

    print("\n" + "="*60)
    print("  Creating Directories")
    print("="*60)

    for directory in ('data', 'results'):
        Path(directory).mkdir(exist_ok=True)
        print(f"{directory}/ directory ready")

    print("\n" + "="*60)
    print("  Setup Complete!")
    print("="*60)

    print("\nNext steps:")
    print("  1. Run the tests: pytest -m 'not slow'")
    print("  2. Try a batch: python main.py synth-two --n 4 --trials 50")
    print("  3. Full acceptance run: python scripts/run_acceptance.py")
    print("\nFor detailed usage, see README.md")
    print("\n" + "="*60)


if __name__ == "__main__":
    try:
        main()
    except KeyboardInterrupt:
        print("\n\nSetup interrupted by user")
        sys.exit(1)
    except Exception as e:
        print(f"\n\nSetup failed: {str(e)}")
        sys.exit(1)
