"""Run the acceptance tests and print the ten criterion lines.

Usage: python scripts/run_acceptance.py [--fast]

``--fast`` skips the tests marked slow (criteria 1, 7 and 10).
"""

import argparse
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--fast", action="store_true", help="skip slow criteria")
    a = ap.parse_args()
    cmd = [sys.executable, "-m", "pytest", "-q", str(ROOT / "tests" / "test_acceptance.py")]
    if a.fast:
        cmd += ["-m", "not slow"]
    proc = subprocess.run(cmd, capture_output=True, text=True, cwd=ROOT)
    lines = [ln for ln in proc.stdout.splitlines() if ln.startswith("criterion ")]
    print("\n".join(lines))
    return proc.returncode


if __name__ == "__main__":
    sys.exit(main())
