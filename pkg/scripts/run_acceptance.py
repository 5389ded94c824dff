#!/usr/bin/env python3
"""Run the acceptance criteria and print one PASS/FAIL line per criterion.

Exit status is 0 only when every criterion passes.
"""
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    cmd = [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", str(ROOT / "tests" / "test_acceptance.py")]
    proc = subprocess.run(cmd, cwd=ROOT, capture_output=True, text=True)
    lines = [ln for ln in proc.stdout.splitlines() if ln.startswith("criterion ")]
    seen = {}
    for ln in lines:
        seen[ln[:12]] = ln  # the summary repeats the per-test lines
    for ln in seen.values():
        print(ln)
    if not seen:
        print(proc.stdout[-4000:], proc.stderr[-4000:], sep="\n")
        return 2
    n_pass = sum(" PASS " in ln for ln in seen.values())
    print(f"{n_pass}/{len(seen)} criteria pass")
    return 0 if n_pass == len(seen) else 1


if __name__ == "__main__":
    sys.exit(main())
