#!/usr/bin/env python3
"""
Determinism Check Script

Runs one loopforge subcommand twice with identical arguments and compares
the written reports byte for byte. The second run uses a different worker
count, so the check also covers independence from LOOPFORGE_THREADS.

Usage:
    python scripts/check_determinism.py verify --algebra O --mode exact
    python scripts/check_determinism.py torsion --algebra H --seed 4
    python scripts/check_determinism.py flow --algebra H --threads 4
"""

import argparse
import sys
import tempfile
from pathlib import Path

# Make the package importable when run from a checkout
sys.path.insert(0, str(Path(__file__).parent.parent))

from loopforge.config import settings  # noqa: E402
from loopforge.main import main as loopforge_main  # noqa: E402

SUBCOMMANDS = ["verify", "torsion", "flow", "cs", "companions"]


def run_once(command: str, extra: list, out_dir: Path, threads: int) -> list:
    """Run the subcommand writing into ``out_dir``; return the produced files."""
    argv = [command, *extra, "--out", str(out_dir / "report")]
    if command == "flow":
        argv += ["--summary", str(out_dir / "summary.json")]
    previous = settings.LOOPFORGE_THREADS
    settings.LOOPFORGE_THREADS = threads
    try:
        code = loopforge_main(argv)
    finally:
        settings.LOOPFORGE_THREADS = previous
    print(f"  {command} (threads={threads}) exited with {code}")
    return sorted(p for p in out_dir.iterdir() if p.is_file())


def check_determinism(command: str, extra: list, threads: int) -> bool:
    """
    Compare the reports of two identical runs.

    Args:
        command: loopforge subcommand
        extra: remaining loopforge arguments (must not include --out)
        threads: worker count of the second run

    Returns:
        True if every report file is byte-identical
    """
    with tempfile.TemporaryDirectory() as tmp:
        first, second = Path(tmp) / "first", Path(tmp) / "second"
        first.mkdir()
        second.mkdir()
        files_a = run_once(command, extra, first, 1)
        files_b = run_once(command, extra, second, threads)

        print("-" * 50)
        if [p.name for p in files_a] != [p.name for p in files_b]:
            print("Result: FAIL (different report files)")
            return False
        if not files_a:
            print("Result: FAIL (no report written)")
            return False

        identical = True
        for a, b in zip(files_a, files_b):
            same = a.read_bytes() == b.read_bytes()
            identical = identical and same
            print(f"  {'OK' if same else 'DIFFERS'}: {a.name} ({a.stat().st_size} bytes)")

    print(f"\nResult: {'PASS' if identical else 'FAIL'}")
    return identical


def main():
    """Main entry point."""
    parser = argparse.ArgumentParser(
        description="Check that loopforge reports are byte-identical across runs"
    )
    parser.add_argument("command", choices=SUBCOMMANDS, help="Subcommand to run twice")
    parser.add_argument(
        "--threads",
        type=int,
        default=4,
        help="Worker count for the second run (first run uses 1)"
    )

    args, extra = parser.parse_known_args()
    if "--out" in extra or "--summary" in extra:
        parser.error("--out and --summary are chosen by the script")

    success = check_determinism(args.command, extra, args.threads)

    sys.exit(0 if success else 1)


if __name__ == "__main__":
    main()
