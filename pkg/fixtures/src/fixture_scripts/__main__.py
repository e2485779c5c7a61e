"""Run the fixture contract checks: python -m fixture_scripts <corpus-root>."""

import sys
import tempfile

from . import verify


def main(argv: list[str]) -> int:
    if len(argv) != 1:
        print("usage: python -m fixture_scripts <corpus-root>", file=sys.stderr)
        return 2
    with tempfile.TemporaryDirectory(prefix="fixture-verify-") as scratch:
        problems = verify(argv[0], scratch)
    for problem in problems:
        print(problem)
    print(f"{len(problems)} problems")
    return 0 if not problems else 1


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
