from __future__ import annotations

import sys

from src.config.settings import Settings
from src.domain.errors import ValidationError
from src.logging.setup import setup_logging
from src.platforms.cli.commands import EXIT_USAGE, PROG, dispatch


def main() -> int:
    try:
        settings = Settings.load()
    except ValidationError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    setup_logging(settings)

    # --- CLI ---
    return dispatch(sys.argv[1:], settings)


if __name__ == "__main__":
    sys.exit(main())
