"""Allow ``python -m qiro``."""

from qiro.cli.app import main

if __name__ == "__main__":
    main()
