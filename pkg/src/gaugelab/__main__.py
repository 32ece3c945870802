"""Allow ``python -m gaugelab``."""

from gaugelab.main import main

if __name__ == "__main__":
    raise SystemExit(main())
