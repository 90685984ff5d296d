"""Allow ``python -m flmrsim``."""
from flmrsim.run import main

raise SystemExit(main())
