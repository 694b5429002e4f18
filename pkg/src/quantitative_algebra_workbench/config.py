"""Configuration for the quantitative algebra workbench."""

import os

# Budgets - every enumeration checks one of these and raises BudgetExceeded when hit
TERM_UNIVERSE_BUDGET = int(os.getenv("QALG_TERM_BUDGET", "200000"))
ENUMERATION_BUDGET = int(os.getenv("QALG_ENUMERATION_BUDGET", "250000"))
HOM_SPACE_BUDGET = int(os.getenv("QALG_HOM_BUDGET", "100000"))
EGRAPH_BUDGET = int(os.getenv("QALG_EGRAPH_BUDGET", "50000"))

# Monad instances - word length / subset size cap
DEFAULT_MONAD_CAP = int(os.getenv("QALG_MONAD_CAP", "3"))

# Free algebras
DEFAULT_DEPTH = int(os.getenv("QALG_DEFAULT_DEPTH", "3"))

# Brute-force isometry search is only attempted up to this many points
ISOMETRY_SEARCH_LIMIT = 8

# Homomorphic images enumerated by the Birkhoff check
IMAGE_SIZE_CAP = int(os.getenv("QALG_IMAGE_CAP", "4"))

# Reports
SCHEMA_VERSION = "1"
FILE_EXTENSION = ".qalg"

LOG_LEVEL = os.getenv("QALG_LOG_LEVEL", "WARNING")
