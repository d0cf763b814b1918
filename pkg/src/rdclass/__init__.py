"""Human/robot classification on FMCW range-Doppler maps."""

from rdclass.errors import (
    ConfigError,
    DataError,
    DegenerateInputError,
    EmptyTargetError,
    RdclassError,
    TrainingError,
)

__version__ = "0.1.0"

HUMAN = 1
ROBOT = 0
LABEL_NAMES = {HUMAN: "human", ROBOT: "robot"}
LABEL_CODES = {name: code for code, name in LABEL_NAMES.items()}

__all__ = [
    "ConfigError",
    "DataError",
    "DegenerateInputError",
    "EmptyTargetError",
    "RdclassError",
    "TrainingError",
    "HUMAN",
    "ROBOT",
    "LABEL_NAMES",
    "LABEL_CODES",
]
