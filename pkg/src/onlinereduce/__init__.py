"""Online learning rules and the reductions between binary, finite, countable
and general bounded-loss output spaces."""
from .exceptions import (CapabilityError, CapacityError, ConfigError, DensityError, EndOfTrace,
                         InvalidInputError, OnlineReduceError)
from .learners import MemorizationLearner, NearestNeighborLearner, OracleLearner
from .reductions import (BinaryToCountable, CountableToGeneral, GeneralToBinary, OneVsRestOnline,
                         compose_full_stack)
from .value_space import ValueSpace, parse_space

__version__ = "0.1.0"

__all__ = ["CapabilityError", "CapacityError", "ConfigError", "DensityError", "EndOfTrace",
           "InvalidInputError", "OnlineReduceError", "MemorizationLearner",
           "NearestNeighborLearner", "OracleLearner", "BinaryToCountable", "CountableToGeneral",
           "GeneralToBinary", "OneVsRestOnline", "compose_full_stack", "ValueSpace", "parse_space"]
