"""Exception types raised by mfg_route.

Every error carries a stable ``code`` string; the CLI reports it in its
JSON error document.
"""


class GameError(ValueError):
    code = "GameError"


class MissingOutNeighbor(GameError):
    code = "MissingOutNeighbor"


class InvalidGraph(GameError):
    code = "InvalidGraph"


class NonStochasticRow(GameError):
    code = "NonStochasticRow"


class ZeroReference(GameError):
    code = "ZeroReference"


class BadDistribution(GameError):
    code = "BadDistribution"


class BadAlpha(GameError):
    code = "BadAlpha"


class BadCost(GameError):
    code = "BadCost"


class ShapeMismatch(GameError):
    code = "ShapeMismatch"


class InvalidPolicy(GameError):
    code = "InvalidPolicy"


class BadProbability(GameError):
    code = "BadProbability"


class TooManyAgents(GameError):
    code = "TooManyAgents"


class ZeroProbabilityEdge(GameError):
    code = "ZeroProbabilityEdge"


class UndefinedTax(GameError):
    code = "UndefinedTax"


class ObstacleEndpoint(GameError):
    code = "ObstacleEndpoint"
