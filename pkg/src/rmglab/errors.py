"""Exception types raised by rmglab."""


class RMGError(ValueError):
    """Base class for every error raised by this package."""


class ValidationError(RMGError):
    pass


class InvalidSimplexRow(ValidationError):
    def __init__(self, location, deviation):
        self.location = location
        self.deviation = deviation
        super().__init__(f"row at {location} is not a probability vector (deviation {deviation:.3g})")


class RewardOutOfRange(ValidationError):
    def __init__(self, location):
        self.location = location
        super().__init__(f"reward at {location} lies outside [0, 1]")


class RadiusOutOfRange(ValidationError):
    def __init__(self, agent):
        self.agent = agent
        super().__init__(f"uncertainty radius of agent {agent} must lie in (0, 1]")


class DimensionMismatch(RMGError):
    pass


class ParseError(RMGError):
    def __init__(self, message, line=None):
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{where}")


class EmptyVector(RMGError):
    pass


class InvalidConfig(RMGError):
    pass


class ResourceLimitExceeded(RMGError):
    pass
