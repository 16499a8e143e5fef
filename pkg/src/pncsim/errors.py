class PncSimError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(PncSimError, ValueError):
    pass


class DistanceBelowReference(PncSimError, ValueError):
    """A link shorter than the path-loss reference distance."""


class BothLinksSilent(PncSimError, ValueError):
    pass


class OutOfSegment(PncSimError, ValueError):
    pass


class OutOfDomain(PncSimError, ValueError):
    """Relay position outside the search interval of the PNC-B objective."""


class NoRelays(PncSimError, ValueError):
    pass


class LengthMismatch(PncSimError, ValueError):
    pass
