"""Exception types shared across the toolkit."""


class WifisenseError(Exception):
    """Base class for all toolkit errors."""


class SchemaError(WifisenseError):
    """A structured document does not conform to its schema."""


class DuplicateAP(SchemaError):
    """An AP id appears more than once in a topology document."""


class OverlapError(SchemaError):
    """Two policy phases overlap in time."""


class OrderError(SchemaError):
    """Policy phases are out of order or a range is inverted."""


class MalformedLine(WifisenseError):
    """A log line violates the event grammar.

    ``offset`` is the byte offset of the first violating field.
    """

    def __init__(self, message, offset=0):
        super().__init__(message)
        self.offset = offset


class UnknownSubtype(MalformedLine):
    """The event subtype token is not one of the six known types."""


class BadMac(WifisenseError):
    """A MAC string is not six colon-separated hex octets."""


class UnknownAP(WifisenseError):
    """An event references an AP the topology does not know."""


class RolloverAmbiguity(WifisenseError):
    """A timestamp regression is too large for jitter, too small for midnight."""


class UnsortedInput(WifisenseError):
    """Events passed to the sessionizer are not sorted by timestamp."""


class MixedDevices(WifisenseError):
    """A per-device operation received events from several devices."""


class EmptyTrajectory(WifisenseError):
    """A classifier call received a trajectory with no sessions."""


class EmptyPopulation(WifisenseError):
    """A CDF was requested over zero devices."""


class EmptyTopologyUnit(WifisenseError):
    """A requested spatial unit does not exist in the topology."""


class MissingPositions(WifisenseError):
    """Heatmap requested for a floor whose APs lack coordinates."""


class ConfigError(WifisenseError):
    """A scenario or service configuration is invalid."""
