"""Exception types raised across the codec."""


class RifsCodecError(Exception):
    """Base class for every error this package raises on purpose."""


# --- grid / partition ---

class DivisibilityError(RifsCodecError):
    """Image extent is not an integer number of cells."""


class RangeError(RifsCodecError):
    """Grid index outside its declared range."""


class MinSizeError(RifsCodecError):
    """Splitting would produce a region below the minimum cell size."""


# --- map construction / evaluation ---

class NotContractive(RifsCodecError):
    """A planar ratio is >= 1, so the map cannot contract."""


class OutOfRect(RifsCodecError):
    """Evaluation point lies outside the rectangle it belongs to."""


class EmptyRow(RifsCodecError):
    """A connection-matrix row has no successor to normalize over."""


class InvalidTransition(RifsCodecError):
    """Chaos-game step sampled a map the connection matrix forbids."""


# --- contractivity field ---

class SamplingError(RifsCodecError):
    """Sample counts do not divide the rectangle sides."""


class ShapeMismatch(RifsCodecError):
    """Distance grids disagree in shape."""


# --- encoder ---

class EmptyPool(RifsCodecError):
    """No domain of the requested size fits in the image."""


# --- decoder ---

class CorruptCode(RifsCodecError):
    """A region code references a domain or vertex that does not exist."""


# --- image and bitstream i/o ---

class FormatError(RifsCodecError):
    """File is not the PGM variant this codec reads."""


class DimensionError(RifsCodecError):
    """Image sides are not of the form 2**p + 1."""


class DimensionMismatch(RifsCodecError):
    """Two images that must agree in size do not."""


class MagicMismatch(RifsCodecError):
    """Stream does not start with the codec magic."""


class VersionError(RifsCodecError):
    """Stream version is not supported."""


class TruncatedStream(RifsCodecError):
    """Stream ended before a required field."""


class ChecksumError(RifsCodecError):
    """Stream checksum or trailing structure is inconsistent."""
