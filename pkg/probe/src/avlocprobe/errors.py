class ProbeError(Exception):
    """Base class for probe failures (bad manifest, media, or checkpoint)."""
