"""Typed abort outcome for gated private mechanisms."""


class Bottom:
    """Abort outcome of a gated mechanism.

    Mechanisms that first check a noisy size gate return ``BOTTOM`` instead
    of raising: aborting is itself a valid private output, and callers are
    expected to handle it (fall back, retain a previous value, or report a
    failed run).
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "BOTTOM"

    def __bool__(self):
        return False


BOTTOM = Bottom()


def is_bottom(value) -> bool:
    return value is BOTTOM
