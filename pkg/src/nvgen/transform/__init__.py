from nvgen.transform.base import (
    Location,
    NotApplicable,
    Variant,
    make_location,
)

__all__ = ["Location", "NotApplicable", "Variant", "make_location"]
