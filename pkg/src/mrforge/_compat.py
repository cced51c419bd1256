"""Backports of Python 3.11 standard-library names used by the package."""

import sys

if sys.version_info >= (3, 11):
    import tomllib
    from enum import StrEnum
else:
    from enum import Enum

    import tomli as tomllib

    class StrEnum(str, Enum):
        """Enum whose members are strings, as ``enum.StrEnum`` in 3.11."""

        __str__ = str.__str__
        __format__ = str.__format__

__all__ = ["StrEnum", "tomllib"]
