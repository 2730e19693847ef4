"""Utility module for configuration value checks"""

import numbers


def check_positive(name: str, value, strict: bool = True) -> bool:
    """
    This function checks whether a config value is a (strictly)
    positive real number. It raises a ValueError naming the
    field if it isn't.
    """

    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise ValueError(f"Config field '{name}' should be a number, "
                         f"got {value!r}.")

    if (strict and value <= 0) or (not strict and value < 0):
        bound = "> 0" if strict else ">= 0"
        raise ValueError(f"Config field '{name}' should be {bound}, "
                         f"got {value}.")

    return True


def check_integer(name: str, value, minimum: int = 1) -> bool:
    """
    This function checks whether a config value is an integer
    of at least `minimum`.
    """

    if not isinstance(value, numbers.Integral) or isinstance(value, bool):
        raise ValueError(f"Config field '{name}' should be an integer, "
                         f"got {value!r}.")
    if value < minimum:
        raise ValueError(f"Config field '{name}' should be >= {minimum}, "
                         f"got {value}.")

    return True


def check_decreasing(name: str, values) -> bool:
    """
    This function checks that a list of scale parameters is
    non-empty, positive and strictly decreasing.
    """

    if not isinstance(values, (list, tuple)) or len(values) == 0:
        raise ValueError(f"Config field '{name}' should be a non-empty list.")

    for value in values:
        check_positive(name, value)

    if any(b >= a for a, b in zip(values[:-1], values[1:])):
        raise ValueError(f"Config field '{name}' should be strictly "
                         f"decreasing, got {list(values)}.")

    return True


def check_keys(section: str, data: dict, allowed) -> bool:
    """
    This function checks a config section for unknown keys.
    Keys starting with an underscore are treated as comments.
    """

    unknown = [key for key in data
               if key not in allowed and not key.startswith("_")]

    if unknown:
        raise ValueError(f"Unknown key(s) in config section '{section}': "
                         f"{', '.join(unknown)}.")

    return True
