from fractions import Fraction

_RATIONAL_HELP = "expected an int, a [numerator, denominator] pair or a 'num/den' string"


def to_fraction(value) -> Fraction:
    """Coerce file / command-line input into an exact :class:`~fractions.Fraction`.

    Accepted forms:

    * ``Fraction`` and ``int`` values (``bool`` is rejected);
    * ``[numerator, denominator]`` pairs, the on-disk encoding;
    * strings such as ``"3"``, ``"1/2"`` or ``"0.25"``;
    * floats, converted through their decimal ``repr`` so ``1.5`` becomes ``3/2``.

    Raises:
        ValueError: If the value cannot be read as an exact rational.
    """
    if isinstance(value, bool):
        raise ValueError(f"{value!r}: {_RATIONAL_HELP}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise ValueError(f"{value!r}: {_RATIONAL_HELP}") from e
    if isinstance(value, (list, tuple)) and len(value) == 2:
        num, den = value
        if isinstance(num, int) and isinstance(den, int) and den != 0:
            return Fraction(num, den)
    raise ValueError(f"{value!r}: {_RATIONAL_HELP}")


def fraction_to_json(value: Fraction):
    """Serialise a Fraction as an int when integral, else as ``[num, den]``."""
    if value.denominator == 1:
        return value.numerator
    return [value.numerator, value.denominator]


def format_rational(value) -> str:
    """Render a rational as ``"num/den"``, collapsing ``"/1"``."""
    value = to_fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def parse_rational(text: str) -> Fraction:
    """``argparse`` type for rational flags such as ``--eps 1/100``."""
    return to_fraction(text)
