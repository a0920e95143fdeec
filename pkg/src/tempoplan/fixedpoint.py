"""Exact fixed-point arithmetic on integer mantissas.

Every numeric value in the planner is a `Fixed`: an integer mantissa plus a
decimal count. Integers are the decimals=0 case. Mixed-scale operations
promote to the larger decimal count, division rounds half away from zero,
and nothing here ever touches binary floating point, so plan fixtures
reproduce bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DivisionByZero, NumericOutOfBounds


@dataclass(frozen=True)
class Fixed:
    mantissa: int
    decimals: int = 0

    def __post_init__(self):
        if self.decimals < 0:
            raise ValueError("decimals must be >= 0")

    # -- construction helpers -------------------------------------------------

    @staticmethod
    def parse(text: str) -> "Fixed":
        """Parse "123", "-4.50" etc.; decimal count is taken from the literal."""
        text = text.strip()
        neg = text.startswith("-")
        if neg or text.startswith("+"):
            body = text[1:]
        else:
            body = text
        if "." in body:
            whole, frac = body.split(".", 1)
            if not frac or not frac.isdigit() or (whole and not whole.isdigit()):
                raise ValueError(f"bad numeric literal: {text!r}")
            mant = int(whole or "0") * 10 ** len(frac) + int(frac)
            dec = len(frac)
        else:
            if not body.isdigit():
                raise ValueError(f"bad numeric literal: {text!r}")
            mant, dec = int(body), 0
        return Fixed(-mant if neg else mant, dec)

    def scaled(self, decimals: int) -> "Fixed":
        """Same value at a new scale; reducing scale must be exact."""
        if decimals == self.decimals:
            return self
        if decimals > self.decimals:
            return Fixed(self.mantissa * 10 ** (decimals - self.decimals), decimals)
        factor = 10 ** (self.decimals - decimals)
        if self.mantissa % factor:
            raise ValueError(f"cannot reduce {self} to {decimals} decimals exactly")
        return Fixed(self.mantissa // factor, decimals)

    # -- arithmetic ------------------------------------------------------------

    def _align(self, other: "Fixed") -> tuple[int, int, int]:
        dec = max(self.decimals, other.decimals)
        return self.scaled(dec).mantissa, other.scaled(dec).mantissa, dec

    def __add__(self, other: "Fixed") -> "Fixed":
        a, b, dec = self._align(other)
        return Fixed(a + b, dec)

    def __sub__(self, other: "Fixed") -> "Fixed":
        a, b, dec = self._align(other)
        return Fixed(a - b, dec)

    def __neg__(self) -> "Fixed":
        return Fixed(-self.mantissa, self.decimals)

    def __mul__(self, other: "Fixed") -> "Fixed":
        a, b, dec = self._align(other)
        return Fixed(_div_half_away(a * b, 10 ** dec), dec)

    def __truediv__(self, other: "Fixed") -> "Fixed":
        a, b, dec = self._align(other)
        if b == 0:
            raise DivisionByZero(f"{self} / {other}")
        return Fixed(_div_half_away(a * 10 ** dec, b), dec)

    # -- comparison: mantissas after scale promotion ---------------------------

    def __eq__(self, other):
        if not isinstance(other, Fixed):
            return NotImplemented
        a, b, _ = self._align(other)
        return a == b

    def __hash__(self):
        # normalize so 1.0 and 1.00 hash alike
        m, d = self.mantissa, self.decimals
        while d > 0 and m % 10 == 0:
            m //= 10
            d -= 1
        return hash((m, d))

    def __lt__(self, other):
        a, b, _ = self._align(other)
        return a < b

    def __le__(self, other):
        a, b, _ = self._align(other)
        return a <= b

    def __gt__(self, other):
        a, b, _ = self._align(other)
        return a > b

    def __ge__(self, other):
        a, b, _ = self._align(other)
        return a >= b

    # -- rendering ---------------------------------------------------------------

    def __str__(self):
        if self.decimals == 0:
            return str(self.mantissa)
        sign = "-" if self.mantissa < 0 else ""
        mant = abs(self.mantissa)
        whole, frac = divmod(mant, 10 ** self.decimals)
        return f"{sign}{whole}.{frac:0{self.decimals}d}"

    def __repr__(self):
        return f"Fixed({self})"


def _div_half_away(num: int, den: int) -> int:
    """Integer division rounding half away from zero. den > 0."""
    if den <= 0:
        raise ValueError("denominator must be positive")
    if num >= 0:
        return (2 * num + den) // (2 * den)
    return -((2 * -num + den) // (2 * den))


ZERO = Fixed(0)
ONE = Fixed(1)


@dataclass(frozen=True)
class NumericDomain:
    """Declared value range for a numeric fluent or resource.

    Bounds live in the domain's own scale: `lo`/`hi` are mantissas at
    `decimals`. `kind` is "integer" (decimals 0) or "fixed".
    """

    kind: str
    decimals: int
    lo: int
    hi: int

    def __post_init__(self):
        if self.kind not in ("integer", "fixed"):
            raise ValueError(f"bad numeric kind {self.kind!r}")
        if self.kind == "integer" and self.decimals != 0:
            raise ValueError("integer domains carry no decimals")
        if self.kind == "fixed" and self.decimals < 1:
            raise ValueError("fixed-point domains need decimals >= 1")
        if self.lo > self.hi:
            raise ValueError("empty numeric domain (min > max)")

    @property
    def minimum(self) -> Fixed:
        return Fixed(self.lo, self.decimals)

    @property
    def maximum(self) -> Fixed:
        return Fixed(self.hi, self.decimals)

    def check(self, value: Fixed, what: str = "value") -> Fixed:
        """Bounds are enforced at assignment time, not mid-expression."""
        v = value.scaled(self.decimals) if value.decimals <= self.decimals else value
        if not (self.minimum <= value <= self.maximum):
            raise NumericOutOfBounds(
                f"{what} {value} outside [{self.minimum}, {self.maximum}]"
            )
        if value.decimals > self.decimals:
            try:
                v = value.scaled(self.decimals)
            except ValueError:
                raise NumericOutOfBounds(
                    f"{what} {value} needs more than {self.decimals} decimals"
                ) from None
        return v
