"""Ball arithmetic layer.

Real and complex balls are the ``arb`` and ``acb`` types of python-flint
(Arb library): every operation returns a midpoint-radius enclosure of the
exact result.  This module adds the small amount of policy on top:

* domain checks that raise instead of silently widening to the whole line,
* certified endpoints as exact dyadics and as outward-rounded decimals,
* a precision context manager,
* exact (de)serialization of balls, used for caching and certificates.
"""

from __future__ import annotations

import contextlib
import decimal
import json
import re
from fractions import Fraction
from typing import Iterator, Sequence, Union

import flint
from flint import acb, arb

Ball = arb
CBall = acb

DEFAULT_PRECISION = 128

Number = Union[int, float, str, Fraction, arb]


class EnclosureError(ArithmeticError):
    """A ball operation left its mathematical domain."""


@contextlib.contextmanager
def working_precision(bits: int) -> Iterator[int]:
    """Temporarily set the global working precision (in mantissa bits)."""
    if bits < 16:
        raise ValueError(f"precision too small: {bits}")
    old = flint.ctx.prec
    flint.ctx.prec = int(bits)
    try:
        yield int(bits)
    finally:
        flint.ctx.prec = old


def get_precision() -> int:
    return flint.ctx.prec


def ball(value: Number, rad: Number | None = None) -> arb:
    """Build a real ball.  Strings are parsed as exact decimals (plus rounding)."""
    if isinstance(value, Fraction):
        b = arb(flint.fmpq(value.numerator, value.denominator))
    elif isinstance(value, arb):
        b = value
    else:
        b = arb(value)
    if rad is not None:
        r = ball(rad)
        if r < 0:
            raise EnclosureError("negative radius")
        b = b + arb(0, r.abs_upper())
    return b


def cball(re: Number, im: Number = 0, rad: Number | None = None) -> acb:
    """Complex ball with the same radius applied to both components."""
    return acb(ball(re, rad), ball(im, rad))


# ---------------------------------------------------------------------------
# checked operations

def _real(x) -> arb:
    return x if isinstance(x, arb) else ball(x)


def ball_add(x, y) -> arb:
    return _real(x) + _real(y)


def ball_sub(x, y) -> arb:
    return _real(x) - _real(y)


def ball_mul(x, y) -> arb:
    return _real(x) * _real(y)


def ball_div(x, y) -> arb:
    y = _real(y)
    if y.contains(0):
        raise EnclosureError(f"division by a ball containing 0: {y}")
    return _real(x) / y


def ball_sqrt(x) -> arb:
    x = _real(x)
    if not x > 0:
        if x.is_exact() and x == 0:
            return arb(0)
        raise EnclosureError(f"sqrt of a ball not strictly positive: {x}")
    return x.sqrt()


def ball_log(x) -> arb:
    x = _real(x)
    if not x > 0:
        raise EnclosureError(f"log of a ball not strictly positive: {x}")
    return x.log()


def ball_exp(x) -> arb:
    return _real(x).exp()


def ball_sin(x) -> arb:
    return _real(x).sin()


def ball_cos(x) -> arb:
    return _real(x).cos()


def ball_pow(x, y) -> arb:
    """x**y, requiring x > 0 unless y is an exact nonnegative integer."""
    x, y = _real(x), _real(y)
    if y.is_exact() and y.is_integer() and y >= 0:
        return x ** int(y.unique_fmpz())
    if not x > 0:
        raise EnclosureError(f"real power of a ball not strictly positive: {x}")
    return (y * x.log()).exp()


def cdiv(x: acb, y: acb) -> acb:
    if acb(y).contains(0):
        raise EnclosureError(f"division by a complex ball containing 0: {y}")
    return acb(x) / acb(y)


def require_finite(x, what: str = "value"):
    if isinstance(x, acb):
        ok = x.real.is_finite() and x.imag.is_finite()
    else:
        ok = x.is_finite()
    if not ok:
        raise EnclosureError(f"{what} is not finite: {x}")
    return x


# ---------------------------------------------------------------------------
# endpoints

def ball_upper(x) -> arb:
    """Exact dyadic upper endpoint (an exact arb)."""
    return _real(x).upper()


def ball_lower(x) -> arb:
    return _real(x).lower()


def abs_upper(x) -> arb:
    """Exact upper bound of |x| for a real or complex ball."""
    return x.abs_upper() if isinstance(x, (arb, acb)) else arb(abs(x))


def abs_lower(x) -> arb:
    return x.abs_lower() if isinstance(x, (arb, acb)) else arb(abs(x))


def ball_max(balls: Sequence[arb]) -> arb:
    """Ball containing max of the members (canonical left-to-right fold)."""
    it = iter(balls)
    try:
        out = next(it)
    except StopIteration:
        raise ValueError("empty sequence") from None
    for b in it:
        out = out.max(b)
    return out


def exact_fraction(x: arb) -> Fraction:
    """Exact rational value of an exact ball (e.g. an endpoint)."""
    if not x.is_exact():
        raise EnclosureError("ball is not exact")
    if not x.is_finite():
        raise EnclosureError("ball is not finite")
    m, e = x.man_exp()
    m, e = int(m), int(e)
    return Fraction(m * 2**e) if e >= 0 else Fraction(m, 2**(-e))


def _decimal_string(q: Fraction, digits: int, rounding: str) -> str:
    ctx = decimal.Context(prec=digits, rounding=rounding)
    num = ctx.divide(decimal.Decimal(q.numerator), decimal.Decimal(q.denominator))
    return format(num, "e") if num != 0 else "0"


def upper_str(x, digits: int = 20) -> str:
    """Decimal string that is >= every member of x."""
    return _decimal_string(exact_fraction(ball_upper(x)), digits, decimal.ROUND_CEILING)


def lower_str(x, digits: int = 20) -> str:
    """Decimal string that is <= every member of x."""
    return _decimal_string(exact_fraction(ball_lower(x)), digits, decimal.ROUND_FLOOR)


def enclosure_strs(x, digits: int = 20) -> list[str]:
    return [lower_str(x, digits), upper_str(x, digits)]


def mid_float(x) -> float:
    """Midpoint as a float, for logging only."""
    return float(x.mid()) if isinstance(x, arb) else complex(x.mid())


# ---------------------------------------------------------------------------
# exact serialization

def ball_key(x) -> tuple:
    """Hashable exact description of a ball (midpoint and radius)."""
    if isinstance(x, acb):
        return (ball_key(x.real), ball_key(x.imag))
    m = x.mid().man_exp()
    r = x.rad().man_exp()
    return (int(m[0]), int(m[1]), int(r[0]), int(r[1]))


def ball_from_key(key: tuple) -> arb:
    """Rebuild a ball from ball_key output.

    The midpoint is restored exactly; the radius may come back rounded up by
    one unit of the 30-bit radius mantissa, so the result contains the
    original ball.
    """
    mm, me, rm, re = key
    # enough bits that the mantissa is stored exactly
    with working_precision(max(abs(mm).bit_length(), abs(rm).bit_length(), 16) + 8):
        mid = arb(flint.fmpz(mm)) * arb(2) ** me
        rad = arb(flint.fmpz(rm)) * arb(2) ** re
        return arb(mid, rad)


def to_jsonable(x) -> dict:
    """Lossless JSON form: decimal endpoints plus the exact dyadic key."""
    if isinstance(x, acb):
        return {"re": to_jsonable(x.real), "im": to_jsonable(x.imag)}
    return {"lo": lower_str(x), "hi": upper_str(x), "exact": list(ball_key(x))}


_FLAT_LIST = re.compile(r'\[\s+([^\[\]{}"]*?)\s+\]')
_NESTED_LIST = re.compile(r'\[\s+(\[[^{}"]*?\])\s+\]')


def dumps(obj, indent: int = 2) -> str:
    """json.dumps with numeric lists (and lists of them) kept on one line."""
    s = json.dumps(obj, indent=indent)
    s = _FLAT_LIST.sub(lambda m: "[" + ", ".join(x.strip() for x in m.group(1).split(",")) + "]", s)
    return _NESTED_LIST.sub(lambda m: "[" + re.sub(r"\],\s+\[", "], [", m.group(1)) + "]", s)
