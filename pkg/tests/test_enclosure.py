import random
from fractions import Fraction

import flint
import mpmath
import pytest
from flint import acb, arb
from hypothesis import given, settings, strategies as st

from maasscert.enclosure import (EnclosureError, ball, ball_add, ball_div, ball_exp, ball_from_key,
                                 ball_key, ball_log, ball_lower, ball_mul, ball_sqrt, ball_upper,
                                 cball, dumps, enclosure_strs, exact_fraction, upper_str,
                                 working_precision)


def test_add_exact_integers():
    s = ball_add(ball(1), ball(2))
    assert s.contains(3)
    assert s.rad() <= arb("1e-30")


def test_sqrt_of_four():
    assert ball_sqrt(ball(4)).contains(2)


def test_exp_near_one():
    e = ball_exp(ball(1, "1e-20"))
    mpmath.mp.dps = 40
    assert e.contains(arb(mpmath.nstr(mpmath.e, 35)))
    assert e.rad() <= arb("1e-18")


def test_domain_errors_are_explicit():
    with pytest.raises(EnclosureError):
        ball_div(ball(1), ball(0, "0.1"))
    with pytest.raises(EnclosureError):
        ball_sqrt(ball(-1))
    with pytest.raises(EnclosureError):
        ball_log(ball(0, "1e-3"))


def test_endpoints():
    assert ball_upper(ball(1, "0.5")) >= arb("1.5")
    assert ball_upper(ball(1, "0.5")) < arb("1.5000001")
    assert ball_lower(ball(0)) == 0
    assert ball_upper(ball(arb.pi(), "1e-10")) >= arb.pi()
    assert ball_lower(ball(arb.pi(), "1e-10")) <= arb.pi()


def test_string_is_exact_decimal():
    x = ball("0.1")
    assert exact_fraction(ball_lower(x)) <= Fraction(1, 10) <= exact_fraction(ball_upper(x))


def test_key_round_trip_contains():
    for x in (arb.pi(), ball("24.199", "1e-25"), arb(0), arb(-3) / 7):
        y = ball_from_key(ball_key(x))
        assert y.contains(x)
        assert y.mid() == x.mid()


def test_upper_str_rounds_up():
    x = arb(2) / 3
    assert arb(upper_str(x, 5)) >= x
    lo, hi = enclosure_strs(x, 8)
    assert arb(lo) <= x <= arb(hi)


def test_working_precision_restores():
    old = flint.ctx.prec
    with working_precision(300):
        assert flint.ctx.prec == 300
    assert flint.ctx.prec == old


def test_dumps_keeps_matrices_on_one_line():
    s = dumps({"m": [[0, -1], [1, 2]], "v": ["1", "2"]})
    assert '"m": [[0, -1], [1, 2]]' in s


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3),
       st.lists(st.floats(0, 1e-3), min_size=3, max_size=3))
def test_containment_fuzz(mids, rads):
    """A composed expression contains its value at random members of the inputs."""
    xs = [ball(str(m), str(r)) for m, r in zip(mids, rads)]
    a, b, c = xs
    expr = ball_exp(ball_mul(a, b)) + c * c
    mpmath.mp.dps = 60
    rng = random.Random(hash((tuple(mids), tuple(rads))))
    for _ in range(3):
        pts = [mpmath.mpf(str(m)) + mpmath.mpf(str(r)) * (2 * rng.random() - 1)
               for m, r in zip(mids, rads)]
        val = mpmath.exp(pts[0] * pts[1]) + pts[2] ** 2
        assert expr.overlaps(arb(mpmath.nstr(val, 50), "1e-45"))


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 5), st.floats(0, 1e-3), st.floats(0, 1e-3))
def test_radius_monotone(m, r1, r2):
    lo, hi = sorted((r1, r2))
    f = lambda x: ball_sqrt(x) * ball_exp(x)
    assert f(ball(str(m), str(lo))).rad() <= f(ball(str(m), str(hi))).rad()


def test_cball():
    z = cball(1, 2)
    assert isinstance(z, acb) and z.real.contains(1) and z.imag.contains(2)
