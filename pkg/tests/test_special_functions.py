import random

import mpmath
import pytest
from flint import acb, arb

from maasscert.enclosure import ball
from maasscert.special_functions import (DParameters, WhittakerError, WhittakerEvaluator,
                                         compute_D, ode_residual, whittaker, whittaker_abs_bound,
                                         whittaker_derivatives, whittaker_sup_bound)

LAM5 = "24.1990953284330163389316822199"


def oracle_W(r, y, dps=40):
    mpmath.mp.dps = dps
    r, y = mpmath.mpf(r), mpmath.mpf(y)
    return mpmath.sqrt(y) * mpmath.re(mpmath.besselk(1j * r, y))


def as_ball(x, rad="1e-35"):
    return arb(mpmath.nstr(x, 45), rad)


def test_r0_y1():
    ev = WhittakerEvaluator.from_r(0)
    W, dW = whittaker(ev, ball(1))
    assert W.overlaps(as_ball(oracle_W(0, 1)))
    assert W.overlaps(arb("0.4210244382407083333", "1e-19"))
    mpmath.mp.dps = 40
    want = mpmath.besselk(0, 1) / 2 - mpmath.besselk(1, 1)
    assert dW.overlaps(as_ball(want))
    assert dW.overlaps(arb("-0.39140", "1e-5"))


def test_level5_at_two_pi():
    ev = WhittakerEvaluator(ball(LAM5))
    y = 2 * arb.pi()
    W, _ = ev.whittaker(y)
    assert W.is_finite() and not W.contains(0)
    assert abs(W).upper() < (arb.pi() / 2).sqrt() * (-y).exp()
    mpmath.mp.dps = 40
    r = mpmath.sqrt(mpmath.mpf(LAM5) - mpmath.mpf(1) / 4)
    assert W.overlaps(as_ball(oracle_W(r, 2 * mpmath.pi)))


def test_decay_envelope():
    for r in (0, 3, 4.89):
        ev = WhittakerEvaluator.from_r(arb(str(r)))
        for y in (1, 2, 5, 12):
            W, _ = ev.whittaker(ball(y))
            assert abs(W).upper() <= (arb.pi() / 2).sqrt() * (-arb(y)).exp() * arb("1.0000001")


def test_derivatives_follow_ode():
    ev = WhittakerEvaluator(ball(LAM5))
    y = ball("1.7")
    ds = whittaker_derivatives(ev, y, 2)
    assert (ds[2] - (1 - ev.lam / (y * y)) * ds[0]).contains(0)
    assert len(whittaker_derivatives(ev, y, 0)) == 1


def test_ode_residual_random():
    rng = random.Random(7)
    for _ in range(50):
        r = arb(str(round(rng.uniform(0, 15), 6)))
        y = arb(str(round(rng.uniform(0.1, 30), 6)))
        ev = WhittakerEvaluator.from_r(r)
        assert ode_residual(ev, y).contains(0)


def test_higher_derivatives_against_oracle():
    ev = WhittakerEvaluator(ball(LAM5))
    mpmath.mp.dps = 40
    rr = mpmath.sqrt(mpmath.mpf(LAM5) - mpmath.mpf(1) / 4)
    f = lambda t: mpmath.sqrt(t) * mpmath.re(mpmath.besselk(1j * rr, t))
    ds = whittaker_derivatives(ev, ball(3), 4)
    for k in range(5):
        want = mpmath.diff(f, mpmath.mpf(3), k)
        assert ds[k].overlaps(arb(mpmath.nstr(want, 30), "1e-25"))


def test_y_must_be_positive():
    ev = WhittakerEvaluator.from_r(1)
    with pytest.raises(WhittakerError):
        ev.whittaker(ball(0, "0.01"))


def test_abs_bound_complex():
    ev = WhittakerEvaluator.from_r(arb("4.89"))
    for y in ("0.5", "2", "7"):
        W, _ = ev.whittaker(ball(y))
        assert abs(W) <= whittaker_abs_bound(acb(ball(y)))
    with pytest.raises(WhittakerError):
        whittaker_abs_bound(acb(-1, 1))


def test_sup_bound_formula():
    def tight_upper(got, want):
        return got >= want and (got - want) < arb("1e-30")

    assert tight_upper(whittaker_sup_bound(0, 1, 0), arb.pi().sqrt())
    assert tight_upper(whittaker_sup_bound(1, 1, 0), arb.pi().sqrt())
    want = arb.pi().sqrt() * 6 * (2 * (-ball("0.01")).exp()) ** -3
    assert tight_upper(whittaker_sup_bound(3, 2, ball("0.01")), want)


def d_oracle(lam, N, m, k, delta, omega):
    mpmath.mp.dps = 45      # 30 digits loses ~1e-20 relative inside besselk
    r = mpmath.sqrt(mpmath.mpf(lam) - mpmath.mpf(1) / 4)
    g = lambda y: 2 * mpmath.pi * y * mpmath.re(mpmath.besselk(1j * r, 2 * mpmath.pi * y)) ** 2 / y**2
    A = mpmath.mpf(m) ** k * mpmath.exp(mpmath.mpf(delta))
    s3 = mpmath.sqrt(3)
    main = mpmath.quad(g, [A, A + 1, A + 3, A + 8, mpmath.inf])
    out = 2**omega * main
    if N >= 3:
        out += mpmath.quad(g, [A / s3, A]) - mpmath.quad(g, [A, A * s3])
    return out


def test_D_against_oracle():
    ev = WhittakerEvaluator(ball(LAM5))
    D = compute_D(ev, DParameters(5, 2, 2, ball("0.01")))
    assert D > 0
    want = d_oracle(LAM5, 5, 2, 2, "0.01", 1)
    assert D.overlaps(arb(mpmath.nstr(want, 28), mpmath.nstr(abs(want) * mpmath.mpf("1e-20"), 5)))


def test_D_level_one_form():
    ev = WhittakerEvaluator.from_r(0.5)
    D = compute_D(ev, DParameters(1, 2, 1, ball("0.02")))
    want = d_oracle("0.5", 1, 2, 1, "0.02", 0)
    assert D.overlaps(arb(mpmath.nstr(want, 28), mpmath.nstr(abs(want) * mpmath.mpf("1e-20"), 5)))


def test_D_monotone_in_delta():
    ev = WhittakerEvaluator(ball(LAM5))
    Ds = [compute_D(ev, DParameters(5, 2, 2, ball(d))) for d in ("0.005", "0.01", "0.02")]
    assert Ds[1].upper() <= Ds[0].lower() and Ds[2].upper() <= Ds[1].lower()


def test_D_requires_positive_delta():
    ev = WhittakerEvaluator(ball(LAM5))
    with pytest.raises(WhittakerError):
        compute_D(ev, DParameters(5, 2, 2, ball(0)))


def test_cache_does_not_change_values():
    a = WhittakerEvaluator(ball(LAM5))
    b = WhittakerEvaluator(ball(LAM5))
    y = ball("0.77")
    first = a.whittaker(y)
    a.whittaker(y)
    again = a.whittaker(y)
    fresh = b.whittaker(y)
    for u, v, w in zip(first, again, fresh):
        assert u.mid() == v.mid() == w.mid() and u.rad() == v.rad() == w.rad()
