"""Acceptance checks; each prints one PASS/FAIL line.

Run with pytest, or directly: python3 tests/test_acceptance.py
"""
import random
import sys
import time
import warnings
from fractions import Fraction
from pathlib import Path

import mpmath
import pytest
from flint import arb

sys.path.insert(0, str(Path(__file__).parent))

from test_geometry import cusps_equivalent_oracle, index_formula, random_sl2, same_right_coset  # noqa: E402

from maasscert.certifier import CertifyOptions, RemainderWarning, certify, choose_delta  # noqa: E402
from maasscert.characters import trivial_character  # noqa: E402
from maasscert.enclosure import ball  # noqa: E402
from maasscert.forms import load_form, shipped_example_path, with_coefficient  # noqa: E402
from maasscert.geometry import coset_representatives  # noqa: E402
from maasscert.special_functions import (DParameters, WhittakerEvaluator, compute_D,  # noqa: E402
                                         ode_residual)

FLAGSHIP = CertifyOptions(taylor_degree=45, n_samples=100, M0=40)
SMOKE = CertifyOptions(taylor_degree=20, n_samples=40, M0=25)


def report(name, ok, detail, out=None):
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    print(line, file=out or sys.stdout, flush=True)
    return ok


def _certify(form, opts):
    t = time.time()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RemainderWarning)
        cert = certify(form, opts)
    return cert, time.time() - t


_cache = {}


def form():
    if "form" not in _cache:
        _cache["form"] = load_form(shipped_example_path())
    return _cache["form"]


def smoke_cert():
    if "smoke" not in _cache:
        _cache["smoke"] = _certify(form(), SMOKE)
    return _cache["smoke"]


# 1 ---------------------------------------------------------------------------

def check_flagship():
    cert, dt = _certify(form(), FLAGSHIP)
    ok = cert.bound <= arb("1e-2")
    return report("1a flagship d=45 N=100 M0=40", ok,
                  f"bound {cert.to_jsonable()['bound']} (need <= 1e-2), {dt:.0f} s")


def check_smoke():
    cert, dt = smoke_cert()
    ok = cert.bound.is_finite() and cert.bound <= 1 and dt < 300
    return report("1b smoke d=20 N=40 M0=25", ok,
                  f"bound {cert.to_jsonable()['bound']} (need finite and <= 1), {dt:.0f} s")


# 2 ---------------------------------------------------------------------------

def check_cosets(samples_total=10_000):
    t = time.time()
    rng = random.Random(50)
    levels = range(1, 51)
    per = -(-samples_total // len(levels))
    bad = []
    for N in levels:
        system = coset_representatives(N, trivial_character(N))
        reps = system.reps
        if len(reps) != index_formula(N):
            bad.append(f"{N}: index")
        for i, M1 in enumerate(reps):
            if any(same_right_coset(N, M1, M2) for M2 in reps[i + 1:]):
                bad.append(f"{N}: duplicate coset")
                break
        for _ in range(per):
            g = random_sl2(rng)
            if sum(same_right_coset(N, g, M) for M in reps) != 1:
                bad.append(f"{N}: surjectivity")
                break
        cs = system.cusps
        for i, c1 in enumerate(cs):
            if any(cusps_equivalent_oracle(N, c1.a, c1.b, c2.a, c2.b) for c2 in cs[i + 1:]):
                bad.append(f"{N}: equivalent cusps")
                break
        for M in reps:
            c = system.cusp_of(M)
            a, b = (M.a, M.c) if M.c >= 0 else (-M.a, -M.c)
            if not cusps_equivalent_oracle(N, a, b, c.a, c.b):
                bad.append(f"{N}: cusp assignment")
                break
    dt = time.time() - t
    ok = not bad and dt < 60
    return report("2 coset systems N <= 50", ok,
                  f"{per * len(levels)} surjectivity samples, {dt:.1f} s"
                  + (f", failures {bad[:5]}" if bad else ""))


# 3 ---------------------------------------------------------------------------

def check_whittaker_grid(n=20):
    t = time.time()
    mpmath.mp.dps = 45
    bad = []
    for i in range(n):
        r = Fraction(15 * i, n - 1)
        ev = WhittakerEvaluator.from_r(arb(r.numerator) / r.denominator)
        mr = mpmath.mpf(r.numerator) / r.denominator
        for j in range(n):
            y = Fraction(1, 10) + Fraction(299 * j, 10 * (n - 1))
            yb = arb(y.numerator) / y.denominator
            my = mpmath.mpf(y.numerator) / y.denominator
            want = mpmath.sqrt(my) * mpmath.re(mpmath.besselk(1j * mr, my))
            tol = abs(want) * mpmath.mpf("1e-32") + mpmath.mpf("1e-60")
            W, _ = ev.whittaker(yb)
            if not W.overlaps(arb(mpmath.nstr(want, 40), mpmath.nstr(tol, 5))):
                bad.append((str(r), str(y), "value"))
            if not ode_residual(ev, yb).contains(0):
                bad.append((str(r), str(y), "ode"))
    dt = time.time() - t
    ok = not bad and dt < 120
    return report("3 Whittaker oracle 20x20", ok,
                  f"{n * n} points, {dt:.1f} s" + (f", failures {bad[:5]}" if bad else ""))


# 4 ---------------------------------------------------------------------------

def check_a4():
    a4 = form().a_inf(4)
    err = abs(a4 - arb("-0.481481902375692542713"))
    ok = err < arb("1e-18")
    return report("4 Hecke a(oo,4)", ok, f"a(oo,4) = {a4.real.str(24, radius=False)}, |diff| <= {err.upper().str(3, radius=False)}")


# 5 ---------------------------------------------------------------------------

STENCILS = {
    0: {0: 1},
    1: {-2: Fraction(1, 12), -1: Fraction(-2, 3), 1: Fraction(2, 3), 2: Fraction(-1, 12)},
    2: {-2: Fraction(-1, 12), -1: Fraction(4, 3), 0: Fraction(-5, 2), 1: Fraction(4, 3),
        2: Fraction(-1, 12)},
    3: {-3: Fraction(1, 8), -2: Fraction(-1), -1: Fraction(13, 8), 1: Fraction(-13, 8),
        2: Fraction(1), 3: Fraction(-1, 8)},
}


def _q(x):
    return arb(x.numerator) / x.denominator


def check_partials(points=20):
    t = time.time()
    rng = random.Random(2024)
    ev = form().evaluator("oo")
    h = Fraction(1, 1024)
    hb = _q(h)
    worst, bad = 0.0, []
    for _ in range(points):
        x0 = Fraction(rng.randrange(0, 10**6), 10**6)
        y0 = Fraction(8, 10) + Fraction(rng.randrange(0, 7 * 10**5), 10**6)
        vals = {}

        def f(i, j):
            if (i, j) not in vals:
                vals[(i, j)] = ev.evaluate(_q(x0 + i * h), _q(y0 + j * h))
            return vals[(i, j)]

        X, Y = _q(x0), _q(y0)
        for k in range(4):
            for l in range(4):
                fd = 0
                for i, ci in STENCILS[k].items():
                    for j, cj in STENCILS[l].items():
                        fd += _q(ci * cj) * f(i, j)
                fd /= hb ** (k + l)
                d = ev.evaluate_partials(X, Y, k, l)
                tol = hb ** 4 * (abs(ev.evaluate_partials(X, Y, k + 4, l))
                                 + abs(ev.evaluate_partials(X, Y, k, l + 4)))
                tol += d.rad() + fd.rad()
                err = abs(fd - d)
                worst = max(worst, float((err / (tol + arb("1e-300"))).upper()))
                if not err < tol:
                    bad.append((str(x0), str(y0), k, l))
    dt = time.time() - t
    return report("5 partials vs 4th-order FD", not bad,
                  f"{points} points, k,l <= 3, h = 1/1024, max err/tol = {worst:.2e}, {dt:.0f} s"
                  + (f", failures {bad[:5]}" if bad else ""))


# 6 ---------------------------------------------------------------------------

def check_defect_sensitivity():
    base, _ = smoke_cert()
    f = form()
    bumped = with_coefficient(f, "oo", 2, f.a_inf(2) + arb("1e-3"))
    opts = CertifyOptions(taylor_degree=20, n_samples=40, M0=25, validate=False)
    pert, _ = _certify(bumped, opts)
    ok = pert.bound > base.bound and pert.maxE.lower() > base.maxE.upper()
    return report("6 defect sensitivity a(oo,2) + 1e-3", ok,
                  f"bound {base.to_jsonable()['bound']} -> {pert.to_jsonable()['bound']}, "
                  f"maxE {base.maxE.upper().str(3, radius=False)} -> {pert.maxE.lower().str(3, radius=False)}")


# 7 ---------------------------------------------------------------------------

def check_D():
    f = form()
    delta = choose_delta(f.system, FLAGSHIP.n_samples)
    D0 = compute_D(f.whittaker, DParameters(5, 2, 2, delta))
    Ds = [compute_D(f.whittaker, DParameters(5, 2, 2, ball(d))) for d in ("0.005", "0.01", "0.02")]
    mono = all(Ds[i + 1].upper() <= Ds[i].lower() for i in range(2))
    ok = D0 > 0 and mono
    return report("7 D positivity and monotonicity", ok,
                  f"D(flagship delta {delta.str(6, radius=False)}) = {D0.str(6, radius=False)}; "
                  f"D(0.005, 0.01, 0.02) = {', '.join(d.str(6, radius=False) for d in Ds)}")


CHECKS = [check_flagship, check_smoke, check_cosets, check_whittaker_grid, check_a4,
          check_partials, check_defect_sensitivity, check_D]


@pytest.mark.parametrize("check", CHECKS, ids=[c.__name__ for c in CHECKS])
def test_acceptance(check, capsys):
    with capsys.disabled():
        print()
        ok = check()
    assert ok


if __name__ == "__main__":
    results = [c() for c in CHECKS]
    sys.exit(0 if all(results) else 1)
