"""Taylor coefficients in log-polar coordinates of a cusp expansion through a chart.

A chart is the map s -> zeta(s) = U (R e^{i theta0} e^s) with U an integer
matrix of positive determinant and R in {1, 1/sqrt 3}.  Writing
s = t + i phi, the point R e^{t + i(theta0 + phi)} is what the region
analysis calls z, and f_a(zeta) is one side of the defect E(t, theta).

f_a is real analytic, not holomorphic, so the expansion goes through four
exact linear maps:

    f(x0 + X, y0 + Y) = sum F[k,l] X^k Y^l                 (term sums)
    X = (q + qbar)/2, Y = (q - qbar)/(2i), q = zeta(s) - zeta(0)
    -> sum G[a,b] q^a qbar^b -> sum H[u,v] s^u sbar^v -> sum c[r,w] t^r phi^w.

Only total degree < d is kept; every step is exact in that range because
q has no constant term.  The remainder comes from a Cauchy estimate on the
complexified (t, phi) polydisc, see ``polydisc_majorant``.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

import flint
from flint import acb, acb_mat, acb_series, arb, fmpq

from .enclosure import EnclosureError, ball_key
from .special_functions import WhittakerEvaluator, taylor_from_seed, whittaker_abs_bound


class ChartError(EnclosureError):
    pass


@dataclass(frozen=True)
class Chart:
    """zeta = U(R e^{i pi q} e^s), U = (a, b, c, d) with ad - bc > 0."""
    a: int
    b: int
    c: int
    d: int
    inv_sqrt3: bool = False   # R = 1/sqrt(3) instead of 1

    def __post_init__(self):
        if self.a * self.d - self.b * self.c <= 0:
            raise ChartError("chart matrix must have positive determinant")

    @classmethod
    def from_matrix(cls, m, inv_sqrt3: bool = False) -> "Chart":
        return cls(m.a, m.b, m.c, m.d, inv_sqrt3)

    @property
    def det(self) -> int:
        return self.a * self.d - self.b * self.c

    def radius(self) -> arb:
        return 1 / arb(3).sqrt() if self.inv_sqrt3 else arb(1)

    def apply(self, z):
        den = self.c * z + self.d
        if den.contains(0):
            raise ChartError("chart denominator not bounded away from 0")
        if self.c == 0:
            return (self.a * z + self.b) / self.d
        # a/c - det/(c (cz + d)): z enters once, so boxes stay tight
        return acb(self.a) / self.c - acb(self.det) / (self.c * den)


def unit_point(q: Fraction) -> acb:
    """e^{i pi q}, computed from the canonical q' = min(q, 1 - q) on [0, 1]."""
    q = Fraction(q)
    if not 0 <= q <= 1:
        raise ChartError("angle parameter must lie in [0, 1]")
    flip = q > Fraction(1, 2)
    qq = 1 - q if flip else q
    s, c = arb.sin_cos_pi_fmpq(fmpq(qq.numerator, qq.denominator))
    return acb(-c if flip else c, s)


def base_point(chart: Chart, q: Fraction) -> acb:
    return chart.radius() * unit_point(q)


# ---------------------------------------------------------------------------
# exact transfer matrices

@lru_cache(maxsize=None)
def _xy_to_qq(g: int, prec: int) -> acb_mat:
    """L[k, a]: coefficient of q^a qbar^(g-a) in X^k Y^(g-k)."""
    rows = []
    inv2i = acb(0, -1) / 2   # 1/(2i)
    for k in range(g + 1):
        l = g - k
        scale = acb(arb(2) ** (-k)) * inv2i ** l
        row = []
        for a in range(g + 1):
            s = 0
            for j in range(max(0, a - l), min(k, a) + 1):
                s += comb(k, j) * comb(l, a - j) * (-1) ** (l - (a - j))
            row.append(scale * s)
        rows.append(row)
    return acb_mat(rows)


@lru_cache(maxsize=None)
def _ss_to_tphi(g: int, prec: int) -> acb_mat:
    """K[u, w]: coefficient of t^(g-w) phi^w in (t + i phi)^u (t - i phi)^(g-u)."""
    ipow = [acb(1), acb(0, 1), acb(-1), acb(0, -1)]
    rows = []
    for u in range(g + 1):
        v = g - u
        row = []
        for w in range(g + 1):
            s = acb(0)
            for j in range(max(0, w - v), min(u, w) + 1):
                s += comb(u, j) * comb(v, w - j) * ipow[j % 4] * ipow[(3 * (w - j)) % 4]
            row.append(s)
        rows.append(row)
    return acb_mat(rows)


# ---------------------------------------------------------------------------

@dataclass
class SideExpansion:
    """Taylor data of one side at one base point."""
    coeffs: list[list[acb]]      # coeffs[r][w], r + w < d
    zeta0: acb
    degree: int

    def value(self) -> acb:
        return self.coeffs[0][0]

    def truncated_sum(self, t, phi) -> acb:
        out = acb(0)
        for r, row in enumerate(self.coeffs):
            for w, c in enumerate(row):
                out += c * acb(t) ** r * acb(phi) ** w
        return out


@contextmanager
def series_length(n: int):
    """flint truncates series products at ctx.cap (default 10); lift it."""
    old = flint.ctx.cap
    flint.ctx.cap = max(old, n)
    try:
        yield
    finally:
        flint.ctx.cap = old


def chart_series(chart: Chart, q: Fraction, d: int) -> acb_series:
    with series_length(d):
        return _chart_series(chart, q, d)


def _chart_series(chart: Chart, q: Fraction, d: int) -> acb_series:
    z0 = base_point(chart, q)
    z = acb_series([z0], prec=d) * acb_series([0, 1], prec=d).exp()
    num = z * chart.a + chart.b
    den = z * chart.c + chart.d
    if acb(den.coeffs()[0]).contains(0):
        raise ChartError("chart pole at base point")
    return num / den


def _coeff_list(s: acb_series, d: int) -> list[acb]:
    c = list(s.coeffs())
    return [acb(x) for x in c[:d]] + [acb(0)] * max(0, d - len(c))


def side_expansion(terms, whittaker: WhittakerEvaluator, chart: Chart, q: Fraction,
                   d: int) -> SideExpansion:
    """Coefficients c[r][w] of f(zeta(t + i phi)) for r + w < d.

    ``terms`` are (n, nu, 2 pi |nu|, kappa) tuples from an ExpansionEvaluator.
    """
    prec = flint.ctx.prec
    zeta = chart_series(chart, q, d)
    zc = _coeff_list(zeta, d)
    zeta0 = zc[0]
    x0, y0 = zeta0.real, zeta0.imag
    if not y0 > 0:
        raise ChartError("chart base point not in the upper half plane")
    qs = acb_series([0] + zc[1:], prec=d)

    # Q[a][u]: coefficient of s^u in q^a
    Q = [[acb(1)] + [acb(0)] * (d - 1)]
    with series_length(d):
        p = acb_series([1], prec=d)
        for _ in range(1, d):
            p = p * qs
            Q.append(_coeff_list(p, d))

    # F[k][l] = sum_n D_n A[n,k] B[n,l]
    two_pi_i = acb(0, 2 * arb.pi())
    arows, brows = [], []
    wcache: dict = {}
    for n, nu, scale, kappa in terms:
        Dn = kappa * (two_pi_i * nu * x0).exp()
        step = two_pi_i * nu
        arow, v = [], acb(1)
        for k in range(d):
            arow.append(Dn * v)
            v = v * step / (k + 1)
        arows.append(arow)
        key = ball_key(scale)
        hit = wcache.get(key)
        if hit is None:
            Y = scale * y0
            W, Wp = whittaker.whittaker(Y)
            u = taylor_from_seed(whittaker.lam, Y, W, Wp, d)
            brow, sp = [], arb(1)
            for l in range(d):
                brow.append(acb(u[l] * sp))
                sp = sp * scale
            wcache[key] = hit = brow
        brows.append(hit)
    if not arows:
        zero = [[acb(0)] * (d - r) for r in range(d)]
        return SideExpansion(zero, zeta0, d)
    F = acb_mat(arows).transpose() * acb_mat(brows)

    # G[a][b]
    G = [[acb(0)] * d for _ in range(d)]
    for g in range(d):
        vec = acb_mat([[F[k, g - k]] for k in range(g + 1)])
        out = _xy_to_qq(g, prec).transpose() * vec
        for a in range(g + 1):
            G[a][g - a] = out[a, 0]

    Qm = acb_mat(Q)
    Qbar = Qm.conjugate()
    H = Qm.transpose() * acb_mat(G) * Qbar

    coeffs = [[acb(0)] * (d - r) for r in range(d)]
    for g in range(d):
        vec = acb_mat([[H[u, g - u] for u in range(g + 1)]])
        out = vec * _ss_to_tphi(g, prec)
        for w in range(g + 1):
            coeffs[g - w][w] = out[0, w]
    return SideExpansion(coeffs, zeta0, d)


def combine(a: SideExpansion, b: SideExpansion, omega: acb) -> list[list[acb]]:
    """Coefficients of f_A - omega f_B."""
    return [[ca - omega * cb for ca, cb in zip(ra, rb)]
            for ra, rb in zip(a.coeffs, b.coeffs)]


def taylor_part_bound(coeffs: list[list[acb]], rho: arb) -> arb:
    """sum_i rho^i sum_{r+w=i} |c[r][w]| as an upper bound."""
    d = len(coeffs)
    total = arb(0)
    for g in range(d):
        s = arb(0)
        for w in range(g + 1):
            s += abs(coeffs[g - w][w]).upper()
        total += s * rho ** g
    return total.upper()


# ---------------------------------------------------------------------------
# remainder

MAJORANT_PIECES = 6

def _hull(values: list[arb]) -> arb:
    lo = values[0].lower()
    hi = values[0].upper()
    for v in values[1:]:
        lo, hi = lo.min(v.lower()), hi.max(v.upper())
    return (lo + hi) / 2 + arb(0, ((hi - lo) / 2).upper())


def _image_hull(chart: Chart, z0: acb, half: arb, pieces: int = MAJORANT_PIECES) -> acb:
    """Rectangle containing chart(z0 e^s) for s in [-half, half]^2.

    One ball evaluation of the whole square wraps badly; the hull of the
    images of a grid of sub-squares is nearly the true bounding box.
    """
    step = 2 * half / pieces
    r = step / 2
    re, im = [], []
    for i in range(pieces):
        for j in range(pieces):
            s = acb(-half + r * (2 * i + 1) + arb(0, r), -half + r * (2 * j + 1) + arb(0, r))
            w = chart.apply(z0 * s.exp())
            re.append(w.real)
            im.append(w.imag)
    return acb(_hull(re), _hull(im))


def polydisc_majorant(terms, chart: Chart, q: Fraction, tau: arb) -> arb | None:
    """Upper bound of |f(zeta)| for complex t, phi with |t|, |phi| <= tau.

    x and y are continued as (zeta(s) +- conj(zeta(conj s')))/..., and each
    term obeys |W(Z)| <= sqrt((pi/2)|Z|/Re Z) e^{-Re Z}, |e(nu x)| <=
    exp(2 pi |nu| |Im x|).  Returns None if Re y is not certified positive.
    """
    z0 = base_point(chart, q)
    try:
        zeta = _image_hull(chart, z0, 2 * tau)     # s = t + i phi, |s| <= 2 tau
    except ChartError:
        return None
    other = zeta.conjugate()   # the box is symmetric, so zeta(conj s') has this range
    x = (zeta + other) / 2
    y = (zeta - other) / acb(0, 2)
    if not y.real > 0:
        return None
    imx = abs(x.imag).upper()
    total = arb(0)
    for n, nu, scale, kappa in terms:
        Z = scale * y
        if not Z.real > 0:
            return None
        total += abs(kappa).upper() * whittaker_abs_bound(Z) * (scale * imx).exp()
    return total.upper()


def remainder_bound(majorant: arb, varrho: int, d: int) -> arb:
    """|sum_{i >= d} homogeneous parts| <= M varrho^-d / (1 - 1/varrho)."""
    v = arb(varrho)
    return (majorant * v ** (-d) / (1 - 1 / v)).upper()


# ---------------------------------------------------------------------------
# the P-recursion (small degree cross-check)

def p_polynomials(order: int) -> dict:
    """P(r, s, k, l) as polynomials in (X, y) with X = x - a/h.

    Polynomials are dicts {(i, j): int} meaning X^i y^j.  Relations:
      P(r+1,s,k,l) = X(dP/dx + P(..k-1,l)) + y(dP/dy + P(..k,l-1))
      P(r,s+1,k,l) = -y(dP/dx + P(..k-1,l)) + X(dP/dy + P(..k,l-1)).
    """
    def add(p, q, c=1):
        out = dict(p)
        for key, v in q.items():
            out[key] = out.get(key, 0) + c * v
            if out[key] == 0:
                del out[key]
        return out

    def dx(p):
        return {(i - 1, j): i * v for (i, j), v in p.items() if i}

    def dy(p):
        return {(i, j - 1): j * v for (i, j), v in p.items() if j}

    def mulX(p):
        return {(i + 1, j): v for (i, j), v in p.items()}

    def muly(p):
        return {(i, j + 1): v for (i, j), v in p.items()}

    P = {(0, 0): {(0, 0): {(0, 0): 1}}}   # P[(r,s)][(k,l)]

    def step(prev, kind):
        out = {}
        keys = set(prev)
        keys |= {(k + 1, l) for k, l in prev} | {(k, l + 1) for k, l in prev}
        for k, l in keys:
            a = add(dx(prev.get((k, l), {})), prev.get((k - 1, l), {}))
            b = add(dy(prev.get((k, l), {})), prev.get((k, l - 1), {}))
            if kind == "t":
                poly = add(mulX(a), muly(b))
            else:
                poly = add({key: -v for key, v in muly(a).items()}, mulX(b))
            if poly:
                out[(k, l)] = poly
        return out

    for total in range(1, order + 1):
        for r in range(total + 1):
            s = total - r
            if r > 0:
                P[(r, s)] = step(P[(r - 1, s)], "t")
            else:
                P[(r, s)] = step(P[(r, s - 1)], "theta")
    return P


def p_recursion_derivatives(evaluator, a: Fraction, h: int, theta0, t0, order: int):
    """d^{r+s} f / dt^r d theta^s at (t0, theta0) for f = f_a((e^t cos + a)/h, e^t sin/h)."""
    P = p_polynomials(order)
    et = arb(t0).exp()
    th = arb(theta0)
    aa = arb(a.numerator) / a.denominator
    x = (et * th.cos() + aa) / h
    y = et * th.sin() / h
    X = x - aa / h
    partial_cache = {}

    def partial(k, l):
        if (k, l) not in partial_cache:
            partial_cache[(k, l)] = evaluator.evaluate_partials(x, y, k, l)
        return partial_cache[(k, l)]

    out = {}
    for (r, s), table in P.items():
        total = acb(0)
        for (k, l), poly in table.items():
            coef = arb(0)
            for (i, j), v in poly.items():
                coef += v * X ** i * y ** j
            total += coef * partial(k, l)
        out[(r, s)] = total
    return out
