"""The Whittaker function W_ir(y) = sqrt(y) K_ir(y) with certified enclosures.

K_ir(y) = int_0^oo exp(-y cosh t) cos(r t) dt for y > 0 and real r.  We
integrate exp(-y (cosh t - 1)) cos(r t) (and the cosh t weighted version
for the derivative) over [0, T] with verified Gauss-Legendre panels and add
the tail bounds

    int_T^oo exp(-y (cosh t - 1)) dt        <= exp(-y (cosh T - 1)) / (y sinh T)
    int_T^oo cosh t exp(-y (cosh t - 1)) dt <= coth T exp(-y (cosh T - 1)) / y

before multiplying back by exp(-y).  Higher derivatives come from the ODE
W'' = (1 - lambda / y^2) W via a Taylor-coefficient recurrence.

For complex Z with Re Z > 0 the integral representation still holds and
|cos(r t)| <= 1, giving the majorant |W(Z)| <= |Z|^(1/2) K_0(Re Z) <=
sqrt((pi/2) |Z| / Re Z) exp(-Re Z), used for remainder terms.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import flint
from flint import acb, arb

from . import quadrature
from .characters import factorize
from .enclosure import EnclosureError, ball, ball_key


class WhittakerError(EnclosureError):
    pass


class WhittakerEvaluator:
    """Certified W_ir and W'_ir for a fixed spectral parameter.

    ``lam`` is the Laplace eigenvalue (ball or decimal string); r is
    sqrt(lam - 1/4).  Results are cached on the exact argument ball and the
    working precision, so cached and uncached calls return identical balls.
    """

    def __init__(self, lam, r=None):
        self.lam = ball(lam) if not isinstance(lam, arb) else lam
        if r is None:
            shifted = self.lam - arb(1) / 4
            if shifted < 0:
                raise WhittakerError("lambda < 1/4 is not supported")
            r = shifted.sqrt() if shifted > 0 else arb(0, shifted.abs_upper().sqrt().upper())
        self.r = ball(r) if not isinstance(r, arb) else r
        self._cache: dict = {}
        self._lock = threading.Lock()

    @classmethod
    def from_r(cls, r) -> "WhittakerEvaluator":
        r = ball(r) if not isinstance(r, arb) else r
        return cls(r * r + arb(1) / 4, r)

    # -- core evaluation -------------------------------------------------
    def whittaker(self, y) -> tuple[arb, arb]:
        y = ball(y) if not isinstance(y, arb) else y
        if not y > 0:
            raise WhittakerError(f"argument must be certified positive, got {y}")
        key = (ball_key(y), flint.ctx.prec)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        val = self._compute(y)
        with self._lock:
            return self._cache.setdefault(key, val)

    def _compute(self, y: arb) -> tuple[arb, arb]:
        prec = flint.ctx.prec
        r = self.r
        rf = float(r.abs_upper().mid())
        yf = float(y.lower().mid())
        # target exponent: e^{-L} relative to O(1) integrands, with room for
        # the e^{-pi r/2} cancellation of K_ir at small y
        L = (prec + 12) * math.log(2) + math.pi * rf / 2
        T = math.acosh(1 + L / yf)
        T_b = arb(T)
        cT, sT = T_b.cosh(), T_b.sinh()
        tail_exp = (-(y * (cT - 1))).exp()
        tail0 = tail_exp / (y * sT)
        tail1 = tail_exp * cT / sT / y
        tol = math.exp(-L)
        v = min(1.0, math.sqrt(2.0 / yf), 2.0 / max(rf, 1.0))
        rho = 4.0
        half_b = (rho - 1 / rho) / 2
        panel = 2 * v / half_b

        def nodes(ts):
            f0, f1 = [], []
            for t in ts:
                ch = t.cosh()
                g = (-(y * (ch - 1))).exp() * (r * t).cos()
                f0.append(g)
                f1.append(g * ch)
            return f0, f1

        def majorant(box):
            ch = box.cosh()
            g = (-(y * (ch - 1))).exp() * (box * r).cos()
            return abs(g), abs(g * ch)

        i0, i1 = quadrature.integrate(nodes, majorant, arb(0), T_b, panel, tol,
                                      rho=rho, ncomp=2)
        i0 += arb(0, tail0.abs_upper())
        i1 += arb(0, tail1.abs_upper())
        ey = (-y).exp()
        K = ey * i0
        Kp = -ey * i1
        sy = y.sqrt()
        W = sy * K
        Wp = K / (2 * sy) + sy * Kp
        return W, Wp

    # -- derivatives -------------------------------------------------------
    def taylor(self, y, n: int) -> list[arb]:
        """Taylor coefficients u_k = W^(k)(y)/k!, k < n, from the ODE."""
        if n <= 0:
            return []
        y = ball(y) if not isinstance(y, arb) else y
        W, Wp = self.whittaker(y)
        return taylor_from_seed(self.lam, y, W, Wp, n)

    def derivatives(self, y, up_to: int) -> list[arb]:
        u = self.taylor(y, up_to + 1)
        out, fac = [], arb(1)
        for k, uk in enumerate(u):
            if k:
                fac *= k
            out.append(uk * fac)
        return out

    def cache_size(self) -> int:
        return len(self._cache)


def taylor_from_seed(lam: arb, y0: arb, W: arb, Wp: arb, n: int) -> list[arb]:
    """Coefficients of W(y0 + s) = sum u_k s^k from y^2 W'' = (y^2 - lam) W.

    Comparing s^k coefficients of (y0 + s)^2 W'' = ((y0 + s)^2 - lam) W:
      y0^2 (k+2)(k+1) u_{k+2} + 2 y0 (k+1) k u_{k+1} + k (k-1) u_k
        = (y0^2 - lam) u_k + 2 y0 u_{k-1} + u_{k-2}.
    """
    u = [W, Wp][:n]
    y2 = y0 * y0
    c0 = y2 - lam
    two_y = 2 * y0
    for k in range(n - 2):
        rhs = c0 * u[k]
        if k >= 1:
            rhs += two_y * u[k - 1]
        if k >= 2:
            rhs += u[k - 2]
        rhs -= two_y * ((k + 1) * k) * u[k + 1]
        rhs -= (k * (k - 1)) * u[k]
        u.append(rhs / (y2 * ((k + 2) * (k + 1))))
    return u


def whittaker(ev: WhittakerEvaluator, y) -> tuple[arb, arb]:
    return ev.whittaker(y)


def whittaker_derivatives(ev: WhittakerEvaluator, y, up_to: int) -> list[arb]:
    return ev.derivatives(y, up_to)


def ode_residual(ev: WhittakerEvaluator, y) -> arb:
    """W'' - (1 - lambda/y^2) W, with W'' from the integral representation."""
    y = ball(y) if not isinstance(y, arb) else y
    W, _ = ev.whittaker(y)
    return whittaker_second_derivative_direct(ev, y) - (1 - ev.lam / (y * y)) * W


def whittaker_second_derivative_direct(ev: WhittakerEvaluator, y) -> arb:
    """W'' from the integral representation, independent of the ODE.

    With K = int e^{-y cosh t} cos(rt) dt, K'' = int cosh^2 t e^{-y cosh t} cos(rt) dt,
    and W = sqrt(y) K gives W'' = -K/(4 y^{3/2}) + K'/sqrt(y) + sqrt(y) K''.
    """
    y = ball(y) if not isinstance(y, arb) else y
    prec = flint.ctx.prec
    r = ev.r
    rf = float(r.abs_upper().mid())
    yf = float(y.lower().mid())
    L = (prec + 12) * math.log(2) + math.pi * rf / 2
    T = math.acosh(1 + L / yf)
    T_b = arb(T)
    cT, sT = T_b.cosh(), T_b.sinh()
    tail_exp = (-(y * (cT - 1))).exp()
    # tails: cosh^j / sinh is 1/sinh, coth (both decreasing) and
    # sinh + 1/sinh; the sinh part integrates to <= e^{..}(cosh T / y + 1 / y^2)
    tails = [tail_exp / (y * sT), tail_exp * cT / (sT * y),
             tail_exp * (cT / y + 1 / (y * y) + 1 / (y * sT))]
    v = min(1.0, math.sqrt(2.0 / yf), 2.0 / max(rf, 1.0))
    panel = 2 * v / ((4.0 - 0.25) / 2)

    def nodes(ts):
        out = ([], [], [])
        for t in ts:
            ch = t.cosh()
            g = (-(y * (ch - 1))).exp() * (r * t).cos()
            out[0].append(g)
            out[1].append(g * ch)
            out[2].append(g * ch * ch)
        return out

    def majorant(box):
        ch = box.cosh()
        g = (-(y * (ch - 1))).exp() * (box * r).cos()
        return abs(g), abs(g * ch), abs(g * ch * ch)

    ints = quadrature.integrate(nodes, majorant, arb(0), T_b, panel, math.exp(-L), ncomp=3)
    ints = [i + arb(0, t.abs_upper()) for i, t in zip(ints, tails)]
    ey = (-y).exp()
    K, K1, K2 = ey * ints[0], -ey * ints[1], ey * ints[2]
    sy = y.sqrt()
    return -K / (4 * y * sy) + K1 / sy + sy * K2


def whittaker_abs_bound(Z: acb) -> arb:
    """Upper bound of |W_ir(Z)| for real r and Re Z > 0."""
    Z = acb(Z)
    re = Z.real
    if not re > 0:
        raise WhittakerError("majorant needs Re Z > 0")
    re_lo = re.lower()
    mod = abs(Z).upper()
    val = (arb.pi() / 2 * mod / re_lo).sqrt() * (-re_lo).exp()
    return val.upper()


def whittaker_sup_bound(ell: int, y0, delta) -> arb:
    """sqrt(pi) ell! y_min^(-ell) with y_min = y0 e^(-delta).

    Kept as stated for comparison; the certifier uses the Cauchy-estimate
    remainder instead (see certifier.region_sup_bound).
    """
    y0 = ball(y0) if not isinstance(y0, arb) else y0
    delta = ball(delta) if not isinstance(delta, arb) else delta
    if not y0 > 0:
        raise WhittakerError("y0 must be positive")
    ymin = y0 * (-delta).exp()
    return (arb.pi().sqrt() * arb.fac_ui(ell) * ymin ** (-ell)).upper()


# ---------------------------------------------------------------------------
# D

@dataclass(frozen=True)
class DParameters:
    N: int
    m: int
    psi_count: int
    delta: arb

    @property
    def omega(self) -> int:
        return len(factorize(self.N))

    def lower_limit(self) -> arb:
        return arb(self.m) ** self.psi_count * self.delta.exp()


def _d_integrand_nodes(ev: WhittakerEvaluator):
    two_pi = 2 * arb.pi()

    def nodes(ys):
        out = []
        for y in ys:
            W, _ = ev.whittaker(two_pi * y)
            out.append(W * W / (y * y))
        return (out,)

    def majorant(box):
        Z = two_pi * box
        re = Z.real
        if not re > 0:
            return (arb("inf"),)
        w = whittaker_abs_bound(Z)
        return (w * w / abs(box).lower() ** 2,)

    return nodes, majorant


def d_integral(ev: WhittakerEvaluator, a: arb, b: arb, tol: float) -> arb:
    """int_a^b W(2 pi y)^2 / y^2 dy as a ball."""
    nodes, maj = _d_integrand_nodes(ev)
    # panel width tied to the e^{-4 pi y} decay scale
    return quadrature.integrate(nodes, maj, a, b, panel_width=0.1, tol=tol, rho=4.0)[0]


def d_tail_bound(Y: arb) -> arb:
    """Bound on int_Y^oo W(2 pi y)^2/y^2 dy from |W(x)| <= sqrt(pi/2) e^{-x}."""
    four_pi = 4 * arb.pi()
    return (arb.pi() / 2 * (-four_pi * Y).exp() / (four_pi * Y * Y)).upper()


def compute_D(ev: WhittakerEvaluator, p: DParameters) -> arb:
    """The Theorem 1 denominator integral D as a certified ball.

    For N >= 3 the Hall cusps 1/N (infinity) and 1 (equivalent to 0) use
    lower limits A/sqrt(3) and A*sqrt(3), giving
        D = 2^omega int_A^oo + int_{A/sqrt3}^A - int_A^{sqrt3 A};
    for N < 3 every limit is A and D = 2^omega int_A^oo.
    """
    if not p.delta > 0:
        raise WhittakerError("delta must be positive")
    A = p.lower_limit()
    s3 = arb(3).sqrt()
    prec = flint.ctx.prec
    rel = 2.0 ** (-(prec + 8))
    # scale estimate for tolerances: integrand at A/sqrt3 (or A) bounds sizes
    lo_lim = A / s3 if p.N >= 3 else A
    g0 = float((arb.pi() / 2 * (-4 * arb.pi() * lo_lim).exp() / (lo_lim * lo_lim)).mid())
    tol = max(g0 * rel, 1e-300)
    # extend the cutoff until the analytic tail is below tolerance
    Y = A.upper().max(arb(5))
    while float(d_tail_bound(Y).mid()) > tol:
        Y = Y + arb(1) / 2
    upper_part = d_integral(ev, A, Y, tol) + arb(0, d_tail_bound(Y))
    D = arb(2) ** p.omega * upper_part
    if p.N >= 3:
        D += d_integral(ev, A / s3, A, tol)
        D -= d_integral(ev, A, A * s3, tol)
    if not D > 0:
        raise WhittakerError("D not certified positive; increase precision or adjust delta")
    return D
