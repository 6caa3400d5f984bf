"""Verified composite Gauss-Legendre quadrature.

Each panel [a, b] uses an n-point rule whose error for a function analytic
inside the Bernstein ellipse E_rho (foci a, b) and bounded there by M is at
most (b - a)/2 * 64/15 * M * rho^(-2n) / (rho^2 - 1) (Trefethen, SIAM
Review 50 (2008), Thm 4.5).  M is bounded by evaluating a caller-supplied
ball majorant on boxes covering the ellipse; the rule order n is picked per
panel from that bound, so panels where the integrand is negligible cost a
handful of nodes.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable, Sequence

import flint
from flint import acb, arb

_ORDERS = (2, 4, 8, 12, 16, 24, 32, 40, 48, 64, 80, 96, 128)


@lru_cache(maxsize=None)
def _gl_rule(n: int, prec: int) -> tuple[tuple[arb, arb], ...]:
    """Nodes and weights on [-1, 1] (symmetric pairs expanded)."""
    old = flint.ctx.prec
    flint.ctx.prec = prec
    try:
        out = []
        for k in range((n + 1) // 2):
            x, w = arb.legendre_p_root(n, k, weight=True)
            out.append((x, w))
            if not (n % 2 == 1 and k == n // 2):
                out.append((-x, w))
        return tuple(out)
    finally:
        flint.ctx.prec = old


def gl_rule(n: int) -> tuple[tuple[arb, arb], ...]:
    return _gl_rule(n, flint.ctx.prec)


def ellipse_boxes(a: arb, b: arb, rho: float, pieces: int = 4) -> list[acb]:
    """Complex boxes whose union contains the Bernstein ellipse of [a, b]."""
    c = (a + b) / 2
    hw = (b - a) / 2
    rho_b = arb(rho)
    A = (rho_b + 1 / rho_b) / 2
    B = (rho_b - 1 / rho_b) / 2
    out = []
    for j in range(pieces):
        lo = -A + 2 * A * j / pieces
        hi = -A + 2 * A * (j + 1) / pieces
        re = c + hw * (lo + hi) / 2 + arb(0, (hw * (hi - lo) / 2).abs_upper())
        im = arb(0, (hw * B).abs_upper())
        out.append(acb(re, im))
    return out


def choose_order(M: float, tol: float, half_width: float, rho: float) -> int | None:
    """Least tabulated n meeting the error bound, or None if none does."""
    if M <= 0:
        return _ORDERS[0]
    c = 64.0 / 15.0 * half_width / (rho * rho - 1.0)
    for n in _ORDERS:
        if math.log(c) + math.log(M) - 2 * n * math.log(rho) <= math.log(tol):
            return n
    return None


def integrate(f_nodes: Callable[[Sequence[arb]], Sequence[Sequence[arb]]],
              f_majorant: Callable[[acb], Sequence[arb]],
              a: arb, b: arb, panel_width: float, tol: float,
              rho: float = 4.0, ncomp: int = 1) -> list[arb]:
    """Integrals over [a, b] of ``ncomp`` real functions, as enclosures.

    ``f_nodes(ts)`` returns, for each component, the list of values at the
    nodes ``ts``.  ``f_majorant(box)`` returns, for each component, an
    upper bound of |f| on the complex box.  ``tol`` is the absolute error
    target per component; panels split it evenly.
    """
    a, b = arb(a), arb(b)
    length = float((b - a).mid())
    if length <= 0:
        return [arb(0)] * ncomp
    npan = max(1, math.ceil(length / panel_width))
    tol_panel = tol / npan
    totals = [arb(0)] * ncomp
    step = (b - a) / npan
    for j in range(npan):
        pa = a + step * j
        pb = b if j == npan - 1 else a + step * (j + 1)
        hw = (pb - pa) / 2
        hwf = float(hw.mid())
        bounds = [arb(0)] * ncomp
        for box in ellipse_boxes(pa, pb, rho):
            vals = f_majorant(box)
            bounds = [bd.max(arb(v.abs_upper() if isinstance(v, (arb, acb)) else v))
                      for bd, v in zip(bounds, vals)]
        Mf = max(float(bd.upper().mid()) for bd in bounds)
        if not math.isfinite(Mf):
            raise ArithmeticError("quadrature majorant is not finite; shrink panels")
        n = choose_order(Mf, tol_panel, hwf, rho)
        if n is None:
            n = _ORDERS[-1]
        rule = gl_rule(n)
        c = (pa + pb) / 2
        ts = [c + hw * x for x, _ in rule]
        vals = f_nodes(ts)
        rho_b = arb(rho)
        err_scale = hw * arb(64) / 15 / (rho_b * rho_b - 1) * rho_b ** (-2 * n)
        for k in range(ncomp):
            s = arb(0)
            for (x, w), v in zip(rule, vals[k]):
                s += w * v
            err = err_scale * bounds[k]
            totals[k] += hw * s + arb(0, err.abs_upper())
    return totals
