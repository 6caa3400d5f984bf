"""
The Whittaker function and the constant D
=========================================

W(y) = sqrt(y) K_{ir}(y) carries every Fourier term.  Its size on the
window above height m^k e^delta feeds the denominator quantity D, which
shrinks as delta grows.
"""

from flint import arb

from maasscert.enclosure import ball
from maasscert.special_functions import (DParameters, WhittakerEvaluator, compute_D,
                                         ode_residual, whittaker_abs_bound)

ev = WhittakerEvaluator(ball("24.1990953284330163389316822199"))
print("r =", ev.r.str(20))

# Balls, not floats: each value comes with a certified radius.
for y in ("0.5", "2", "6.283185307179586", "12"):
    W, dW = ev.whittaker(ball(y))
    print(f"y = {y:>18}  W = {W.str(12)}  W' = {dW.str(12)}")

# The ODE W'' = (1 - lambda/y^2) W holds to within the enclosure.
print("ODE residual at y = 3:", ode_residual(ev, ball(3)).str(5))

# The decay envelope sqrt(pi/2) e^{-y} that the remainder bounds rely on.
for y in (1, 5, 20):
    print(f"|W({y})| <= {whittaker_abs_bound(arb(y)).str(8)}")

# D for level 5, m = 2, two twists.
for delta in ("0.005", "0.01", "0.02", "0.04"):
    D = compute_D(ev, DParameters(5, 2, 2, ball(delta)))
    print(f"delta = {delta:<6} D = {D.str(10)}")
