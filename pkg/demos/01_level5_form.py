"""
A purported Maass form of level 5
=================================

Load the shipped level 5 example, check that its coefficients are
consistent, and look at how well f agrees with itself across the edge
where the cusp at infinity hands over to the cusp at 0.
"""

from fractions import Fraction

from maasscert.certifier import build_regions, cm_exclusion_check
from maasscert.forms import load_form, shipped_example_path, validate_conditions
from maasscert.taylor import base_point

form = load_form(shipped_example_path())
print(form.level, form.character, "lambda =", form.lam.mid().str(25, radius=False))

# Only the prime coefficients are stored; the rest come from the Hecke relations.
for n in (2, 3, 4, 6, 25):
    print(f"a(oo,{n}) =", form.a_inf(n).str(20, radius=False))

# The report lists every necessary condition the data must satisfy.
print(validate_conditions(form).text())

# The cusp at 0 has width 5.  On |z| = 1/sqrt(3) the form is given both by
# f_oo(z) and by f_0 in its own coordinate, and the two should match.
problems, _ = build_regions(form.system, 10)
edge = next(p for p in problems if p.kind == "bprime")
side_a, side_b = edge.side_a, edge.alternatives[0].side
for q in (Fraction(1, 4), Fraction(1, 2), Fraction(2, 3)):
    za = side_a.chart.apply(base_point(side_a.chart, q))
    zb = side_b.chart.apply(base_point(side_b.chart, q))
    a = form.evaluator(side_a.cusp).evaluate(za.real, za.imag)
    b = form.evaluator(side_b.cusp).evaluate(zb.real, zb.imag)
    print(f"theta = {q} pi:  |f_{side_a.cusp} - f_{side_b.cusp}| = "
          f"{abs(a - b).mid().str(5, radius=False)}")

# Forms with complex multiplication live nearby; this one is far from all of them.
cm = cm_exclusion_check(5, form.lam)
print("nearest CM eigenvalue n =", cm["nearest_n"], cm["lambda_cm"][0],
      "distance >", cm["distance_lower"].str(5, radius=False))
