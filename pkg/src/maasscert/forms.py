"""Purported Maass forms: per-cusp truncated expansions and their evaluation.

At a cusp a with width h and parameter mu the expansion is

    f_a(x + iy) = sum_{0 < |n+mu| <= M0} a(a, n) / sqrt(2 pi |n+mu|)
                  * W_ir(2 pi |n+mu| y) * e((n+mu) x).

Input data are prime coefficients at infinity, a(oo, -1) (via the parity
flag) and the first coefficient at each Hall cusp.  Full tables at infinity
come from the Hecke relations.  At the representative cusp of a Hall
divisor d < N the table is the Atkin-Lehner image: with Q = N/d,

    b(p) = conj(chi_Q(p)) a(oo, p)    for p not dividing Q,
    b(p) = chi_{N/Q}(p) conj(a(oo, p)) for p | Q,

extended multiplicatively with the character conj(chi_Q) chi_{N/Q}.  The
cusp normalizer [[1, x], [d, y]] equals W_Q composed with z -> z - k/Q for
the k with d k + y = 0 mod Q, so a(1/d, n) = eta b(|n|) eps^[n<0] e(-n k/Q)
with eta fixed by the supplied a(1/d, 1).  This rule assumes a newform;
tables may instead be supplied verbatim, in which case they are validated
against the same relations.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Mapping

from flint import acb, arb

from .characters import (DirichletCharacter, character_from_label, crt_decompose,
                         factorize, primes_up_to)
from .enclosure import ball, cball, working_precision
from .geometry import CosetSystem, Cusp, coset_representatives
from .special_functions import WhittakerEvaluator


class FormError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Hecke relations

def hecke_extend(primes: Mapping[int, acb], chi: DirichletCharacter, M0: int,
                 unit_minus_one=1) -> dict[int, acb]:
    """a(n) for 1 <= |n| <= M0 from a(p), with a(1) = 1 and a(-n) = a(-1) a(n)."""
    missing = [p for p in primes_up_to(M0) if p not in primes]
    if missing:
        raise FormError(f"missing prime coefficients: {missing}")
    unit = acb(unit_minus_one)
    pp: dict[tuple[int, int], acb] = {}

    def prime_power(p: int, e: int) -> acb:
        if e == 0:
            return acb(1)
        if (p, e) in pp:
            return pp[(p, e)]
        if e == 1:
            v = acb(primes[p])
        else:
            v = primes[p] * prime_power(p, e - 1) - chi.ball(p) * prime_power(p, e - 2)
        pp[(p, e)] = v
        return v

    out: dict[int, acb] = {}
    for n in range(1, M0 + 1):
        v = acb(1)
        for p, e in factorize(n).items():
            v *= prime_power(p, e)
        out[n] = v
        out[-n] = unit * v
    return out


def hecke_residuals(table: Mapping[int, acb], chi: DirichletCharacter, M0: int,
                    unit_minus_one=None) -> dict[str, arb]:
    """Largest residuals of multiplicativity, prime-power recursion and parity."""
    mult = arb(0)
    rec = arb(0)
    par = arb(0)
    one = table.get(1, acb(1))
    for n in range(2, M0 + 1):
        fac = factorize(n)
        if len(fac) > 1:
            prod = acb(1)
            for p, e in fac.items():
                prod *= table[p**e]
            mult = mult.max(abs(table[n] * one ** (len(fac) - 1) - prod).upper())
        else:
            (p, e), = fac.items()
            if e >= 2:
                lhs = table[n] * one
                rhs = table[p] * table[p ** (e - 1)] - chi.ball(p) * table[p ** (e - 2)] * one
                rec = rec.max(abs(lhs - rhs).upper())
    if unit_minus_one is not None:
        u = acb(unit_minus_one)
        for n in range(1, M0 + 1):
            if -n in table:
                par = par.max(abs(table[-n] - u * table[n]).upper())
    return {"multiplicativity": mult, "prime_power_recursion": rec, "parity": par}


# ---------------------------------------------------------------------------
# expansions

@dataclass
class CuspExpansion:
    """Coefficients a(cusp, n) for 0 < |n + mu| <= M0."""
    cusp: Cusp
    coeffs: dict[int, acb]
    M0: int

    @property
    def mu(self) -> Fraction:
        return self.cusp.mu

    def indices(self) -> list[int]:
        return sorted(self.coeffs)


@dataclass
class PurportedForm:
    level: int
    character: DirichletCharacter
    lam: arb
    M0: int
    expansions: dict[str, CuspExpansion]
    system: CosetSystem
    symmetry: str = "none"
    unit_minus_one: acb = field(default_factory=lambda: acb(1))
    prime_coefficients: dict[int, acb] = field(default_factory=dict)
    cusp_units: dict[str, acb] = field(default_factory=dict)
    raw_units: dict[str, acb] = field(default_factory=dict)
    source_digest: str | None = None
    _evaluator: WhittakerEvaluator | None = field(default=None, repr=False)

    @property
    def r(self) -> arb:
        return self.whittaker.r

    @property
    def whittaker(self) -> WhittakerEvaluator:
        if self._evaluator is None:
            self._evaluator = WhittakerEvaluator(self.lam)
        return self._evaluator

    def expansion(self, cusp) -> CuspExpansion:
        if isinstance(cusp, Cusp):
            cusp = cusp.label()
        try:
            return self.expansions[cusp]
        except KeyError:
            raise FormError(f"no expansion at cusp {cusp}") from None

    def evaluator(self, cusp) -> "ExpansionEvaluator":
        return ExpansionEvaluator(self.expansion(cusp), self.whittaker)

    def a_inf(self, n: int) -> acb:
        return self.expansions["oo"].coeffs[n]


def hall_twist(N: int, d: int, cusp: Cusp) -> Fraction:
    """k/Q with sigma_{1/d} z = W_Q(z - k/Q) for the stored normalizer."""
    Q = N // d
    g = cusp.gamma
    if Q == 1:
        return Fraction(0)
    # gamma [[Q, k], [0, 1]] has lower-right g.c k + g.d, needing 0 mod Q
    if g.c % Q == 0:
        if g.d % Q:
            raise FormError("normalizer incompatible with an Atkin-Lehner matrix")
        return Fraction(0)
    k = (-g.d * pow(g.c, -1, Q)) % Q
    return Fraction(k, Q)


def atkin_lehner_primes(primes: Mapping[int, acb], chi: DirichletCharacter, d: int
                        ) -> tuple[dict[int, acb], DirichletCharacter]:
    """Prime coefficients b(p) and the character of the image form at cusp 1/d."""
    N = chi.modulus
    Q = N // d
    chi_d, chi_Nd = crt_decompose(chi, d)   # moduli d and N/d = Q
    chi_Q, chi_NQ = chi_Nd, chi_d
    out = {}
    for p, a in primes.items():
        if Q % p:
            out[p] = chi_Q.conj_ball(p) * a
        else:
            out[p] = chi_NQ.ball(p) * a.conjugate()
    new_chi = chi_Q.conjugate().lift(N) * chi_NQ.lift(N)
    return out, new_chi


def root_of_unity_frac(x: Fraction) -> acb:
    from .characters import root_of_unity
    return root_of_unity(x)


def derive_hall_table(form_primes: Mapping[int, acb], chi: DirichletCharacter, d: int,
                      cusp: Cusp, first: acb, M0: int, eps: acb) -> dict[int, acb]:
    N = chi.modulus
    b_primes, chi2 = atkin_lehner_primes(form_primes, chi, d)
    b = hecke_extend(b_primes, chi2, M0, 1)
    kq = hall_twist(N, d, cusp)
    eta = first * root_of_unity_frac(kq)
    out = {}
    for n in range(1, M0 + 1):
        out[n] = eta * b[n] * root_of_unity_frac(-n * kq)
        out[-n] = eta * eps * b[n] * root_of_unity_frac(n * kq)
    return out


def untwist_hall_table(table: Mapping[int, acb], N: int, d: int, cusp: Cusp, M0: int
                       ) -> dict[int, acb]:
    """Invert the twist and the unit so that b(1) = 1; used in validation."""
    kq = hall_twist(N, d, cusp)
    eta = table[1] * root_of_unity_frac(kq)
    out = {}
    for n in range(1, M0 + 1):
        if n in table:
            out[n] = table[n] * root_of_unity_frac(n * kq) / eta
        if -n in table:
            out[-n] = table[-n] * root_of_unity_frac(-n * kq) / eta
    return out


# ---------------------------------------------------------------------------
# loading

SYMMETRY_SIGN = {"odd": -1, "even": 1}


def _parse_complex(re, im, rad) -> acb:
    return cball(re, im, rad)


def form_from_dict(data: Mapping, digest: str | None = None) -> PurportedForm:
    """Build a PurportedForm from the JSON input schema (decimal strings)."""
    try:
        N = int(data["level"])
        chi = character_from_label(N, data.get("character", "trivial"))
        lam = ball(str(data["lambda"]))
        M0 = int(data.get("M0", 40))
    except KeyError as exc:
        raise FormError(f"missing field {exc}") from None
    if "lambda_radius" in data:
        lam = ball(lam, str(data["lambda_radius"]))
    rad = str(data.get("coefficient_radius", "1e-25"))
    symmetry = data.get("symmetry", "none")
    if symmetry in SYMMETRY_SIGN:
        unit = acb(SYMMETRY_SIGN[symmetry])
        if "unit_minus_one" in data:
            raise FormError("give either a symmetry flag or unit_minus_one, not both")
    elif symmetry == "none":
        u = data.get("unit_minus_one", ["1", "0"])
        unit = _parse_complex(u[0], u[1], None)
    else:
        raise FormError(f"unknown symmetry {symmetry!r}")
    system = coset_representatives(N, chi)
    labels = {c.label(): c for c in system.cusps}

    primes: dict[int, acb] = {}
    for row in data.get("coefficients_infinity", []):
        p = int(row[0])
        primes[p] = _parse_complex(row[1], row[2], rad)
    explicit = data.get("cusp_tables", {})
    if "oo" in explicit:
        oo_table = {int(n): _parse_complex(re, im, rad) for n, re, im in explicit["oo"]}
    else:
        oo_table = hecke_extend(primes, chi, M0, unit)
    expansions = {"oo": CuspExpansion(labels["oo"], oo_table, M0)}

    raw_units: dict[str, acb] = {}
    units_: dict[str, acb] = {}
    for row in data.get("cusp_units", []):
        lab = str(row[0])
        if lab not in labels:
            raise FormError(f"cusp {lab} is not a representative cusp; "
                            f"expected one of {sorted(labels)}")
        raw = _parse_complex(row[1], row[2], rad)
        raw_units[lab] = raw
        units_[lab] = raw / abs(raw)   # contains a unit-modulus number
    hall = {c.label(): d for d, c in system.hall_cusps.items()}
    for lab, cusp in labels.items():
        if lab == "oo":
            continue
        if lab in explicit:
            table = {int(n): _parse_complex(re, im, rad) for n, re, im in explicit[lab]}
        elif lab in hall:
            if lab not in units_:
                raise FormError(f"missing first coefficient a({lab}, 1)")
            table = derive_hall_table(primes, chi, hall[lab], cusp, units_[lab], M0, unit)
        else:
            raise FormError(f"cusp {lab} is not a Hall cusp; supply its table explicitly")
        expansions[lab] = CuspExpansion(cusp, table, M0)
    return PurportedForm(N, chi, lam, M0, expansions, system, symmetry, unit, primes,
                         units_, raw_units, digest)


def load_form(path, precision: int | None = None) -> PurportedForm:
    raw = Path(path).read_bytes()
    digest = hashlib.sha256(raw).hexdigest()
    data = json.loads(raw.decode("utf-8"))
    if precision is not None:
        with working_precision(precision):
            return form_from_dict(data, digest)
    return form_from_dict(data, digest)


def shipped_example_path() -> Path:
    return Path(__file__).with_name("data") / "level5_quadratic.json"


def with_truncation(form: PurportedForm, M0: int) -> PurportedForm:
    """Same form truncated at a smaller M0 (tables are restricted)."""
    if M0 > form.M0:
        raise FormError("cannot extend the truncation")
    exps = {}
    for lab, ex in form.expansions.items():
        lim = M0
        coeffs = {n: c for n, c in ex.coeffs.items() if abs(n + ex.mu) <= lim}
        exps[lab] = CuspExpansion(ex.cusp, coeffs, M0)
    out = PurportedForm(form.level, form.character, form.lam, M0, exps, form.system,
                        form.symmetry, form.unit_minus_one, form.prime_coefficients,
                        form.cusp_units, form.raw_units, form.source_digest)
    out._evaluator = form._evaluator
    return out


def with_coefficient(form: PurportedForm, cusp: str, n: int, value: acb) -> PurportedForm:
    """Copy of the form with one stored coefficient replaced (no re-derivation)."""
    exps = dict(form.expansions)
    ex = exps[cusp]
    coeffs = dict(ex.coeffs)
    if n not in coeffs:
        raise FormError(f"coefficient {n} not stored at {cusp}")
    coeffs[n] = acb(value)
    exps[cusp] = CuspExpansion(ex.cusp, coeffs, ex.M0)
    out = PurportedForm(form.level, form.character, form.lam, form.M0, exps, form.system,
                        form.symmetry, form.unit_minus_one, form.prime_coefficients,
                        form.cusp_units, form.raw_units, form.source_digest)
    out._evaluator = form._evaluator
    return out


# ---------------------------------------------------------------------------
# validation

@dataclass
class Check:
    name: str
    passed: bool
    residual: arb | None = None
    detail: str = ""

    def line(self) -> str:
        res = "" if self.residual is None else f" residual<={float(self.residual.upper().mid()):.3e}"
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}{res} {self.detail}".rstrip()


@dataclass
class ValidationReport:
    checks: list[Check]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def residual(self, name: str) -> arb | None:
        for c in self.checks:
            if c.name == name:
                return c.residual
        raise KeyError(name)

    def text(self) -> str:
        return "\n".join(c.line() for c in self.checks)


def validate_conditions(form: PurportedForm, tol=1e-12) -> ValidationReport:
    tol_b = ball(tol) if not isinstance(tol, arb) else tol
    N, chi = form.level, form.character
    checks: list[Check] = []

    def small(x: arb) -> bool:
        return bool(x.upper() <= tol_b)

    inf = form.expansions.get("oo")
    if inf is None:
        return ValidationReport([Check("expansion at infinity present", False)])
    one = inf.coeffs.get(1, acb(0))
    res = abs(one - 1).upper()
    checks.append(Check("normalization a(oo,1)=1", small(res), res))
    checks.append(Check("character even", chi.is_even))
    checks.append(Check("conductor divides level", N % chi.conductor == 0))
    missing = [c.label() for c in form.system.cusps if c.label() not in form.expansions]
    checks.append(Check("expansion at every cusp", not missing,
                        detail=f"missing {missing}" if missing else ""))
    for lab, r in hecke_residuals(inf.coeffs, chi, form.M0, form.unit_minus_one).items():
        checks.append(Check(f"Hecke {r_name(lab)} at oo", small(r), r))
    hall = {c.label(): d for d, c in form.system.hall_cusps.items()}
    for lab, ex in form.expansions.items():
        if lab == "oo":
            continue
        if lab in hall:
            d = hall[lab]
            first = ex.coeffs.get(1)
            if first is None:
                checks.append(Check(f"a({lab},1) present", False))
                continue
            raw = form.raw_units.get(lab, first)
            res = abs(abs(raw) - 1).upper()
            checks.append(Check(f"|a({lab},1)|=1", small(res), res))
            b = untwist_hall_table(ex.coeffs, N, d, ex.cusp, form.M0)
            _, chi2 = atkin_lehner_primes({}, chi, d)
            for name, r in hecke_residuals(b, chi2, form.M0, form.unit_minus_one).items():
                checks.append(Check(f"Hecke {r_name(name)} at {lab}", small(r), r))
        else:
            checks.append(Check(f"cusp {lab} table supplied (not Hall; relations unchecked)",
                                bool(ex.coeffs)))
    return ValidationReport(checks)


def r_name(s: str) -> str:
    return s.replace("_", " ")


# ---------------------------------------------------------------------------
# evaluation

class ExpansionEvaluator:
    """Evaluates a truncated expansion and its partial derivatives in balls."""

    def __init__(self, expansion: CuspExpansion, whittaker: WhittakerEvaluator):
        self.expansion = expansion
        self.whittaker = whittaker
        two_pi = 2 * arb.pi()
        terms = []
        for n in expansion.indices():
            nu = n + expansion.mu
            if nu == 0:
                continue
            nu_b = arb(nu.numerator) / nu.denominator
            absnu = abs(nu_b)
            scale = two_pi * absnu
            kappa = expansion.coeffs[n] / scale.sqrt()
            terms.append((n, nu_b, scale, kappa))
        self.terms = terms

    def _phase(self, nu: arb, x: arb) -> acb:
        return acb(0, 2 * nu * x).exp() if not isinstance(x, acb) else (acb(0, 2) * nu * x * arb.pi()).exp()

    def evaluate(self, x, y) -> acb:
        return self.evaluate_partials(x, y, 0, 0)

    def evaluate_partials(self, x, y, k: int, l: int) -> acb:
        x = ball(x) if not isinstance(x, arb) else x
        y = ball(y) if not isinstance(y, arb) else y
        two_pi_i = acb(0, 2 * arb.pi())
        total = acb(0)
        for n, nu, scale, kappa in self.terms:
            Y = scale * y
            if l == 0:
                w = self.whittaker.whittaker(Y)[0]
            elif l == 1:
                w = self.whittaker.whittaker(Y)[1] * scale
            else:
                w = self.whittaker.derivatives(Y, l)[l] * scale**l
            phase = (two_pi_i * nu * x).exp()
            term = kappa * w * phase
            if k:
                term *= (two_pi_i * nu) ** k
            total += term
        return total


def evaluate(ev: ExpansionEvaluator, x, y) -> acb:
    return ev.evaluate(x, y)


def evaluate_partials(ev: ExpansionEvaluator, x, y, k: int, l: int) -> acb:
    return ev.evaluate_partials(x, y, k, l)
