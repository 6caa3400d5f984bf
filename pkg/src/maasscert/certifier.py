"""Assembly of the eigenvalue bound

    |lambda~ - lambda| <= 40 (N(T_m) + 2)^#Psi sqrt(max_M E(M))
                          / (delta^(3/2) |prod_psi (a(oo,m) - eis_psi(m))| sqrt(D)).

Each E(M) is a squared sup of a defect E(t, theta) = f_A(chart_A z) -
omega f_B(chart_B z) over boxes |t|, |theta - theta0| <= pi/(6 N_s) around
sample points of an arc.  Where f~ has more than one formula on a box (the
f_oo branch at cusp 0, or several fundamental-domain pieces) every
applicable formula is bounded and the maximum taken.
"""

from __future__ import annotations

import hashlib
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Sequence

import multiprocessing as mp

import flint
from flint import acb, arb

from .characters import (DirichletCharacter, PsiSet, build_psi_set, divisors, factorize,
                         root_of_unity, select_m)
from .enclosure import (EnclosureError, ball, ball_from_key, ball_key, ball_lower,
                        ball_upper, dumps, enclosure_strs, upper_str)
from .forms import PurportedForm, ValidationReport, validate_conditions
from .geometry import (I, S, T, T_INV, CosetSystem, Mat, corner_delta_limit, companion_matrix,
                       sigma_inverse_times, word_to_mat)
from .special_functions import DParameters, compute_D
from .taylor import (Chart, combine, polydisc_majorant, remainder_bound, side_expansion,
                     taylor_part_bound, unit_point)


class CertificationError(EnclosureError):
    """Numerical non-certification (D, Psi product, or a defect not bounded)."""


class RemainderWarning(UserWarning):
    """The degree-d remainder, not the Taylor part, sets a region's bound."""


class ValidationError(ValueError):
    def __init__(self, report: ValidationReport):
        super().__init__("input fails the form conditions:\n" + report.text())
        self.report = report


# ---------------------------------------------------------------------------
# scalar ingredients

def n_tm(m: int) -> arb:
    """N(T_1) = 1, N(T_m) = N(T_{m/p})(p^{7/64} + p^{-7/64}) + [p^2 | m] N(T_{m/p^2})."""
    if m < 1:
        raise ValueError("m must be positive")
    if m == 1:
        return arb(1)
    p = min(factorize(m))
    e = arb(7) / 64
    out = n_tm(m // p) * (arb(p) ** e + arb(p) ** (-e))
    if m % (p * p) == 0:
        out += n_tm(m // (p * p))
    return out


def eisenstein_term(psi: DirichletCharacter, chi: DirichletCharacter, m: int, r: arb,
                    flip: bool = False) -> acb:
    """sum_{ab=m} psi(a/b) chi(b) (a/b)^{ir}; flip uses (b/a)^{ir}."""
    out = acb(0)
    for a in divisors(m):
        b = m // a
        val = psi.ball(a) * psi.conj_ball(b) * chi.ball(b)
        lg = arb(a).log() - arb(b).log()
        if flip:
            lg = -lg
        out += val * acb(0, r * lg).exp()
    return out


@dataclass
class PsiProduct:
    theorem: acb          # with (a/b)^{ir}
    derivation: acb       # with (b/a)^{ir}
    modulus: arb          # the smaller of the two moduli (used in the bound)

    def to_jsonable(self) -> dict:
        return {"a_over_b": enclosure_strs(abs(self.theorem)),
                "b_over_a": enclosure_strs(abs(self.derivation)),
                "used": enclosure_strs(self.modulus)}


def psi_product(form: PurportedForm, psi: PsiSet, m: int) -> PsiProduct:
    if m not in form.expansions["oo"].coeffs:
        raise CertificationError(f"a(oo,{m}) is not stored (M0 = {form.M0})")
    am = form.a_inf(m)
    prods = []
    for flip in (False, True):
        p = acb(1)
        for ps in psi.members:
            p *= am - eisenstein_term(ps, form.character, m, form.r, flip)
        prods.append(p)
    mods = [abs(p) for p in prods]
    for mod in mods:
        if not mod > 0:
            raise CertificationError(
                "cannot certify: purported form too close to Eisenstein spectrum at m; "
                "choose different m")
    used = mods[0] if mods[0].lower() <= mods[1].lower() else mods[1]
    return PsiProduct(prods[0], prods[1], used)


def theorem_bound(maxE: arb, D: arb, delta: arb, ntm: arb, psi_count: int,
                  psi_modulus: arb) -> arb:
    """Upper endpoint of the bound; numerator rounded up, denominator down."""
    if not D > 0:
        raise CertificationError("D not certified positive; increase precision or adjust delta")
    if not psi_modulus > 0:
        raise CertificationError("Psi product not bounded away from 0")
    num = ball_upper(40 * (ntm + 2) ** psi_count) * ball_upper(maxE).sqrt()
    den = (ball_lower(delta) ** 3).sqrt() * ball_lower(psi_modulus) * ball_lower(D).sqrt()
    if not den > 0:
        raise CertificationError("bound denominator not positive")
    return ball_upper(num / den)


def cm_eigenvalue(n: int) -> arb:
    return (n * arb.pi() / (arb(5).sqrt() + 1)) ** 2 + arb(1) / 4


def cm_exclusion_check(N: int, lam) -> dict:
    """Distance from lambda to the nearest (n pi/(sqrt5 + 1))^2 + 1/4 (level 5 CM)."""
    if N != 5:
        raise ValueError("the CM family is specific to level 5 with the quadratic character")
    lam = ball(lam) if not isinstance(lam, arb) else lam
    best = None
    n = 0
    while True:
        lc = cm_eigenvalue(n)
        dist = abs(lam - lc)
        if best is None or dist.upper() < best[2].upper():
            best = (n, lc, dist)
        if lc > lam and (lc - lam) > best[2]:
            break
        n += 1
    n, lc, dist = best
    return {"nearest_n": n, "lambda_cm": enclosure_strs(lc),
            "distance_lower": ball_lower(dist), "distance": enclosure_strs(dist)}


# ---------------------------------------------------------------------------
# regions

@dataclass(frozen=True)
class Side:
    cusp: str
    chart: Chart


@dataclass(frozen=True)
class Alternative:
    """One formula for f~ on part of the region.

    ``piece``: only boxes that can meet the piece P F are used.
    ``guard``: only boxes where |guard z| can reach 1/sqrt(3) (f_oo branch).
    """
    side: Side
    omega: Fraction            # the factor is e(omega)
    piece: Mat | None = None
    guard: Mat | None = None
    label: str = ""


@dataclass
class RegionProblem:
    name: str
    M1: Mat
    kind: str                      # generic | fallback | bprime | small_level
    factor: int
    side_a: Side
    alternatives: tuple[Alternative, ...]
    samples: tuple[Fraction, ...]  # theta0 = pi q
    inv_sqrt3: bool
    info: dict = field(default_factory=dict)

    def signature(self):
        alts = self.alternatives
        if len(alts) == 1 and alts[0].omega == 0 and alts[0].piece is None and alts[0].guard is None:
            return ("pair", frozenset({self.side_a, alts[0].side}), self.samples)
        return (self.side_a, alts, self.samples)


def _mmul(U, V) -> tuple[int, int, int, int]:
    a, b, c, d = U
    e, f, g, h = V
    return (a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)


def _chart(U, inv_sqrt3: bool) -> Chart:
    return Chart(*U, inv_sqrt3=inv_sqrt3)


def _mt(M: Mat):
    return (M.a, M.b, M.c, M.d)


def unit_arc_samples(n: int) -> tuple[Fraction, ...]:
    return tuple(Fraction(1, 3) + Fraction(j, 3 * n) for j in range(n + 1))


def bprime_arc_samples(n: int) -> tuple[Fraction, ...]:
    return tuple(Fraction(1, 6) + Fraction(j, 3 * n) for j in range(2 * n + 1))


SPECIAL_WORDS = ("I", "S", "ST", "ST^-1")
FALLBACK_PIECES = ("T^-1", "I", "T", "TS", "TST", "ST^-1", "S", "ST", "T^-1ST^-1", "T^-1S")
SMALL_LEVEL_PIECES = ("S", "ST", "ST^-1")


def discard_hypothesis(system: CosetSystem, M: Mat) -> bool:
    """f(chi) | N / (c, N/c) for the cusp of M (c = gcd(M.c, N))."""
    N = system.level
    c = gcd(M.c, N) if M.c else N
    return (N // gcd(c, N // c)) % system.character.conductor == 0


def _side_of(system: CosetSystem, M: Mat, after) -> tuple[Side, str]:
    """Side f_b(sigma_b^{-1} M . after) for M in A; returns (side, cusp label)."""
    cusp = system.cusp_of(M)
    a, h = sigma_inverse_times(cusp, M)
    U = _mmul((1, int(a), 0, int(h)), after)
    return cusp.label(), U


def _piece_alternatives(system: CosetSystem, M1: Mat, P: Mat, inv_sqrt3: bool,
                        use_filter: bool) -> list[Alternative]:
    """f~(M1 z) for z in P F: rho = M2 P^-1 M1^-1 with M2 the representative of M1 P."""
    N, chi = system.level, system.character
    M2 = system.lookup(M1 @ P)
    rho = M2 @ P.inv() @ M1.inv()
    if rho.c % N:
        raise EnclosureError("pullback matrix not in Gamma0(N)")  # pragma: no cover
    ex = chi.exponent(rho.d)
    omega = Fraction(-ex) % 1
    lab, U = _side_of(system, M2, _mt(P.inv()))
    out = [Alternative(Side(lab, _chart(U, inv_sqrt3)), omega,
                       P if use_filter else None, None, f"piece {P.word()}")]
    if N >= 3 and lab == "0":
        G = M2 @ P.inv()
        out.append(Alternative(Side("oo", _chart(_mt(G), inv_sqrt3)), omega,
                               P if use_filter else None, G, f"piece {P.word()} f_oo branch"))
    return out


def build_regions(system: CosetSystem, n_samples: int) -> tuple[list[RegionProblem], list[Mat]]:
    """RegionProblems for A, plus the list of representatives with E = 0."""
    N = system.level
    problems: list[RegionProblem] = []
    zeros: list[Mat] = []
    special = {word_to_mat(w).normalized() for w in SPECIAL_WORDS}
    unit = unit_arc_samples(n_samples)
    for M1 in system.reps:
        cusp = system.cusp_of(M1)
        a1, h1 = sigma_inverse_times(cusp, M1)
        side_a = Side(cusp.label(), Chart(1, int(a1), 0, int(h1)))
        name = M1.word()
        if N < 3:
            alts = []
            for w in SMALL_LEVEL_PIECES:
                alts += _piece_alternatives(system, M1, word_to_mat(w), False, True)
            problems.append(RegionProblem(name, M1, "small_level", 1, side_a, tuple(alts),
                                          unit, False))
            continue
        if M1.normalized() in special:
            Mn = M1.normalized()
            if Mn in (S @ T, S @ T_INV):
                zeros.append(M1)
                continue
            # B'(delta): f_oo(z) against f_0(sigma_0^{-1} z), both sides of |z| = 1/sqrt 3
            s_rep = S if S in system.reps else system.lookup(S)
            lab0, U0 = _side_of(system, s_rep, _mt(s_rep.inv()))
            inf_side = Side("oo", Chart(1, 0, 0, 1, inv_sqrt3=True))
            zero_side = Side(lab0, _chart(U0, True))
            if Mn == I:
                sa, sb = inf_side, zero_side
            else:
                sa, sb = zero_side, inf_side
            problems.append(RegionProblem(name, M1, "bprime", 3, sa,
                                          (Alternative(sb, Fraction(0), label="cross-arc"),),
                                          bprime_arc_samples(n_samples), True))
            continue
        if discard_hypothesis(system, M1):
            M2c, warg = companion_matrix(N, M1)
            M2 = system.lookup(M1 @ S)
            if M2.normalized() != M2c.normalized():
                raise EnclosureError("companion matrix disagrees with coset lookup")  # pragma: no cover
            ex = system.character.exponent(warg % N)
            omega = Fraction(-ex) % 1
            rho = M2 @ S.inv() @ M1.inv()
            if Fraction(-system.character.exponent(rho.d)) % 1 != omega:
                raise EnclosureError("companion unit disagrees with pullback")  # pragma: no cover
            lab2, U2 = _side_of(system, M2, _mt(S.inv()))
            a2, h2 = sigma_inverse_times(system.cusp_of(M2), M2)
            alts = [Alternative(Side(lab2, Chart(*U2)), omega, None, None, "companion")]
            if lab2 == "0":
                G = M2 @ S.inv()
                alts.append(Alternative(Side("oo", Chart(*_mt(G))), omega, None, G,
                                        "companion f_oo branch"))
            if cusp.label() == "0":
                alts.append(Alternative(Side("oo", Chart(*_mt(M1))), Fraction(0), I, M1,
                                        "own f_oo branch"))
            info = {"M2": M2.tolist(), "omega_arg": warg, "a1": int(a1), "h1": int(h1),
                    "a2": int(a2), "h2": int(h2)}
            problems.append(RegionProblem(name, M1, "generic", 1, side_a, tuple(alts),
                                          unit, False, info))
        else:
            alts = []
            for w in FALLBACK_PIECES:
                alts += _piece_alternatives(system, M1, word_to_mat(w), False, True)
            problems.append(RegionProblem(name, M1, "fallback", 1, side_a, tuple(alts),
                                          unit, False))
    return problems, zeros


# ---------------------------------------------------------------------------
# bounds on one box

VARRHOS = (2, 3, 4, 6, 8, 12, 16, 24, 32)


def sample_box(q: Fraction, rho: arb, inv_sqrt3: bool) -> acb:
    """Complex ball containing R e^{t + i(pi q + phi)} for |t|, |phi| <= rho."""
    R = 1 / arb(3).sqrt() if inv_sqrt3 else arb(1)
    return R * unit_point(q) * acb(arb(0, rho), arb(0, rho)).exp()


def may_meet_piece(P: Mat, zbox: acb) -> bool:
    """False only if P^{-1} zbox certainly misses the closure of F."""
    Pi = P.inv()
    den = Pi.c * zbox + Pi.d
    if den.contains(0):
        return True
    w = (Pi.a * zbox + Pi.b) / den
    if abs(w.real).lower() > arb(1) / 2:
        return False
    if abs(w).upper() < 1:
        return False
    return True


def guard_hit(G: Mat, zbox: acb) -> bool:
    den = G.c * zbox + G.d
    if den.contains(0):
        return True
    w = (G.a * zbox + G.b) / den
    return bool(abs(w).upper() >= 1 / arb(3).sqrt())


class _Evaluators:
    def __init__(self, form: PurportedForm):
        self.form = form
        self._ev = {}

    def terms(self, cusp: str):
        if cusp not in self._ev:
            self._ev[cusp] = self.form.evaluator(cusp).terms
        return self._ev[cusp]


@dataclass
class BoxResult:
    bound: arb              # upper bound for sup |E| over the box (as a ball)
    alternatives_used: int
    value0: arb | None      # |E(0, theta0)| for the first formula
    taylor: arb = arb(0)    # parts of the largest alternative
    remainder: arb = arb(0)

    @property
    def remainder_dominates(self) -> bool:
        return bool(self.remainder > self.taylor)


def box_bound(problem: RegionProblem, q: Fraction, form: PurportedForm, d: int, rho: arb,
              evs: _Evaluators | None = None) -> BoxResult:
    evs = evs or _Evaluators(form)
    W = form.whittaker
    zbox = sample_box(q, rho, problem.inv_sqrt3)
    A = side_expansion(evs.terms(problem.side_a.cusp), W, problem.side_a.chart, q, d)
    maj_cache = {}

    def majorant(side: Side, v: int):
        key = (side, v)
        if key not in maj_cache:
            maj_cache[key] = polydisc_majorant(evs.terms(side.cusp), side.chart, q, rho * v)
        return maj_cache[key]

    best = None
    used = 0
    value0 = None
    parts = (arb(0), arb(0))
    for alt in problem.alternatives:
        if alt.piece is not None and not may_meet_piece(alt.piece, zbox):
            continue
        if alt.guard is not None and not guard_hit(alt.guard, zbox):
            continue
        if alt.side == problem.side_a and alt.omega == 0:
            continue     # identical formula: E vanishes identically
        B = side_expansion(evs.terms(alt.side.cusp), W, alt.side.chart, q, d)
        coeffs = combine(A, B, root_of_unity(alt.omega))
        tp = taylor_part_bound(coeffs, rho)
        rem = None
        for v in VARRHOS:
            ma, mb = majorant(problem.side_a, v), majorant(alt.side, v)
            if ma is None or mb is None:
                continue
            rv = remainder_bound(ma + mb, v, d)
            if rem is None or rv < rem:
                rem = rv
        if rem is None:
            raise CertificationError(f"no admissible Cauchy radius for {problem.name} at q={q}")
        total = ball_upper(tp + rem)
        if value0 is None:
            value0 = abs(coeffs[0][0])
        if best is None or total > best:
            best, parts = total, (tp, rem)
        used += 1
    if best is None:
        best = arb(0)
    return BoxResult(best, used, value0, *parts)


def region_sup_bound(problem: RegionProblem, form: PurportedForm, d: int, rho: arb) -> arb:
    """Upper bound of sup |E|^2 over the region (without the factor 3 of B')."""
    evs = _Evaluators(form)
    sup = arb(0)
    for q in problem.samples:
        sup = sup.max(box_bound(problem, q, form, d, rho, evs).bound)
    return ball_upper(sup * sup)


# ---------------------------------------------------------------------------
# certification

@dataclass
class CertifyOptions:
    taylor_degree: int = 45
    n_samples: int = 100
    m: int | None = None
    delta_cap: float | str | None = None
    threads: int = 1
    M0: int | None = None
    progress: bool = False
    validate: bool = True       # False only for diagnostics; recorded in the certificate

    def check(self):
        if self.taylor_degree < 2:
            raise ValueError("taylor degree must be >= 2")
        if self.n_samples < 4:
            raise ValueError("need at least 4 samples")


@dataclass
class RegionResult:
    problem: RegionProblem
    sup_bound: arb          # sup |E| bound
    E: arb                  # factor * sup^2
    samples_evaluated: int
    worst_sample: Fraction | None
    remainder_dominates: bool = False


@dataclass
class Certificate:
    bound: arb
    lam: arb
    m: int
    psi: PsiSet
    delta: arb
    D: arb
    regions: list[RegionResult]
    zero_matrices: list[Mat]
    maxE: arb
    N_Tm: arb
    psi_product: PsiProduct
    parameters: dict
    validation: ValidationReport
    input_digest: str | None
    timings: dict
    extra: dict = field(default_factory=dict)

    def to_jsonable(self) -> dict:
        E = []
        for r in self.regions:
            E.append({"matrix": r.problem.M1.tolist(), "word": r.problem.name,
                      "kind": r.problem.kind, "factor": r.problem.factor,
                      "bound_sq": enclosure_strs(r.E),
                      "worst_sample_angle_over_pi": str(r.worst_sample),
                      "remainder_dominates": r.remainder_dominates, **r.problem.info})
        for M in self.zero_matrices:
            E.append({"matrix": M.tolist(), "word": M.word(), "kind": "zero", "factor": 0,
                      "bound_sq": ["0", "0"]})
        return {
            "bound": upper_str(self.bound, 6),
            "bound_enclosure": enclosure_strs(self.bound),
            "lambda": enclosure_strs(self.lam),
            "m": self.m,
            "psi_count": self.psi.count,
            "psi_members": [ps.conrey_index for ps in self.psi.members],
            "delta": enclosure_strs(self.delta),
            "D": enclosure_strs(self.D),
            "E": E,
            "maxE": enclosure_strs(self.maxE),
            "N_Tm": enclosure_strs(self.N_Tm),
            "psi_product_modulus": self.psi_product.to_jsonable(),
            "parameters": self.parameters,
            "input_digest": self.input_digest,
            "timings": self.timings,
            "statement": "|lambda~ - lambda| <= 40 (N_Tm + 2)^psi_count sqrt(maxE) / "
                         "(delta^(3/2) psi_product_modulus sqrt(D))",
            **self.extra,
        }

    def to_json(self, **kw) -> str:
        return dumps(self.to_jsonable(), indent=kw.pop("indent", 2))


def choose_delta(system: CosetSystem, n_samples: int, cap=None) -> arb:
    """Exact dyadic delta <= min(0.9 corner limit, pi/(6 N_s), cap)."""
    cands = [corner_delta_limit(system) * arb("0.9"), arb.pi() / (6 * n_samples)]
    if cap is not None:
        cands.append(ball(str(cap)))
    lo = None
    for c in cands:
        c = ball_lower(c)
        lo = c if lo is None else lo.min(c)
    return ball_lower(lo)


# worker state for the process pool (fork start method only)
_POOL_STATE: dict = {}


def _pool_task(args):
    pi, q = args
    st = _POOL_STATE
    with _precision(st["prec"]):
        res = box_bound(st["problems"][pi], q, st["form"], st["d"], st["rho"], st["evs"])
        return ball_key(res.bound), res.remainder_dominates


class _precision:
    def __init__(self, bits):
        self.bits = bits

    def __enter__(self):
        self.old = flint.ctx.prec
        flint.ctx.prec = self.bits

    def __exit__(self, *exc):
        flint.ctx.prec = self.old


def evaluate_regions(problems: Sequence[RegionProblem], form: PurportedForm, d: int, rho: arb,
                     threads: int = 1, progress: bool = False) -> list[RegionResult]:
    evs = _Evaluators(form)
    canon: dict = {}
    jobs = []
    for i, p in enumerate(problems):
        sig = p.signature()
        if sig not in canon:
            canon[sig] = i
            jobs.extend((i, q) for q in p.samples)
    results: dict = {}
    if threads > 1 and "fork" in mp.get_all_start_methods():
        _POOL_STATE.update(problems=list(problems), form=form, d=d, rho=rho, evs=evs,
                           prec=flint.ctx.prec)
        ctx = mp.get_context("fork")
        with ProcessPoolExecutor(max_workers=threads, mp_context=ctx) as pool:
            for job, (key, dom) in zip(jobs, pool.map(_pool_task, jobs, chunksize=4)):
                results[job] = (ball_from_key(key), dom)
        _POOL_STATE.clear()
    else:
        t0 = time.time()
        for k, (i, q) in enumerate(jobs):
            res = box_bound(problems[i], q, form, d, rho, evs)
            results[(i, q)] = (res.bound, res.remainder_dominates)
            if progress and (k % 20 == 0 or k == len(jobs) - 1):
                print(f"  [{k + 1}/{len(jobs)}] {problems[i].name} q={q} "
                      f"{time.time() - t0:.1f}s", file=sys.stderr, flush=True)
    out = []
    for i, p in enumerate(problems):
        src = canon[p.signature()]
        sup, worst, dom = arb(0), None, False
        for q in p.samples:           # canonical order: deterministic max
            b, bdom = results[(src, q)]
            if worst is None or b.upper() > sup.upper():
                worst, dom = q, bdom
            sup = sup.max(b)
        E = sup * sup * p.factor
        if dom:
            warnings.warn(f"{p.name}: Taylor remainder dominates at the worst sample "
                          f"(raise the degree for a sharper bound)", RemainderWarning)
        out.append(RegionResult(p, sup, E, len(p.samples), worst, dom))
    return out


def certify(form: PurportedForm, options: CertifyOptions | None = None) -> Certificate:
    options = options or CertifyOptions()
    options.check()
    timings = {}
    t_start = time.time()
    if options.M0 is not None and options.M0 != form.M0:
        from .forms import with_truncation
        form = with_truncation(form, options.M0)
    report = validate_conditions(form)
    if options.validate and not report.passed:
        raise ValidationError(report)
    if not form.lam > arb(1) / 4:
        raise CertificationError("lambda must exceed 1/4")
    N, chi, system = form.level, form.character, form.system
    m = options.m if options.m is not None else select_m(N, chi)
    if m < 2 or gcd(m, N) != 1:
        raise CertificationError(f"m = {m} must be >= 2 and coprime to N")
    psi = build_psi_set(N, chi, m)
    rho = arb.pi() / (6 * options.n_samples)
    delta = choose_delta(system, options.n_samples, options.delta_cap)
    if not delta > 0:
        raise CertificationError("delta is not positive")
    if not delta <= rho:
        raise CertificationError("delta exceeds the sample half-spacing")  # pragma: no cover

    t = time.time()
    D = compute_D(form.whittaker, DParameters(N, m, psi.count, delta))
    timings["D"] = round(time.time() - t, 3)

    t = time.time()
    pp = psi_product(form, psi, m)
    ntm = n_tm(m)
    timings["psi_product"] = round(time.time() - t, 3)

    t = time.time()
    problems, zeros = build_regions(system, options.n_samples)
    regions = evaluate_regions(problems, form, options.taylor_degree, rho, options.threads,
                               options.progress)
    timings["E"] = round(time.time() - t, 3)
    maxE = arb(0)
    for r in regions:
        maxE = maxE.max(r.E)
    bound = theorem_bound(maxE, D, delta, ntm, psi.count, pp.modulus)
    if not bound.is_finite():
        raise CertificationError("final bound is not finite")
    timings["total"] = round(time.time() - t_start, 3)
    params = {"level": N, "character_conrey_index": chi.conrey_index,
              "taylor_degree": options.taylor_degree, "n_samples": options.n_samples,
              "M0": form.M0, "precision": flint.ctx.prec,
              "sample_half_width": enclosure_strs(rho),
              "delta_cap": None if options.delta_cap is None else str(options.delta_cap),
              "threads": options.threads, "validated": report.passed}
    extra = {}
    if N == 5 and chi.order == 2:
        cm = cm_exclusion_check(5, form.lam)
        cm["distance_lower"] = str(cm["distance_lower"].mid().str(10, radius=False))
        extra["cm_exclusion"] = cm
    return Certificate(bound, form.lam, m, psi, delta, D, regions, zeros, maxE, ntm, pp,
                       params, report, form.source_digest, timings, extra)


def check_certificate(cert: dict, input_bytes: bytes | None = None) -> list[str]:
    """Consistency problems of a certificate dict (empty list when it checks out).

    Re-derives the final bound from the recorded enclosure endpoints and, if
    the input bytes are given, compares the digest.
    """
    issues = []
    if input_bytes is not None:
        dig = hashlib.sha256(input_bytes).hexdigest()
        if cert.get("input_digest") != dig:
            issues.append("input digest mismatch")
    try:
        maxE = ball(cert["maxE"][1])
        D = ball(cert["D"][0])
        delta = ball(cert["delta"][0])
        ntm = ball(cert["N_Tm"][1])
        pm = ball(cert["psi_product_modulus"]["used"][0])
        k = int(cert["psi_count"])
        for e in cert["E"]:
            if ball(e["bound_sq"][1]) > maxE:
                issues.append(f"E entry {e['word']} exceeds maxE")
        num = 40 * (ntm + 2) ** k * maxE.sqrt()
        den = (delta ** 3).sqrt() * pm * D.sqrt()
        again = ball_upper(num / den)
        if again > ball(cert["bound"]) * (1 + arb("1e-5")):
            issues.append("recorded bound smaller than the recomputed one")
    except (KeyError, IndexError, ValueError, ZeroDivisionError) as exc:
        issues.append(f"malformed certificate: {exc}")
    return issues
