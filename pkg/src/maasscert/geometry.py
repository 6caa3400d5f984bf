"""Coset geometry of Gamma0(N) in SL2(Z).

The representative set A is built by the divisor/cusp enumeration: for
each divisor c of N, with v = gcd(c, N/c), each unit class a mod v (taken
as the least nonnegative integer coprime to c) is paired with the d in
[-1, N/v - 1) satisfying a d = 1 mod c.  The matrix [[a, (ad-1)/c], [c, d]]
is appended, with c = N giving the identity.  The matrices of one (c, a)
block all send infinity to the same cusp a/c, and there are exactly
width(a/c) of them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import gcd

from flint import acb, arb

from .characters import (DirichletCharacter, divisors, factorize, hall_divisors,
                         trivial_character, units)
from .enclosure import Ball, CBall, EnclosureError


class GeometryError(ValueError):
    pass


class UndecidableError(EnclosureError):
    """Ball arithmetic could not decide a fundamental-domain membership."""


@dataclass(frozen=True, order=True)
class Mat:
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if self.a * self.d - self.b * self.c != 1:
            raise GeometryError(f"determinant != 1: {self}")

    def __matmul__(self, o: "Mat") -> "Mat":
        return Mat(self.a * o.a + self.b * o.c, self.a * o.b + self.b * o.d,
                   self.c * o.a + self.d * o.c, self.c * o.b + self.d * o.d)

    def inv(self) -> "Mat":
        return Mat(self.d, -self.b, -self.c, self.a)

    def __neg__(self) -> "Mat":
        return Mat(-self.a, -self.b, -self.c, -self.d)

    def normalized(self) -> "Mat":
        """Sign representative in PSL2: c > 0, or c = 0 and d > 0."""
        if self.c < 0 or (self.c == 0 and self.d < 0):
            return -self
        return self

    def in_gamma0(self, N: int) -> bool:
        return self.c % N == 0

    def act(self, z):
        """Moebius action on a complex ball (or Python complex)."""
        num = self.a * z + self.b
        den = self.c * z + self.d
        if isinstance(den, acb) and den.contains(0):
            raise EnclosureError("Moebius denominator contains 0")
        return num / den

    def cusp(self) -> Fraction | None:
        """Image of infinity: a/c, or None for infinity itself."""
        return None if self.c == 0 else Fraction(self.a, self.c)

    def tolist(self) -> list[list[int]]:
        return [[self.a, self.b], [self.c, self.d]]

    def word(self) -> str:
        return f"[[{self.a},{self.b}],[{self.c},{self.d}]]"


I = Mat(1, 0, 0, 1)
S = Mat(0, -1, 1, 0)
T = Mat(1, 1, 0, 1)
T_INV = Mat(1, -1, 0, 1)


def T_pow(n: int) -> Mat:
    return Mat(1, n, 0, 1)


def word_to_mat(word: str) -> Mat:
    """Parse products like 'ST^-1' or 'T^2S' (letters S, T, I)."""
    out, i = I, 0
    while i < len(word):
        ch = word[i]
        i += 1
        base = {"S": S, "T": T, "I": I}[ch]
        exp = 1
        if i < len(word) and word[i] == "^":
            j = i + 1
            if j < len(word) and word[j] in "+-":
                j += 1
            while j < len(word) and word[j].isdigit():
                j += 1
            exp = int(word[i + 1:j])
            i = j
        m = I
        step = base if exp >= 0 else base.inv()
        for _ in range(abs(exp)):
            m = m @ step
        out = out @ m
    return out


def sl2_index(N: int) -> int:
    out = N
    for p in factorize(N):
        out = out * (p + 1) // p
    return out


# ---------------------------------------------------------------------------
# cusps

@dataclass(frozen=True)
class Cusp:
    """A cusp a/b (b >= 0, infinity = 1/0) with width, normalizer and parameter.

    ``gamma`` is the SL2(Z) part of the normalizer; the full normalizer is
    sigma = gamma * diag(sqrt(h), 1/sqrt(h)).  ``mu`` is stored exactly.
    """
    a: int
    b: int
    width: int
    gamma: Mat
    mu: Fraction

    @property
    def is_infinity(self) -> bool:
        return self.b == 0

    def label(self) -> str:
        return "oo" if self.b == 0 else (f"{self.a}" if self.b == 1 else f"{self.a}/{self.b}")

    def fraction(self) -> Fraction | None:
        return None if self.b == 0 else Fraction(self.a, self.b)

    def stabilizer_generator(self) -> Mat:
        """sigma T sigma^{-1} = gamma T^h gamma^{-1}."""
        return self.gamma @ T_pow(self.width) @ self.gamma.inv()


def parse_cusp(label) -> Fraction | None:
    """'oo'/'inf'/'1/0' -> None; otherwise a Fraction."""
    if label is None:
        return None
    if isinstance(label, Fraction):
        return label
    if isinstance(label, int):
        return Fraction(label)
    s = str(label).strip().lower()
    if s in ("oo", "inf", "infinity", "∞", "1/0"):
        return None
    return Fraction(s)


def cusp_data(N: int, chi: DirichletCharacter | None, cusp) -> Cusp:
    frac = parse_cusp(cusp)
    chi = chi if chi is not None else trivial_character(N)
    if frac is None:
        a, b = 1, 0
        gamma = I
    else:
        a, b = frac.numerator, frac.denominator
        # completion [[a, x], [b, y]] with the least y >= 0
        y = pow(a, -1, b) if b > 1 else 0
        x = (a * y - 1) // b
        gamma = Mat(a, x, b, y)
    h = N // gcd(N, b * b)
    stab = gamma @ T_pow(h) @ gamma.inv()
    if stab.c % N:
        raise GeometryError("cusp stabilizer not in Gamma0(N)")  # pragma: no cover
    mu = chi.exponent(stab.d)
    if mu is None:
        raise GeometryError("stabilizer lower-right entry not a unit")  # pragma: no cover
    return Cusp(a, b, h, gamma, Fraction(mu))


def _completion(a: int, b: int) -> Mat:
    if b == 0:
        return I if a == 1 else -I
    y = pow(a, -1, b) if b > 1 else 0
    return Mat(a, (a * y - 1) // b, b, y)


def cusps_equivalent(N: int, c1, c2) -> bool:
    """Whether gamma(c1) = c2 for some gamma in Gamma0(N).

    Any SL2(Z) matrix sending c1 to c2 is +-g2 T^k g1^{-1} with g_i the
    completions, and its lower-left entry is affine in k, so k mod N suffices.
    """
    def ab(c):
        c = parse_cusp(c)
        return (1, 0) if c is None else (c.numerator, c.denominator)
    g1 = _completion(*ab(c1))
    g2 = _completion(*ab(c2))
    return any((g2 @ T_pow(k) @ g1.inv()).c % N == 0 for k in range(N))


# ---------------------------------------------------------------------------
# coset system

@dataclass(frozen=True)
class CosetSystem:
    level: int
    reps: tuple[Mat, ...]
    cusp_of_rep: tuple[Cusp, ...]
    cusps: tuple[Cusp, ...]
    character: DirichletCharacter = field(repr=False)

    def __len__(self):
        return len(self.reps)

    def index(self, M: Mat) -> int:
        return self.reps.index(M)

    def cusp_of(self, M: Mat) -> Cusp:
        return self.cusp_of_rep[self.reps.index(M)]

    @property
    def hall_cusps(self) -> dict[int, Cusp]:
        """Hall divisor d -> the cusp of A equivalent to 1/d."""
        out = {}
        for d in hall_divisors(self.level):
            target = Fraction(1, d) if d != self.level else None
            if d == self.level and self.level == 1:
                target = None
            for c in self.cusps:
                if cusps_equivalent(self.level, c.fraction(), target):
                    out[d] = c
                    break
        return out

    def coset_key(self, M: Mat) -> tuple[int, int]:
        return _p1_key(self.level, M.c, M.d)

    def lookup(self, M: Mat) -> Mat:
        """The representative in A of the right coset Gamma0(N) M."""
        return self._table()[self.coset_key(M)]

    def _table(self) -> dict:
        return _coset_table(self.level, self.reps)

    def special(self) -> dict[str, Mat]:
        return {"I": I, "S": S, "ST": S @ T, "ST^-1": S @ T_INV}

    def to_jsonable(self) -> dict:
        return {
            "level": self.level,
            "index": len(self.reps),
            "representatives": [
                {"matrix": M.tolist(), "cusp": c.label(), "width": c.width, "mu": str(c.mu)}
                for M, c in zip(self.reps, self.cusp_of_rep)
            ],
            "cusps": [{"cusp": c.label(), "width": c.width, "mu": str(c.mu),
                       "normalizer": c.gamma.tolist()} for c in self.cusps],
            "hall_cusps": {str(d): c.label() for d, c in self.hall_cusps.items()},
        }


@lru_cache(maxsize=None)
def _coset_table(N: int, reps: tuple) -> dict:
    table = {}
    for M in reps:
        k = _p1_key(N, M.c, M.d)
        if k in table:
            raise GeometryError(f"two representatives in one coset: {table[k]}, {M}")
        table[k] = M
    return table


@lru_cache(maxsize=None)
def _unit_list(N: int) -> tuple[int, ...]:
    return tuple(units(N))


def _p1_key(N: int, c: int, d: int) -> tuple[int, int]:
    """Canonical point of P^1(Z/N) for the bottom row (c : d)."""
    if N == 1:
        return (0, 0)
    return min(((u * c) % N, (u * d) % N) for u in _unit_list(N))


def coset_representatives(N: int, chi: DirichletCharacter | None = None) -> CosetSystem:
    if N < 1:
        raise GeometryError("level must be positive")
    chi = chi if chi is not None else trivial_character(N)
    if chi.modulus != N:
        chi = chi.lift(N)
    reps: list[Mat] = []
    rep_cusps: list[Cusp] = []
    cusps: list[Cusp] = []
    for c in divisors(N):
        v = gcd(N // c, c)
        if c == N:
            cu = cusp_data(N, chi, None)
            reps.append(I)
            rep_cusps.append(cu)
            cusps.append(cu)
            continue
        for a in _unit_reps(v, c):
            cu = cusp_data(N, chi, Fraction(a, c))
            block = []
            for d in range(-1, N // v - 1):
                if a == 0:
                    if c != 1:
                        continue
                    block.append(Mat(0, -1, 1, d))
                elif (a * d - 1) % c == 0:
                    block.append(Mat(a, (a * d - 1) // c, c, d))
            if len(block) != cu.width:
                raise GeometryError(
                    f"block for cusp {a}/{c} has {len(block)} matrices, width {cu.width}")
            reps.extend(block)
            rep_cusps.extend([cu] * len(block))
            cusps.append(cu)
    if len(reps) != sl2_index(N):
        raise GeometryError("representative count differs from the index")  # pragma: no cover
    _coset_table(N, tuple(reps))
    return CosetSystem(N, tuple(reps), tuple(rep_cusps), tuple(cusps), chi)


def _unit_reps(v: int, c: int) -> list[int]:
    """Least nonnegative integer coprime to c in each unit class mod v."""
    out = []
    for cls in (units(v) if v > 1 else [0]):
        a = cls
        while gcd(a, c) != 1:
            a += v
        out.append(a)
    return out


# ---------------------------------------------------------------------------
# pullback

def _sl2_reduce_float(z: complex, max_steps: int = 10000) -> Mat:
    g = I
    for _ in range(max_steps):
        n = round(z.real)
        if n:
            z -= n
            g = T_pow(-n) @ g
        if abs(z) < 1 - 1e-15:
            z = -1 / z
            g = S @ g
        else:
            return g
    raise UndecidableError("SL2 reduction did not terminate")


_NEIGHBOUR_WORDS = ("I", "T", "T^-1", "S", "ST", "ST^-1", "TS", "T^-1S", "TST", "T^-1ST^-1",
                    "STS", "ST^-1S", "TST^-1", "T^-1ST", "ST^2", "ST^-2", "T^2S", "T^-2S")


def _in_closure_F(w: acb) -> bool | None:
    """True/False if membership in closure(F) is decided; None if undecidable."""
    x, y = w.real, w.imag
    abs2 = x * x + y * y
    inside = [abs(x) <= arb(0.5), abs2 >= 1]
    outside = [abs(x) > arb(0.5), abs2 < 1]
    if all(inside):
        return True
    if any(outside):
        return False
    return None


def pullback(N: int, z: CBall, system: CosetSystem | None = None):
    """Return (rho, M, w): rho in Gamma0(N), M in A, w = rho z in closure(F_M).

    Ties on boundaries are broken by the lexicographically smallest
    (c, d, a, b) of M, then of rho.
    """
    z = acb(z)
    if not z.imag > 0:
        raise UndecidableError("point not certified in the upper half plane")
    system = system or coset_representatives(N)
    g0 = _sl2_reduce_float(complex(z.mid()))
    cands = []
    undecided = False
    for wd in _NEIGHBOUR_WORDS:
        g = word_to_mat(wd) @ g0
        w = g.act(z)
        mem = _in_closure_F(w)
        if mem is None:
            undecided = True
        elif mem:
            M = system.lookup(g.inv())
            rho = (M @ g).normalized()
            cands.append(((M.c, M.d, M.a, M.b), (rho.c, rho.d, rho.a, rho.b), rho, M))
    if undecided:
        raise UndecidableError("undecidable at this precision: point near a boundary of F")
    if not cands:
        raise UndecidableError("reduction failed")  # pragma: no cover
    cands.sort(key=lambda t: (t[0], t[1]))
    _, _, rho, M = cands[0]
    return rho, M, rho.act(z)


def hyperbolic_distance(z: CBall, w: CBall) -> Ball:
    z, w = acb(z), acb(w)
    p = abs(z - w.conjugate())
    q = abs(z - w)
    den = p - q
    if not den > 0:
        if (z - w).is_zero():
            return arb(0)
        raise EnclosureError("points not separated from the boundary")
    return ((p + q) / den).log()


# ---------------------------------------------------------------------------
# companion matrix and corners

def companion_matrix(N: int, M1: Mat) -> tuple[Mat, int]:
    """(M2, omega_arg) with f~(M1 z) = conj(chi)(omega_arg) f_b(sigma_b^{-1} M2 S z)."""
    if N < 3:
        raise GeometryError("companion construction needs N >= 3")
    if M1.normalized() in {I, S, S @ T, S @ T_INV}:
        raise GeometryError("companion undefined for I, S, ST, ST^-1")
    a1, c1, d1 = M1.a, M1.c, M1.d
    c2 = gcd(d1, N)
    v = gcd(c2, N // c2)
    if c2 == 1:
        a2 = 0
    else:
        target = (-(d1 // c2) * pow(c1, -1, v)) % v if v > 1 else 0
        a2 = target
        while gcd(a2, c2) != 1:
            a2 += v
    mod = N // c2
    dd = (-c1 * pow((d1 // c2) % mod, -1, mod)) % mod if mod > 1 else 0
    d2 = None
    for cand in range(-1, N // v - 1):
        if (cand - dd) % mod:
            continue
        if c2 != 1 and (a2 * cand - 1) % c2:
            continue
        d2 = cand
        break
    if d2 is None:
        raise GeometryError("no admissible d2")  # pragma: no cover
    if c2 == N:
        M2 = I
    elif c2 == 1:
        M2 = Mat(0, -1, 1, d2)
    else:
        M2 = Mat(a2, (a2 * d2 - 1) // c2, c2, d2)
    num = d2 - a1 * (d1 * d2 + c1 * c2)
    if num % c1:
        raise GeometryError("omega argument is not integral")  # pragma: no cover
    Mp = M2 @ S @ M1.inv()
    if Mp.c % N:
        raise GeometryError("M2 S M1^-1 not in Gamma0(N)")  # pragma: no cover
    return M2, num // c1


def corner_points() -> tuple[acb, acb]:
    """e(1/6) and e(1/3)."""
    h = arb(3).sqrt() / 2
    return acb(arb(1) / 2, h), acb(-arb(1) / 2, h)


def corner_delta_limit(system: CosetSystem) -> Ball:
    """Certified lower bound on min Im(M e(1/6)), Im(M e(1/3)) over M in A."""
    out = None
    for M in system.reps:
        for z in corner_points():
            im = M.act(z).imag
            out = im if out is None else out.min(im)
    return out.lower()


def translate_to_strip(x: Fraction) -> Fraction:
    return x - (x.numerator // x.denominator)


def sigma_inverse_times(cusp: Cusp, M: Mat) -> tuple[Fraction, Fraction]:
    """(a, h) with sigma^{-1} M = [[1, a], [0, h]] up to the sqrt(h) scaling.

    sigma = gamma diag(sqrt h, 1/sqrt h), so sigma^{-1} M z = (gamma^{-1} M z)/h.
    gamma^{-1} M must fix infinity; it is then +-[[1, k], [0, 1]] and the
    affine map is z -> (z + k)/h.
    """
    g = cusp.gamma.inv() @ M
    if g.c != 0:
        raise GeometryError(f"{M} does not map infinity to the cusp {cusp.label()}")
    if g.a < 0:
        g = -g
    return Fraction(g.b), Fraction(cusp.width)
