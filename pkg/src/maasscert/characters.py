"""Dirichlet characters mod N with exact root-of-unity values.

A character is stored as a map r -> Fraction in [0, 1) for every unit r
mod N, meaning chi(r) = e(value) = exp(2 pi i value).  Non-units map to
``None`` (chi(r) = 0).  Values stay exact until converted with
:meth:`DirichletCharacter.ball`.

Conrey labels follow the usual convention: for an odd prime power the
reference generator is the least primitive root mod p (bumped by p when
it fails to be primitive mod p^2), and for 2^e the pair (-1, 5) is used.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Iterable, Mapping, Sequence

from flint import acb, arb, fmpq

from .enclosure import CBall


class CharacterError(ValueError):
    pass


class OddCharacterError(CharacterError):
    """Raised for chi(-1) = -1; Maass forms twisted by chi need chi even."""


# ---------------------------------------------------------------------------
# elementary number theory

def factorize(n: int) -> dict[int, int]:
    n = abs(int(n))
    out: dict[int, int] = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def divisors(n: int) -> list[int]:
    ds = [1]
    for p, e in factorize(n).items():
        ds = [d * p**k for d in ds for k in range(e + 1)]
    return sorted(ds)


def hall_divisors(n: int) -> list[int]:
    return [d for d in divisors(n) if gcd(d, n // d) == 1]


def euler_phi(n: int) -> int:
    out = 1
    for p, e in factorize(n).items():
        out *= (p - 1) * p ** (e - 1)
    return out


def units(n: int) -> list[int]:
    if n == 1:
        return [0]
    return [r for r in range(n) if gcd(r, n) == 1]


def multiplicative_order(g: int, n: int) -> int:
    if n == 1:
        return 1
    k, x = 1, g % n
    while x != 1:
        x = (x * g) % n
        k += 1
    return k


def primes_up_to(n: int) -> list[int]:
    if n < 2:
        return []
    sieve = bytearray([1]) * (n + 1)
    sieve[0:2] = b"\x00\x00"
    for p in range(2, int(n**0.5) + 1):
        if sieve[p]:
            sieve[p * p :: p] = bytearray(len(sieve[p * p :: p]))
    return [p for p in range(n + 1) if sieve[p]]


@lru_cache(maxsize=None)
def _conrey_generator(p: int) -> int:
    """Least primitive root mod p that is also primitive mod p^2."""
    for g in range(2, p):
        if multiplicative_order(g, p) == p - 1:
            return g if pow(g, p - 1, p * p) != 1 else g + p
    raise CharacterError(f"no primitive root mod {p}")


def _dlog(x: int, g: int, n: int, order: int) -> int:
    y = 1
    for k in range(order):
        if y == x % n:
            return k
        y = (y * g) % n
    raise CharacterError(f"{x} not in <{g}> mod {n}")


def _conrey_prime_power_exponent(p: int, e: int, n: int, m: int) -> Fraction:
    """Exponent of chi_{p^e}(n, m) in the Conrey labelling."""
    q = p**e
    if p == 2:
        if e == 1:
            return Fraction(0)
        eps_n = 0 if n % 4 == 1 else 1
        eps_m = 0 if m % 4 == 1 else 1
        val = Fraction(eps_n * eps_m, 2)
        if e >= 3:
            k = 2 ** (e - 2)
            a = _dlog(n if n % 4 == 1 else -n, 5, q, k)
            b = _dlog(m if m % 4 == 1 else -m, 5, q, k)
            val += Fraction(a * b, k)
        return val % 1
    g = _conrey_generator(p)
    phi = (p - 1) * p ** (e - 1)
    a = _dlog(n, g, q, phi)
    b = _dlog(m, g, q, phi)
    return Fraction(a * b, phi) % 1


# ---------------------------------------------------------------------------
# characters

@dataclass(frozen=True)
class DirichletCharacter:
    modulus: int
    values: Mapping[int, Fraction] = field(repr=False)
    conrey_index: int | None = None
    validate: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        N = self.modulus
        if N < 1:
            raise CharacterError("modulus must be positive")
        us = units(N)
        if sorted(self.values) != us:
            raise CharacterError("value table must cover exactly the units mod N")
        if not self.validate:
            return
        for a in us:
            for b in us:
                if (self.values[a] + self.values[b] - self.values[(a * b) % N]) % 1 != 0:
                    raise CharacterError(
                        f"not a homomorphism: chi({a})chi({b}) != chi({a * b % N})")

    # values -----------------------------------------------------------
    def exponent(self, r: int) -> Fraction | None:
        """Exponent k/ord with chi(r) = e(k/ord), or None if gcd(r, N) > 1."""
        N = self.modulus
        if gcd(r, N) != 1:
            return None
        return self.values[r % N]

    def __call__(self, r: int) -> complex:
        """Floating-point value, for display only."""
        import cmath
        ex = self.exponent(r)
        return 0j if ex is None else cmath.exp(2j * cmath.pi * float(ex))

    def ball(self, r: int) -> CBall:
        """chi(r) as an exact-as-possible complex ball."""
        ex = self.exponent(r)
        if ex is None:
            return acb(0)
        return root_of_unity(ex)

    def conj_ball(self, r: int) -> CBall:
        ex = self.exponent(r)
        if ex is None:
            return acb(0)
        return root_of_unity(-ex)

    # structure --------------------------------------------------------
    @property
    def parity(self) -> int:
        return 1 if self.exponent(-1) == 0 else -1

    @property
    def is_even(self) -> bool:
        return self.parity == 1

    @property
    def order(self) -> int:
        o = 1
        for v in self.values.values():
            o = o * v.denominator // gcd(o, v.denominator)
        return o

    @property
    def is_trivial(self) -> bool:
        return all(v == 0 for v in self.values.values())

    @property
    def is_real(self) -> bool:
        return all(v in (0, Fraction(1, 2)) for v in self.values.values())

    @property
    def conductor(self) -> int:
        return _conductor(self.modulus, tuple(sorted(self.values.items())))

    def key(self) -> tuple:
        return (self.modulus, tuple(sorted(self.values.items())))

    def __eq__(self, other):
        return isinstance(other, DirichletCharacter) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    # algebra ----------------------------------------------------------
    def __mul__(self, other: "DirichletCharacter") -> "DirichletCharacter":
        if self.modulus != other.modulus:
            raise CharacterError("moduli differ")
        vals = {r: (self.values[r] + other.values[r]) % 1 for r in self.values}
        return DirichletCharacter(self.modulus, vals, validate=False)

    def conjugate(self) -> "DirichletCharacter":
        return DirichletCharacter(self.modulus, {r: (-v) % 1 for r, v in self.values.items()},
                                  validate=False)

    def lift(self, modulus: int) -> "DirichletCharacter":
        """The induced character modulo a multiple of the modulus."""
        if modulus % self.modulus:
            raise CharacterError(f"{self.modulus} does not divide {modulus}")
        vals = {r: self.values[r % self.modulus] for r in units(modulus)}
        return DirichletCharacter(modulus, vals, validate=False)

    def restrict(self, modulus: int) -> "DirichletCharacter":
        """The character mod a divisor of N that induces self (error if none)."""
        N = self.modulus
        if N % modulus:
            raise CharacterError(f"{modulus} does not divide {N}")
        vals: dict[int, Fraction] = {}
        for r in units(N):
            rr = r % modulus if modulus > 1 else 0
            if rr in vals and vals[rr] != self.values[r]:
                raise CharacterError(f"not induced from modulus {modulus}")
            vals[rr] = self.values[r]
        return DirichletCharacter(modulus, vals)

    def __repr__(self):
        idx = f", conrey={self.conrey_index}" if self.conrey_index is not None else ""
        return f"DirichletCharacter(mod {self.modulus}{idx}, conductor {self.conductor})"


@lru_cache(maxsize=None)
def _conductor(N: int, items: tuple) -> int:
    vals = dict(items)
    for f in divisors(N):
        if all(vals[r] == 0 for r in vals if (r - 1) % f == 0):
            return f
    return N


def root_of_unity(ex: Fraction) -> CBall:
    """e(ex) as a complex ball; exact at the eighth roots where possible."""
    ex = Fraction(ex) % 1
    if ex == 0:
        return acb(1)
    if ex == Fraction(1, 2):
        return acb(-1)
    if ex == Fraction(1, 4):
        return acb(0, 1)
    if ex == Fraction(3, 4):
        return acb(0, -1)
    q = fmpq(2 * ex.numerator, ex.denominator)
    s, c = arb.sin_cos_pi_fmpq(q)
    return acb(c, s)


def trivial_character(N: int) -> DirichletCharacter:
    return DirichletCharacter(N, {r: Fraction(0) for r in units(N)}, conrey_index=1,
                              validate=False)


def conrey_character(N: int, index: int) -> DirichletCharacter:
    if gcd(index, N) != 1:
        raise CharacterError(f"Conrey index must be coprime to {N}")
    index %= N
    if N == 1:
        return trivial_character(1)
    fac = factorize(N)
    vals: dict[int, Fraction] = {}
    for m in units(N):
        tot = Fraction(0)
        for p, e in fac.items():
            q = p**e
            tot += _conrey_prime_power_exponent(p, e, index % q, m % q)
        vals[m] = tot % 1
    return DirichletCharacter(N, vals, conrey_index=index, validate=False)


@lru_cache(maxsize=None)
def all_characters(N: int) -> tuple[DirichletCharacter, ...]:
    """All characters mod N, ordered by Conrey index."""
    return tuple(conrey_character(N, n) for n in (units(N) if N > 1 else [1]))


def conrey_index_of(chi: DirichletCharacter) -> int:
    if chi.conrey_index is not None:
        return chi.conrey_index
    for c in all_characters(chi.modulus):
        if c == chi:
            return c.conrey_index
    raise CharacterError("character not found")  # pragma: no cover


def character_from_table(N: int, values: Iterable[Sequence[int]]) -> DirichletCharacter:
    """Character from a partial table [[r, num, den], ...], closed multiplicatively.

    The listed residues must generate (Z/N)*; any inconsistency (a value that
    is not a homomorphism image) raises CharacterError.
    """
    gens: dict[int, Fraction] = {}
    for row in values:
        r, num, den = (int(v) for v in row)
        if gcd(r, N) != 1:
            raise CharacterError(f"residue {r} is not a unit mod {N}")
        v = Fraction(num, den) % 1
        r %= N
        if r in gens and gens[r] != v:
            raise CharacterError(f"conflicting values for {r}")
        gens[r] = v
    one = 1 % N
    table = {one: Fraction(0)}
    frontier = [one]
    while frontier:
        nxt = []
        for x in frontier:
            for g, v in gens.items():
                y = (x * g) % N
                val = (table[x] + v) % 1
                if y in table:
                    if table[y] != val:
                        raise CharacterError("table is not a homomorphism")
                else:
                    table[y] = val
                    nxt.append(y)
        frontier = nxt
    for g, v in gens.items():
        if table[g % N] != v:
            raise CharacterError("table is not a homomorphism")
    if sorted(table) != units(N):
        raise CharacterError("listed residues do not generate (Z/N)*")
    chi = DirichletCharacter(N, table)
    return DirichletCharacter(N, table, conrey_index=conrey_index_of(chi), validate=False)


def character_from_label(modulus: int, label, require_even: bool = True) -> DirichletCharacter:
    """Build a character from an input label.

    Accepted labels: ``"trivial"``; ``"quadratic"`` (the unique real
    character of conductor N, when unique); an integer Conrey index; or a
    dict ``{"kind": "conrey", "index": n}`` / ``{"kind": "table", "values":
    [[r, num, den], ...]}``.  Odd characters raise OddCharacterError unless
    ``require_even`` is False.
    """
    N = int(modulus)
    if isinstance(label, Mapping):
        if "modulus" in label and int(label["modulus"]) != N:
            raise CharacterError("character modulus differs from the level")
        kind = label.get("kind")
        if kind == "conrey":
            chi = conrey_character(N, int(label["index"]))
        elif kind == "table":
            chi = character_from_table(N, label["values"])
        else:
            raise CharacterError(f"unknown character kind {kind!r}")
    elif isinstance(label, int):
        chi = conrey_character(N, label)
    elif label == "trivial":
        chi = trivial_character(N)
    elif label == "quadratic":
        cands = [c for c in all_characters(N)
                 if c.order == 2 and c.conductor == N]
        if len(cands) != 1:
            raise CharacterError(f"no unique primitive quadratic character mod {N}")
        chi = cands[0]
    else:
        raise CharacterError(f"unrecognized character label {label!r}")
    if require_even and not chi.is_even:
        raise OddCharacterError(
            f"chi(-1) = -1 for {chi}: Maass forms on Gamma0(N) with character chi "
            "exist only for even chi (apply -I in Gamma0(N))")
    return chi


# ---------------------------------------------------------------------------
# matrices, decomposition

def extend_to_matrix(chi: DirichletCharacter, gamma) -> Fraction:
    """chi(gamma) = chi(d) for gamma in Gamma0(N), as an exponent."""
    a, b, c, d = _entries(gamma)
    if a * d - b * c != 1:
        raise CharacterError("matrix is not in SL2(Z)")
    if c % chi.modulus:
        raise CharacterError(f"matrix not in Gamma0({chi.modulus})")
    return chi.exponent(d)


def _entries(g):
    if hasattr(g, "a"):
        return g.a, g.b, g.c, g.d
    (a, b), (c, d) = g
    return a, b, c, d


def crt_decompose(chi: DirichletCharacter, d: int) -> tuple[DirichletCharacter, DirichletCharacter]:
    """(chi_d, chi_{N/d}) with chi = chi_d * chi_{N/d} for a Hall divisor d."""
    N = chi.modulus
    if N % d or gcd(d, N // d) != 1:
        raise CharacterError(f"{d} is not a Hall divisor of {N}")
    e = N // d

    def part(mod: int, other: int) -> DirichletCharacter:
        vals = {}
        for r in units(mod):
            # r' = r mod `mod`, 1 mod `other`
            rp = _crt(r, mod, 1, other)
            vals[r] = chi.values[rp % N]
        return DirichletCharacter(mod, vals, validate=False)

    return part(d, e), part(e, d)


def _crt(r1: int, m1: int, r2: int, m2: int) -> int:
    if m1 == 1:
        return r2 % m2
    if m2 == 1:
        return r1 % m1
    inv = pow(m1, -1, m2)
    return (r1 + m1 * ((r2 - r1) * inv % m2)) % (m1 * m2)


# ---------------------------------------------------------------------------
# m and Psi

def _vp(n: int, p: int) -> int:
    k = 0
    while n % p == 0 and n:
        n //= p
        k += 1
    return k


def m_constraint_ok(m: int, N: int, chi: DirichletCharacter) -> bool:
    if m < 2 or gcd(m, N) != 1:
        return False
    f = chi.conductor
    for p, e in factorize(N).items():
        s = _vp(f, p)
        k = min(e // 2, e - s)
        if k > 0 and (m - 1) % p**k:
            return False
    return True


def select_m(N: int, chi: DirichletCharacter) -> int:
    m = 2
    while not m_constraint_ok(m, N, chi):
        m += 1
    return m


@dataclass(frozen=True)
class PsiSet:
    members: tuple[DirichletCharacter, ...]
    m: int
    values_at_m: tuple[Fraction, ...]

    @property
    def count(self) -> int:
        return len(self.members)


def psi_admissible(psi: DirichletCharacter, chi: DirichletCharacter, N: int) -> bool:
    other = chi * psi.conjugate()
    return N % (psi.conductor * other.conductor) == 0


def build_psi_set(N: int, chi: DirichletCharacter, m: int) -> PsiSet:
    """Greedy maximal set; ties go to smaller conductor then Conrey index."""
    if m < 2 or gcd(m, N) != 1:
        raise CharacterError("m must be >= 2 and coprime to N")
    chi = chi if chi.modulus == N else chi.lift(N)
    cands = [psi for psi in all_characters(N) if psi_admissible(psi, chi, N)]
    cands.sort(key=lambda c: (c.conductor, c.conrey_index))
    members, vals = [], []
    for psi in cands:
        v = psi.exponent(m)
        if v not in vals:
            members.append(psi)
            vals.append(v)
    return PsiSet(tuple(members), m, tuple(vals))
