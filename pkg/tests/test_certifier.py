import warnings
from fractions import Fraction

import pytest
from flint import arb

from maasscert.certifier import (Alternative, CertificationError, CertifyOptions,
                                 RegionProblem, RemainderWarning, Side, ValidationError,
                                 box_bound, build_regions, certify, check_certificate,
                                 cm_exclusion_check, n_tm, psi_product, theorem_bound)
from maasscert.characters import build_psi_set, conrey_character, root_of_unity
from maasscert.enclosure import ball
from maasscert.forms import form_from_dict, with_coefficient
from maasscert.geometry import coset_representatives
from maasscert.taylor import Chart, combine, side_expansion

LEVEL1 = {
    "level": 1,
    "character": {"kind": "conrey", "modulus": 1, "index": 1},
    "lambda": "91.141345446167921053031103924802",
    "M0": 8,
    "symmetry": "even",
    "coefficient_radius": "1e-20",
    "coefficients_infinity": [["2", "-1.068333551149", "0"], ["3", "-0.456197355374", "0"],
                              ["5", "-0.290672555584", "0"], ["7", "-0.744941766899", "0"]],
}
SMALL = CertifyOptions(taylor_degree=10, n_samples=8, M0=20)


def _strip(c):
    c = dict(c)
    c.pop("timings")
    c["parameters"] = {k: v for k, v in c["parameters"].items() if k != "threads"}
    return c


@pytest.fixture(scope="module")
def small_cert(level5):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RemainderWarning)
        return certify(level5, SMALL)


def test_n_tm():
    assert n_tm(1) == 1
    e = arb(7) / 64
    assert n_tm(2).overlaps(arb(2) ** e + arb(2) ** (-e))
    assert abs(n_tm(2) - arb("2.00575036029881")) < arb("1e-13")
    assert n_tm(4).overlaps(n_tm(2) ** 2 + 1)
    assert abs(n_tm(4) - arb("5.0230")) < arb("1e-4")
    assert n_tm(6).overlaps(n_tm(2) * n_tm(3))
    with pytest.raises(ValueError):
        n_tm(0)


def test_theorem_bound_zero_and_monotone():
    args = dict(D=arb("1e-15"), delta=arb("0.005"), ntm=n_tm(2), psi_count=2,
                psi_modulus=arb("1.2"))
    assert theorem_bound(arb(0), **args) == 0
    b1 = theorem_bound(arb("1e-40"), **args)
    assert theorem_bound(arb("4e-40"), **args) > b1
    assert theorem_bound(arb("1e-40"), **{**args, "D": arb("2e-15")}) < b1
    assert theorem_bound(arb("1e-40"), **{**args, "delta": arb("0.01")}) < b1
    with pytest.raises(CertificationError):
        theorem_bound(arb("1e-40"), **{**args, "D": arb(0, 1)})


def test_psi_product_degenerate(level5):
    psi = build_psi_set(5, level5.character, 2)
    # put a(oo,2) on an Eisenstein value: the product must be refused
    from maasscert.certifier import eisenstein_term
    target = eisenstein_term(psi.members[0], level5.character, 2, level5.r)
    bad = with_coefficient(level5, "oo", 2, target)
    with pytest.raises(CertificationError, match="too close to Eisenstein"):
        psi_product(bad, psi, 2)


def test_psi_product_missing_coefficient(level5):
    psi = build_psi_set(5, level5.character, 41)
    with pytest.raises(CertificationError):
        psi_product(level5, psi, 41)


def test_psi_product_value(level5):
    pp = psi_product(level5, build_psi_set(5, level5.character, 2), 2)
    assert abs(pp.modulus - arb("1.23565")) < arb("1e-5")
    assert abs(abs(pp.theorem) - abs(pp.derivation)) < arb("1e-20")


def test_cm_exclusion(level5):
    cm = cm_exclusion_check(5, level5.lam)
    assert cm["nearest_n"] == 5
    assert abs(ball(cm["lambda_cm"][0]) - arb("23.81158")) < arb("1e-5")
    assert cm["distance_lower"] > arb("0.38")
    with pytest.raises(ValueError):
        cm_exclusion_check(7, level5.lam)


def test_regions_level5():
    chi = conrey_character(5, 4)
    problems, zeros = build_regions(coset_representatives(5, chi), 10)
    kinds = sorted((p.name, p.kind) for p in problems)
    assert [k for _, k in kinds].count("generic") == 2
    assert [k for _, k in kinds].count("bprime") == 2
    assert sorted(M.tolist() for M in zeros) == [[[0, -1], [1, -1]], [[0, -1], [1, 1]]]
    gen = sorted(p.M1.tolist() for p in problems if p.kind == "generic")
    assert gen == [[[0, -1], [1, 2]], [[0, -1], [1, 3]]]     # ST^2, ST^3
    for p in problems:
        assert len(p.samples) == (21 if p.kind == "bprime" else 11)
        assert p.samples[0] >= Fraction(1, 6) and p.samples[-1] <= Fraction(5, 6)
    bp = [p for p in problems if p.kind == "bprime"]
    assert bp[0].signature() == bp[1].signature()


def test_regions_level1():
    problems, zeros = build_regions(coset_representatives(1, conrey_character(1, 1)), 6)
    assert len(problems) == 1 and not zeros
    assert problems[0].kind == "small_level"


def test_self_difference_vanishes(level5):
    """f_oo(z) against f_oo(z + 1): the defect is zero up to ball radii."""
    side = Side("oo", Chart(1, 0, 0, 1))
    shifted = Side("oo", Chart(1, 1, 0, 1))
    prob = RegionProblem("test", None, "generic", 1, side,
                         (Alternative(shifted, Fraction(0)),), (Fraction(1, 2),), False)
    res = box_bound(prob, Fraction(1, 2), level5, 12, arb("0.01"))
    assert res.value0.contains(0)
    assert res.alternatives_used == 1


def test_box_bound_degree_monotone(level5):
    chi = level5.character
    problems, _ = build_regions(coset_representatives(5, chi), 10)
    gen = next(p for p in problems if p.kind == "generic")
    rho = arb.pi() / 60
    b = [box_bound(gen, Fraction(1, 2), level5, d, rho).bound for d in (8, 16, 24)]
    assert b[0] > b[1] > b[2]


def test_st2_mirror_symmetry(level5):
    """Companion of ST^2 is itself with real omega: E(-t, pi - theta) = -omega E(t, theta)."""
    problems, _ = build_regions(coset_representatives(5, level5.character), 10)
    p = next(p for p in problems if p.M1.tolist() == [[0, -1], [1, 2]])
    assert p.info["M2"] == p.M1.tolist()
    alt = p.alternatives[0]
    assert alt.omega == Fraction(1, 2)
    ev_a, ev_b = level5.evaluator(p.side_a.cusp), level5.evaluator(alt.side.cusp)

    def coeffs(q):
        A = side_expansion(ev_a.terms, level5.whittaker, p.side_a.chart, q, 8)
        B = side_expansion(ev_b.terms, level5.whittaker, alt.side.chart, q, 8)
        return combine(A, B, root_of_unity(alt.omega))

    q = Fraction(2, 5)
    c1, c2 = coeffs(q), coeffs(1 - q)
    for r, row in enumerate(c1):
        for w, c in enumerate(row):
            assert abs(abs(c) - abs(c2[r][w])) < arb("1e-20") * (1 + abs(c)), (r, w)


def test_certificate_round_trip(level5, small_cert):
    c = small_cert.to_jsonable()
    assert c["m"] == 2 and c["psi_count"] == 2
    assert ball(c["D"][0]) > 0
    assert len(c["E"]) == 6
    assert check_certificate(c) == []
    from maasscert.forms import shipped_example_path
    assert check_certificate(c, shipped_example_path().read_bytes()) == []
    assert check_certificate(c, b"other") == ["input digest mismatch"]
    tampered = dict(c, bound="1e-30")
    assert check_certificate(tampered)


def test_deterministic(level5, small_cert):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RemainderWarning)
        again = certify(level5, SMALL)
    assert _strip(again.to_jsonable()) == _strip(small_cert.to_jsonable())


def test_threads_match_serial(level5, small_cert):
    opts = CertifyOptions(taylor_degree=10, n_samples=8, M0=20, threads=2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RemainderWarning)
        par = certify(level5, opts)
    assert _strip(par.to_jsonable()) == _strip(small_cert.to_jsonable())


def test_validation_failure_raises(level5):
    bad = with_coefficient(level5, "oo", 4, level5.a_inf(4) + arb("1e-3"))
    with pytest.raises(ValidationError) as exc:
        certify(bad, SMALL)
    assert not exc.value.report.passed


def test_bad_m(level5):
    with pytest.raises(CertificationError):
        certify(level5, CertifyOptions(taylor_degree=10, n_samples=8, M0=20, m=5))


def test_level1_end_to_end():
    form = form_from_dict(LEVEL1)
    with pytest.warns(RemainderWarning):
        cert = certify(form, CertifyOptions(taylor_degree=12, n_samples=8))
    c = cert.to_jsonable()
    assert c["psi_count"] >= 1
    assert cert.bound.is_finite() and cert.bound > 0
    assert [e["kind"] for e in c["E"]] == ["small_level"]
    assert "cm_exclusion" not in c


def test_options_check():
    with pytest.raises(ValueError):
        CertifyOptions(taylor_degree=1).check()
    with pytest.raises(ValueError):
        CertifyOptions(n_samples=2).check()


def test_psi_product_conjugation_invariant(level5):
    import json
    from maasscert.forms import shipped_example_path
    data = json.loads(shipped_example_path().read_text())
    neg = lambda s: s[1:] if s.startswith("-") else "-" + s
    for key in ("coefficients_infinity", "cusp_units"):
        data[key] = [[n, re, neg(im)] for n, re, im in data[key]]
    conj = form_from_dict(data)
    psi = build_psi_set(5, level5.character, 2)
    a, b = psi_product(level5, psi, 2), psi_product(conj, psi, 2)
    assert a.modulus.overlaps(b.modulus)
