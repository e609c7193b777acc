import random
from fractions import Fraction

import pytest

from fedosov.verify import (rand_bar, rand_gl, rand_koszul, rand_psi,
                            rand_wcochain)
from fedosov.weylhh import (BarChain, KoszulChain, PsiElement, WeylCochain,
                            WeylContext, WSeries, bar_aug, bar_d, bar_h,
                            bar_homotopy, bar_to_koszul, cochain_from_values,
                            cochain_homotopy, eval_on_bar, gl_push_theta,
                            gl_transport, gl_transport_context,
                            hh_hochschild_d, hh_reduce, koszul_aug, koszul_d,
                            koszul_h, koszul_to_bar, lambda_hat, psi_d, psi_h,
                            rho_hat)

N = 6
CTX = WeylContext.standard(2, N)


def frac(a, b=1):
    return Fraction(a, b)


# -- the Weyl product ---------------------------------------------------------

def test_wseries_product():
    y1 = WSeries.monomial(2, (1, 0))
    y2 = WSeries.monomial(2, (0, 1))
    got = y1.weyl_mul(y2, CTX)
    assert got.terms == {(0, (1, 1)): frac(1), (1, (0, 0)): frac(1, 2)}
    comm = got - y2.weyl_mul(y1, CTX)
    assert comm.terms == {(1, (0, 0)): frac(1)}


# -- bar resolution -----------------------------------------------------------

def test_bar_d_on_unit():
    one = BarChain(2, 1, {(0, ((0, 0), (0, 0), (0, 0))): frac(1)})
    assert bar_d(CTX, one).is_zero()


def test_bar_d_middle_copy():
    b = BarChain.interior(2, [(1, 0)])
    got = bar_d(CTX, b)
    assert got.terms == {(0, ((1, 0), (0, 0))): frac(1),
                         (0, ((0, 0), (1, 0))): frac(-1)}


def test_bar_d_squares_to_zero():
    rng = random.Random(1)
    for _ in range(6):
        b = rand_bar(rng, CTX, 3)
        assert bar_d(CTX, bar_d(CTX, b)).is_zero()


def test_bar_h_examples():
    one = BarChain(2, 0, {(0, ((0, 0), (0, 0))): frac(1)})
    lifted = bar_h(one)
    assert lifted.m == 1 and lifted.terms == {(0, ((0, 0), (0, 0), (0, 0))): frac(1)}
    w = WSeries.monomial(2, (1, 1), 3)
    assert bar_h(w).terms == {(0, ((0, 0), (1, 1))): frac(3)}


def test_bar_contracting_identity_degreewise():
    rng = random.Random(2)
    for m in (0, 1, 2, 3):
        for _ in range(4):
            b = rand_bar(rng, CTX, m)
            tail = bar_aug(CTX, b) if m == 0 else bar_d(CTX, b)
            assert bar_d(CTX, bar_h(b)) + bar_h(tail) == b


def test_bar_aug_is_weyl_product():
    b = BarChain(2, 0, {(0, ((1, 0), (0, 1))): frac(1)})
    assert bar_aug(CTX, b).terms == {(0, (1, 1)): frac(1), (1, (0, 0)): frac(1, 2)}


# -- Koszul resolution ----------------------------------------------------------

def test_koszul_d_generator():
    got = koszul_d(CTX, KoszulChain.generator(2, (1,)))
    assert got.terms == {(0, (1, 0), (0, 0), ()): frac(1),
                         (0, (0, 0), (1, 0), ()): frac(-1)}


def test_koszul_d_squares_to_zero():
    assert koszul_d(CTX, koszul_d(CTX, KoszulChain.generator(2, (1, 2)))).is_zero()
    rng = random.Random(3)
    for _ in range(6):
        a = rand_koszul(rng, CTX, 2)
        assert koszul_d(CTX, koszul_d(CTX, a)).is_zero()


def test_koszul_h_examples():
    one = KoszulChain(2, 0, {(0, (0, 0), (0, 0), ()): frac(1)})
    assert koszul_h(CTX, one).is_zero()
    y1 = KoszulChain(2, 0, {(0, (1, 0), (0, 0), ()): frac(1)})
    assert koszul_h(CTX, y1).terms == {(0, (0, 0), (0, 0), (1,)): frac(1)}


def test_koszul_contracting_identity_degreewise():
    rng = random.Random(4)
    for m in (0, 1, 2):
        for _ in range(5):
            a = rand_koszul(rng, CTX, m)
            tail = koszul_aug(CTX, a) if m == 0 else koszul_d(CTX, a)
            assert koszul_d(CTX, koszul_h(CTX, a)) + koszul_h(CTX, tail) == a


# -- comparison maps -------------------------------------------------------------

def test_lambda_base_and_generator():
    a = KoszulChain(2, 0, {(1, (2, 0), (0, 1), ()): frac(5)})
    lam = koszul_to_bar(CTX, a)
    assert lam.terms == {(1, ((2, 0), (0, 1))): frac(5)}
    lam1 = koszul_to_bar(CTX, KoszulChain.generator(2, (1,)))
    assert lam1.terms == {(0, ((0, 0), (1, 0), (0, 0))): frac(1),
                          (0, ((0, 0), (0, 0), (1, 0))): frac(-1)}


def test_nu_base_case():
    b = BarChain(2, 0, {(0, ((1, 1), (2, 0))): frac(3)})
    nu = bar_to_koszul(CTX, b)
    assert nu.terms == {(0, (1, 1), (2, 0), ()): frac(3)}


def test_comparison_chain_maps():
    rng = random.Random(5)
    for m in (1, 2):
        for _ in range(5):
            a = rand_koszul(rng, CTX, m)
            assert bar_d(CTX, koszul_to_bar(CTX, a)) == \
                koszul_to_bar(CTX, koszul_d(CTX, a))
            b = rand_bar(rng, CTX, m)
            assert koszul_d(CTX, bar_to_koszul(CTX, b)) == \
                bar_to_koszul(CTX, bar_d(CTX, b))


def test_nu_lambda_is_identity_on_koszul_generators():
    for T in ((1,), (2,), (1, 2)):
        k = KoszulChain.generator(2, T)
        assert bar_to_koszul(CTX, koszul_to_bar(CTX, k)) == k


def test_rho_identity():
    rng = random.Random(6)
    assert bar_homotopy(CTX, BarChain(2, 0, {(0, ((1, 0), (0, 1))): frac(1)})).is_zero()
    for m in (1, 2):
        for _ in range(5):
            b = rand_bar(rng, CTX, m)
            lhs = b - koszul_to_bar(CTX, bar_to_koszul(CTX, b))
            rhs = bar_d(CTX, bar_homotopy(CTX, b)) \
                + bar_homotopy(CTX, bar_d(CTX, b))
            assert lhs == rhs


def test_rho_identity_on_lambda_image():
    rng = random.Random(7)
    for _ in range(4):
        kappa = rand_koszul(rng, CTX, 1)
        b = koszul_to_bar(CTX, kappa)
        lhs = b - koszul_to_bar(CTX, bar_to_koszul(CTX, b))
        rhs = bar_d(CTX, bar_homotopy(CTX, b)) + bar_homotopy(CTX, bar_d(CTX, b))
        assert lhs == rhs


# -- reduced complex ---------------------------------------------------------------

def test_psi_d_examples():
    a = PsiElement(2, {(-1, (0, 1), ()): frac(1)})
    assert psi_d(CTX, a).terms == {(0, (0, 0), (1,)): frac(1)}
    b = PsiElement(2, {(0, (1, 0), ()): frac(1)})
    assert psi_d(CTX, b).terms == {(1, (0, 0), (2,)): frac(-1)}
    c = PsiElement(2, {(0, (0, 0), (1,)): frac(1)})
    assert psi_d(CTX, c).is_zero()


def test_psi_h_examples():
    c = PsiElement(2, {(0, (0, 0), (1,)): frac(1)})
    assert psi_h(CTX, c).terms == {(-1, (0, 1), ()): frac(1)}
    one = PsiElement(2, {(0, (0, 0), ()): frac(1)})
    assert psi_h(CTX, one).is_zero()


def test_psi_homotopy_identity():
    rng = random.Random(8)
    for _ in range(25):
        a = rand_psi(rng, CTX)
        const = a.constant_part()
        z = PsiElement(2, {(k, (0, 0), ()): c for k, c in const.terms.items()})
        got = z + psi_d(CTX, psi_h(CTX, a)) + psi_h(CTX, psi_d(CTX, a))
        assert got == a
        assert psi_d(CTX, psi_d(CTX, a)).is_zero()


# -- Weyl cochains and duality ----------------------------------------------------

def test_cochain_eval_and_reconstruction_roundtrip():
    rng = random.Random(9)
    for q in (1, 2):
        a = rand_wcochain(rng, CTX, q, ydeg=2, acap=2, nterms=4)

        def fn(betas, a=a):
            return a.eval([WSeries.monomial(2, b) for b in betas], N)

        back = cochain_from_values(CTX, fn, q, 3, N)
        assert back.restrict(2).normalize(N) == a.restrict(2).normalize(N)


def test_hochschild_duality_with_bar():
    rng = random.Random(10)
    for q in (0, 1, 2):
        a = rand_wcochain(rng, CTX, q, nterms=4)
        da = hh_hochschild_d(CTX, a)
        b = rand_bar(rng, CTX, q + 1, nterms=3)
        assert eval_on_bar(CTX, da, b) == eval_on_bar(CTX, a, bar_d(CTX, b))


def test_hochschild_d_squares_to_zero():
    rng = random.Random(11)
    for q in (0, 1):
        a = rand_wcochain(rng, CTX, q, nterms=4)
        assert hh_hochschild_d(CTX, hh_hochschild_d(CTX, a)).is_zero()


def test_lambda_hat_chain_map():
    rng = random.Random(12)
    for q in (0, 1):
        a = rand_wcochain(rng, CTX, q, nterms=4)
        assert psi_d(CTX, lambda_hat(CTX, a)) == \
            lambda_hat(CTX, hh_hochschild_d(CTX, a))


def test_rho_hat_identity():
    rng = random.Random(13)
    for q in (1, 2):
        a = rand_wcochain(rng, CTX, q, nterms=4)

        def fn(betas, a=a):
            chain = koszul_to_bar(CTX, bar_to_koszul(
                CTX, BarChain.interior(2, betas)))
            return eval_on_bar(CTX, a, chain)

        a_ln = cochain_from_values(CTX, fn, q, 2, N)
        lhs = (a - a_ln).restrict(2).normalize(N)
        d_rha = hh_hochschild_d(CTX, rho_hat(CTX, a, 4, N), N)
        rh_da = rho_hat(CTX, hh_hochschild_d(CTX, a), 2, N)
        rhs = (d_rha + rh_da).restrict(2).normalize(N)
        assert lhs == rhs


def test_chi_homotopy_identity():
    rng = random.Random(14)
    for q in (1, 2):
        for _ in range(3):
            a = rand_wcochain(rng, CTX, q, nterms=5)
            chi_a = cochain_homotopy(CTX, a, 4, N)
            d_chi = hh_hochschild_d(CTX, chi_a, N)
            chi_d = cochain_homotopy(CTX, hh_hochschild_d(CTX, a), 2, N)
            got = (d_chi + chi_d).restrict(2).normalize(N)
            assert got == a.restrict(2).normalize(N)


def test_chi_of_exact_zero_cochain():
    # chi(d y^1) = y^1 + central constant
    y1 = WeylCochain(2, 0, {(0, (1, 0), ()): frac(1)})
    a = hh_hochschild_d(CTX, y1)
    assert a.terms == {(1, (0, 0), ((0, 1),)): frac(-1)}
    chi_a = cochain_homotopy(CTX, a, 4, N)
    diff = chi_a - y1
    assert all(p == (0, 0) for (_, p, _) in diff.terms)


def test_chi_of_zero():
    z = WeylCochain(2, 1, {})
    assert cochain_homotopy(CTX, z, 4, N).is_zero()


def test_chi_requires_positive_arity():
    with pytest.raises(ValueError):
        cochain_homotopy(CTX, WeylCochain(2, 0, {}), 4, N)


# -- cohomology reduction -----------------------------------------------------------

def test_hh_reduce_central():
    c = WeylCochain(2, 0, {(0, (0, 0), ()): frac(3), (-1, (0, 0), ()): frac(1, 2)})
    got = hh_reduce(CTX, c)
    assert got.terms == {0: frac(3), -1: frac(1, 2)}


def test_hh_reduce_rejects_noncocycle():
    y1 = WeylCochain(2, 0, {(0, (1, 0), ()): frac(1)})
    with pytest.raises(ValueError):
        hh_reduce(CTX, y1)


def test_hh_reduce_witness():
    rng = random.Random(15)
    b = rand_wcochain(rng, CTX, 0, nterms=3)
    a = hh_hochschild_d(CTX, b)  # a 1-cocycle
    w = hh_reduce(CTX, a, rec_cap=4)
    assert hh_hochschild_d(CTX, w).restrict(2).normalize(N) == \
        a.restrict(2).normalize(N)


# -- GL transport ---------------------------------------------------------------------

def test_transport_functorial_and_algebraic():
    rng = random.Random(16)
    g1, g2 = rand_gl(rng, 2), rand_gl(rng, 2)
    comp = [[sum(g2[i][k] * g1[k][j] for k in range(2)) for j in range(2)]
            for i in range(2)]
    w = WSeries(2, {(0, (2, 1)): frac(3, 2), (1, (1, 0)): frac(-2)})
    assert gl_transport(CTX, g2, gl_transport(CTX, g1, w)) == \
        gl_transport(CTX, comp, w)
    ctx2 = gl_transport_context(CTX, g1)
    a = WSeries.monomial(2, (1, 1))
    b = WSeries.monomial(2, (2, 0))
    lhs = gl_transport(CTX, g1, a.weyl_mul(b, CTX))
    rhs = gl_transport(CTX, g1, a).weyl_mul(gl_transport(CTX, g1, b), ctx2)
    assert lhs == rhs


def test_transport_identity():
    ident = [[frac(1), frac(0)], [frac(0), frac(1)]]
    rng = random.Random(17)
    a = rand_wcochain(rng, CTX, 1, nterms=3)
    assert gl_transport(CTX, ident, a) == a


def test_symplectic_diag_preserves_theta():
    g = [[frac(2), frac(0)], [frac(0), frac(1, 2)]]
    assert gl_push_theta(g, CTX.theta) == CTX.theta


def test_transports_intertwine_differentials():
    rng = random.Random(18)
    g = rand_gl(rng, 2)
    ctx2 = gl_transport_context(CTX, g)
    b = BarChain.interior(2, [(1, 1), (0, 2)])
    assert gl_transport(CTX, g, bar_d(CTX, b)) == bar_d(ctx2, gl_transport(CTX, g, b))
    kz = KoszulChain(2, 1, {(0, (1, 0), (0, 1), (1,)): frac(1),
                            (0, (0, 0), (2, 0), (2,)): frac(-2)})
    assert gl_transport(CTX, g, koszul_d(CTX, kz)) == \
        koszul_d(ctx2, gl_transport(CTX, g, kz))
    ps = PsiElement(2, {(0, (1, 1), (1,)): frac(2), (-1, (0, 1), (1, 2)): frac(1, 3)})
    assert gl_transport(CTX, g, psi_d(CTX, ps)) == \
        psi_d(ctx2, gl_transport(CTX, g, ps))


def test_homotopy_square_commutes():
    rng = random.Random(19)
    for _ in range(3):
        g = rand_gl(rng, 2)
        ctx2 = gl_transport_context(CTX, g)
        a = rand_wcochain(rng, CTX, rng.choice([1, 2]), ydeg=2, nterms=4)
        left = gl_transport(CTX, g, cochain_homotopy(CTX, a, 4, N))
        right = cochain_homotopy(ctx2, gl_transport(CTX, g, a), 4, N)
        assert left.restrict(2).normalize(N) == right.restrict(2).normalize(N)
