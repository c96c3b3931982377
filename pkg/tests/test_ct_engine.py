"""测试正则变换引擎"""

import sys
from itertools import product
from math import factorial
from pathlib import Path

import pytest
import sympy
from hypothesis import given, settings, strategies as st

# 将 src 目录添加到模块搜索路径
src_path = str(Path(__file__).parent.parent / "src")
if src_path not in sys.path:
    sys.path.insert(0, src_path)

from closed_form import ClosedFormFn
from coeffs import I, RING, hbar, hbar_power, p, prune, q, rational_factor, symbol
from ct_engine import (
    GeneratingFn, canonicity_check, compose_steps, ct_from_gf_defnalt, cubic_gauge_gf, decomposition_steps,
    gauge_ct, gauge_gf_from_ct, gf_relation_holds, interchange_factors, lie_conjugate, linear_act, linear_decompose,
    linear_gf, shear_p_ct, shear_q_ct, star_conjugation_series, verify_gf_relation,
)
from errors import DegenerateDecomposition, DomainError, MixedPhase, NotSymplectic, SingularCayley, UnsupportedVariant
from models import CanonicalPair, LinearCT
from phase_algebra import ExpPoly, star

lam = symbol("lam")
nu = symbol("nu")
mu = symbol("mu")


# ---------------------------------------------------------------------------
# 生成函数关系
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("f", [q, q ** 2, q ** 3])
def test_gauge_generating_function(f):
    pair = gauge_ct(f, lam)
    assert gf_relation_holds(ExpPoly.exp(lam * f), pair.Q, pair.P)


def test_gauge_requires_q_only():
    with pytest.raises(DomainError):
        gauge_ct(q * p, lam)


def test_interchange_generating_function():
    """e^{i(q²+p²)/ħ} 对应 (Q, P) = (p, −q)"""
    F = ExpPoly.exp(I * hbar_power(-1) * (q ** 2 + p ** 2))
    assert gf_relation_holds(F, p, -q)
    assert linear_gf(LinearCT.interchange()) == F


@pytest.mark.parametrize("L", [LinearCT.interchange(), LinearCT.of(2, 1, 1, 1)])
def test_linear_action_on_monomials(L):
    """q^a p^b (a + b ≤ 6)：F⋆u = u(Q, P)⋆F，u(Q, P) 即 linear_act 的结果"""
    F = linear_gf(L)
    for a, b in product(range(7), repeat=2):
        if a + b > 6:
            continue
        u = q ** a * p ** b
        moved = linear_act(L, u)
        residual = star(F, u) - star(moved, F)
        assert not prune(residual.prefactor), (a, b)
        assert GeneratingFn.of_linear(L).act(u) == moved


def test_cubic_generating_function():
    assert gf_relation_holds(cubic_gauge_gf(nu), q, p + nu * q ** 2)
    assert not gf_relation_holds(cubic_gauge_gf(nu), q, p - nu * q ** 2)


def test_gauge_gf_from_momentum_shift():
    F = gauge_gf_from_ct(3 * q ** 2)
    assert gf_relation_holds(F, q, p + 3 * q ** 2)


def _integer_symplectic():
    entries = range(-3, 4)
    for a, b, c, d in product(entries, repeat=4):
        if a * d - b * c == 1 and a + d + 2 != 0:
            yield LinearCT.of(a, b, c, d)


def test_linear_generating_functions_exhaustive():
    """[-3, 3] 内全部整数辛矩阵 (a + d + 2 ≠ 0)"""
    count = 0
    for L in _integer_symplectic():
        assert gf_relation_holds(linear_gf(L), *L.images()), L
        count += 1
    assert count > 50


@pytest.mark.parametrize("matrix", [(-1, 0, 0, -1), (-1, 1, 0, -1), (-1, 0, 3, -1)])
def test_linear_gf_singular(matrix):
    """a + d + 2 = 0 时没有生成函数"""
    with pytest.raises(SingularCayley):
        linear_gf(LinearCT.of(*matrix))


def test_linear_gf_not_symplectic():
    with pytest.raises(NotSymplectic):
        linear_gf(LinearCT.of(1, 1, 1, 1))


def test_verify_gf_relation_reports_residuals():
    res_q, res_p = verify_gf_relation(ExpPoly.exp(lam * q), q, p)
    assert ExpPoly.of(res_q).is_zero()
    assert not ExpPoly.of(res_p).is_zero()


# ---------------------------------------------------------------------------
# 正则性
# ---------------------------------------------------------------------------

@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(-3, 3), min_size=1, max_size=4), st.integers(-3, 3), st.integers(-3, 3))
def test_generated_pairs_are_canonical(gauge_coeffs, b, c):
    f = RING.zero
    for k, coeff in enumerate(gauge_coeffs):
        f += coeff * q ** (k + 1)
    assert canonicity_check(gauge_ct(f, lam)).passed

    L = LinearCT.of(1 + b * c, b, c, 1)
    assert canonicity_check(CanonicalPair(*L.images())).passed
    cubic = GeneratingFn.cubic_gauge(c)
    assert canonicity_check(CanonicalPair(cubic.act(q), cubic.act(p))).passed


def test_canonicity_failure_is_exact():
    report = canonicity_check(CanonicalPair(q, 2 * p))
    assert not report.passed
    assert report.residual == I * hbar


def test_canonicity_closed_form_on_samples():
    """Q = 1/q，P = −q²p"""
    pair = CanonicalPair(ClosedFormFn.of("1/q"), ClosedFormFn.of("-q**2*p"))
    report = canonicity_check(pair, values={"hbar": 1.0})
    assert report.passed
    assert report.residual < 1e-12


# ---------------------------------------------------------------------------
# 线性变换
# ---------------------------------------------------------------------------

def test_decomposition_recomposes():
    L = LinearCT.of(2, 1, 1, 1)
    decomposition = linear_decompose(L)
    assert compose_steps(decomposition_steps(decomposition)) == L
    u = q ** 2 * p + p ** 3
    stepwise = u
    for step in decomposition_steps(decomposition):
        stepwise = linear_act(step, stepwise)
    assert stepwise == linear_act(L, u)


def test_decomposition_needs_nonzero_d():
    with pytest.raises(DegenerateDecomposition):
        linear_decompose(LinearCT.interchange())


def test_interchange_three_shears():
    assert compose_steps(interchange_factors()) == LinearCT.interchange()


def test_shears_match_lie_flows():
    """p² 与 q² 的李级数精确终止，并与代换一致"""
    u = q ** 2 + q * p
    shear_p = lie_conjugate(p ** 2, u, lam, 6)
    assert shear_p.exact
    assert shear_p.total() == linear_act(shear_p_ct(lam), u)
    shear_q = lie_conjugate(q ** 2, u, lam, 6)
    assert shear_q.exact
    assert shear_q.total() == linear_act(shear_q_ct(lam), u)


def test_linear_algebra_helpers():
    L = LinearCT.of(2, 1, 1, 1)
    assert L.det() == RING.one
    assert L.then(L.inverse()) == LinearCT.identity()
    assert linear_act(L, q) == 2 * q + p
    ok, message = LinearCT.of(2, 0, 0, 2).validate()
    assert not ok and "ad - bc" in message


# ---------------------------------------------------------------------------
# 李级数
# ---------------------------------------------------------------------------

def test_scaling_series_through_order_20():
    """e_⋆^{μ q⋆p} 共轭 q 的第 k 项为 (−iħμ)^k/k! q"""
    series = lie_conjugate(star(q, p), q, mu, 20)
    assert not series.exact
    assert len(series.terms) == 21
    for k, term in enumerate(series.terms):
        assert term == (-I * hbar * mu) ** k * rational_factor(1, factorial(k)) * q


def test_star_conjugation_agrees_with_lie_series():
    f = star(q, p)
    direct = star_conjugation_series(f, q, mu, 6)
    series = lie_conjugate(f, q, mu, 6)
    for k in range(7):
        assert direct[k] == series.terms[k]


def test_lie_series_on_exp_poly():
    """q² 的李算子作用在 ExpPoly 上同样终止"""
    series = lie_conjugate(q ** 2, ExpPoly(p, lam * q), nu, 3)
    assert series.exact
    assert isinstance(series.terms[0], ExpPoly)


# ---------------------------------------------------------------------------
# 由生成函数构造变换对
# ---------------------------------------------------------------------------

def test_ct_from_single_variable_phase():
    pair = ct_from_gf_defnalt(ExpPoly.exp(lam * q ** 2))
    assert pair.Q == q
    assert pair.P == p + 2 * I * hbar * lam * q
    assert canonicity_check(pair).passed


def test_ct_from_mixed_phase_rejected():
    with pytest.raises(MixedPhase):
        ct_from_gf_defnalt(ExpPoly.exp(q * p))


def test_ct_from_polynomial_needs_order():
    with pytest.raises(MixedPhase):
        ct_from_gf_defnalt(1 + q * p)
    pair = ct_from_gf_defnalt(1 + lam * q, order=4)
    assert pair.Q == q


def test_generating_fn_actions():
    gauge = GeneratingFn.gauge(q ** 2, lam)
    assert gauge.act(p) == p + 2 * I * hbar * lam * q
    assert gauge.exp_form() == ExpPoly.exp(lam * q ** 2)
    swap = GeneratingFn.interchange()
    assert swap.act(q) == p
    assert swap.act(p) == -q
    point = GeneratingFn.point(q ** 2, 0, 1)
    assert sympy.simplify(point.exp_form().expr - sympy.exp(ClosedFormFn.of("q**2*p").expr)) == 0
    with pytest.raises(UnsupportedVariant):
        point.act(q)
