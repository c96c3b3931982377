"""测试 Weyl 量子化与正规序算子"""

import sys
from itertools import product
from pathlib import Path

# 将 src 目录添加到模块搜索路径
src_path = str(Path(__file__).parent.parent / "src")
if src_path not in sys.path:
    sys.path.insert(0, src_path)

from coeffs import I, hbar, p, q, qp_monomial, rational_factor, symbol
from ct_engine import lie_conjugate
from phase_algebra import star
from weyl_bridge import OpPoly, commutator, dequantize, op_conjugate_series, op_mul, quantize


def test_canonical_commutator():
    assert commutator(OpPoly.q_hat(), OpPoly.p_hat()) == OpPoly.scalar(I * hbar)


def test_quantize_symmetric_product():
    """qp ↦ (q̂p̂ + p̂q̂)/2 = q̂p̂ − iħ/2"""
    op = quantize(q * p)
    assert op == OpPoly(q * p - I * hbar * rational_factor(1, 2))
    assert str(op) == "qh*ph - (1/2)*i*hbar"


def test_dequantize_normal_ordered():
    assert dequantize(OpPoly(q * p)) == q * p + I * hbar * rational_factor(1, 2)


def test_quantize_dequantize_inverse():
    f = q ** 3 * p ** 2 - 2 * I * q * p + hbar
    assert dequantize(quantize(f)) == f


def test_algebra_isomorphism_on_monomials():
    """dequantize(Ŵ(f)Ŵ(g)) = f⋆g，指数不超过 5 的全部单项式对"""
    exponents = range(6)
    monomials = [qp_monomial(m, n) for m, n in product(exponents, exponents)]
    quantized = [quantize(f) for f in monomials]
    for f, f_hat in zip(monomials, quantized):
        for g, g_hat in zip(monomials, quantized):
            assert dequantize(op_mul(f_hat, g_hat)) == star(f, g)


def test_operator_conjugation_matches_lie_series():
    lam = symbol("lam")
    series = lie_conjugate(p ** 2, q, lam, 4)
    ops = op_conjugate_series(quantize(p ** 2), quantize(q), lam, 4)
    assert series.exact
    for k, term in enumerate(series.terms):
        assert dequantize(ops[k]) == term
    # 级数终止后的算子项为零
    assert all(not op for op in ops[len(series.terms):])


def test_operator_power():
    q_hat = OpPoly.q_hat()
    assert q_hat ** 3 == OpPoly(q ** 3)
    assert (OpPoly.p_hat() * q_hat) == OpPoly(q * p - I * hbar)
