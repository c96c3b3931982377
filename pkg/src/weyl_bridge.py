"""Weyl 桥

正规序算子多项式 (所有 q̂ 在 p̂ 左边)，[q̂, p̂] = iħ，
以及 Weyl 量子化 / 去量子化映射。
"""

import logging
import re
from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial
from typing import List

from sympy.polys.rings import PolyElement

from coeffs import RING, I, hbar, qp_terms, qp_monomial, rational_factor, as_coeff, format_poly
from phase_algebra import star

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class OpPoly:
    """正规序算子多项式 Σ c_mn q̂^m p̂^n

    内部复用系数环：环元素中的 q^m p^n 解释为 q̂^m p̂^n。
    """

    poly: PolyElement

    @classmethod
    def q_hat(cls) -> "OpPoly":
        return cls(qp_monomial(1, 0))

    @classmethod
    def p_hat(cls) -> "OpPoly":
        return cls(qp_monomial(0, 1))

    @classmethod
    def scalar(cls, c) -> "OpPoly":
        return cls(as_coeff(c))

    def __add__(self, other: "OpPoly") -> "OpPoly":
        return OpPoly(self.poly + _as_op(other).poly)

    def __neg__(self) -> "OpPoly":
        return OpPoly(-self.poly)

    def __sub__(self, other: "OpPoly") -> "OpPoly":
        return OpPoly(self.poly - _as_op(other).poly)

    def __mul__(self, other) -> "OpPoly":
        if isinstance(other, OpPoly):
            return op_mul(self, other)
        return OpPoly(self.poly * as_coeff(other))

    def __rmul__(self, other) -> "OpPoly":
        return OpPoly(as_coeff(other) * self.poly)

    def __pow__(self, n: int) -> "OpPoly":
        result = OpPoly(RING.one)
        for _ in range(n):
            result = op_mul(result, self)
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, OpPoly):
            return NotImplemented
        return self.poly == other.poly

    def __hash__(self):
        return hash(self.poly)

    def __bool__(self) -> bool:
        return bool(self.poly)

    def __str__(self) -> str:
        # 算子用 qh、ph 表示
        return re.sub(r"\b([qp])\b", r"\1h", format_poly(self.poly))


def _as_op(value) -> OpPoly:
    return value if isinstance(value, OpPoly) else OpPoly.scalar(value)


@lru_cache(maxsize=None)
def _reorder(n: int, m: int) -> PolyElement:
    """p̂^n q̂^m = Σ_k (−iħ)^k k! C(n,k) C(m,k) q̂^{m−k} p̂^{n−k}"""
    result = RING.zero
    minus_i_hbar = -I * hbar
    for k in range(min(n, m) + 1):
        weight = factorial(k) * comb(n, k) * comb(m, k)
        result += minus_i_hbar ** k * weight * qp_monomial(m - k, n - k)
    return result


def op_mul(A: OpPoly, B: OpPoly) -> OpPoly:
    """正规序乘积"""
    result = RING.zero
    b_terms = qp_terms(B.poly)
    for (a, b), c1 in qp_terms(A.poly).items():
        for (c, d), c2 in b_terms.items():
            middle = _reorder(b, c)
            result += c1 * c2 * qp_monomial(a, 0) * middle * qp_monomial(0, d)
    return OpPoly(result)


def commutator(A: OpPoly, B: OpPoly) -> OpPoly:
    """[Â, B̂] = ÂB̂ − B̂Â"""
    return op_mul(A, B) - op_mul(B, A)


@lru_cache(maxsize=None)
def _weyl_monomial(m: int, n: int) -> PolyElement:
    """W(q^m p^n) = 2^{−m} Σ_j C(m,j) q̂^j p̂^n q̂^{m−j}"""
    total = RING.zero
    p_n = OpPoly(qp_monomial(0, n))
    for j in range(m + 1):
        left = OpPoly(qp_monomial(j, 0))
        right = OpPoly(qp_monomial(m - j, 0))
        total += op_mul(op_mul(left, p_n), right).poly * comb(m, j)
    return total * rational_factor(1, 2 ** m)


def quantize(f: PolyElement) -> OpPoly:
    """Weyl 量子化 (McCoy 对称化)"""
    result = RING.zero
    for (m, n), c in qp_terms(RING(f)).items():
        result += c * _weyl_monomial(m, n)
    return OpPoly(result)


def dequantize(A: OpPoly) -> PolyElement:
    """去量子化：正规序基元 q̂^m p̂^n 的 Weyl 符号为 q^m ⋆ p^n"""
    result = RING.zero
    for (m, n), c in qp_terms(A.poly).items():
        result += c * star(qp_monomial(m, 0), qp_monomial(0, n))
    return result


def op_conjugate_series(f_hat: OpPoly, u_hat: OpPoly, lam, order: int) -> List[OpPoly]:
    """e^{λf̂} û e^{−λf̂} 的嵌套对易子展开，第 k 项为 λ^k/k! ad_f̂^k û"""
    if order < 0:
        raise ValueError("order 必须非负")
    lam = as_coeff(lam)
    terms = [u_hat]
    current = u_hat
    for k in range(1, order + 1):
        current = commutator(f_hat, current) * (lam * rational_factor(1, k))
        terms.append(current)
    return terms
