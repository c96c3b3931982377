"""相空间代数

Groenewold 星积、Moyal 括号、星指数与星逆级数。
多项式 (PhasePoly) 与指数多项式 (ExpPoly) 之间的星积按多项式一侧的
总次数截断，因此结果是精确的。
"""

import logging
from dataclasses import dataclass, field
from math import comb, factorial
from typing import Dict, List, Mapping, Tuple, Union

from sympy.polys.rings import PolyElement

from coeffs import (
    RING, I, hbar, dq, dp, degree_qp, constant_part, coeff_inverse,
    rational_factor, format_poly, as_coeff,
)
from errors import MixedPhase, NonInvertibleConstantTerm, UnsupportedProduct

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ExpPoly:
    """prefactor · exp(phase)"""

    prefactor: PolyElement
    phase: PolyElement = field(default_factory=lambda: RING.zero)

    @classmethod
    def of(cls, value: Union["ExpPoly", PolyElement]) -> "ExpPoly":
        """把多项式提升为零相位的 ExpPoly"""
        if isinstance(value, ExpPoly):
            return value
        return cls(value, RING.zero)

    @classmethod
    def exp(cls, phase: PolyElement) -> "ExpPoly":
        """exp(phase)"""
        return cls(RING.one, phase)

    def is_zero(self) -> bool:
        return not self.prefactor

    def is_polynomial(self) -> bool:
        """相位为零 (或整体为零) 时就是普通多项式"""
        return not self.phase or not self.prefactor

    def dq(self) -> "ExpPoly":
        """∂_q (P e^S) = (∂_q P + P ∂_q S) e^S"""
        return ExpPoly(dq(self.prefactor) + self.prefactor * dq(self.phase), self.phase)

    def dp(self) -> "ExpPoly":
        """∂_p (P e^S) = (∂_p P + P ∂_p S) e^S"""
        return ExpPoly(dp(self.prefactor) + self.prefactor * dp(self.phase), self.phase)

    def derivative(self, order_q: int, order_p: int) -> "ExpPoly":
        """∂_q^order_q ∂_p^order_p"""
        result = self
        for _ in range(order_q):
            result = result.dq()
        for _ in range(order_p):
            result = result.dp()
        return result

    def _check_phase(self, other: "ExpPoly") -> None:
        if self.phase != other.phase and not self.is_zero() and not other.is_zero():
            raise MixedPhase("相位不同的指数多项式不能直接相加")

    def __add__(self, other):
        other = ExpPoly.of(other)
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        self._check_phase(other)
        return ExpPoly(self.prefactor + other.prefactor, self.phase)

    def __radd__(self, other):
        return self.__add__(other)

    def __neg__(self):
        return ExpPoly(-self.prefactor, self.phase)

    def __sub__(self, other):
        return self + (-ExpPoly.of(other))

    def __rsub__(self, other):
        return ExpPoly.of(other) - self

    def __mul__(self, other):
        """逐点乘积：相位相加，前因子相乘"""
        if isinstance(other, ExpPoly):
            return ExpPoly(self.prefactor * other.prefactor, self.phase + other.phase)
        return ExpPoly(self.prefactor * other, self.phase)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __eq__(self, other) -> bool:
        if isinstance(other, (PolyElement, int)):
            other = ExpPoly.of(RING(other))
        if not isinstance(other, ExpPoly):
            return NotImplemented
        if self.is_zero() or other.is_zero():
            return self.is_zero() and other.is_zero()
        return self.prefactor == other.prefactor and self.phase == other.phase

    def __hash__(self):
        return hash((self.prefactor, self.phase))

    def __str__(self) -> str:
        if self.is_polynomial():
            return format_poly(self.prefactor)
        return f"({format_poly(self.prefactor)})*exp({format_poly(self.phase)})"


PhaseFn = Union[PolyElement, ExpPoly]


@dataclass(frozen=True, eq=False)
class DiffOpPoly:
    """Σ coeff(q,p) ∂_q^j ∂_p^k，键为 (j, k)"""

    terms: Mapping[Tuple[int, int], PolyElement] = field(default_factory=dict)

    def __post_init__(self):
        cleaned = {key: c for key, c in self.terms.items() if c}
        object.__setattr__(self, "terms", cleaned)

    @classmethod
    def partial(cls, order_q: int, order_p: int, coeff=None) -> "DiffOpPoly":
        """coeff · ∂_q^order_q ∂_p^order_p"""
        return cls({(order_q, order_p): RING.one if coeff is None else RING(coeff)})

    def order(self) -> int:
        """最高导数阶"""
        return max((j + k for j, k in self.terms), default=0)

    def __add__(self, other: "DiffOpPoly") -> "DiffOpPoly":
        merged: Dict[Tuple[int, int], PolyElement] = dict(self.terms)
        for key, c in other.terms.items():
            merged[key] = merged.get(key, RING.zero) + c
        return DiffOpPoly(merged)

    def __neg__(self) -> "DiffOpPoly":
        return DiffOpPoly({key: -c for key, c in self.terms.items()})

    def __sub__(self, other: "DiffOpPoly") -> "DiffOpPoly":
        return self + (-other)

    def __mul__(self, factor) -> "DiffOpPoly":
        """左乘一个函数 (系数或相空间多项式)"""
        factor = RING(factor)
        return DiffOpPoly({key: factor * c for key, c in self.terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiffOpPoly):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(tuple(sorted(self.terms.items())))

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for (j, k), c in sorted(self.terms.items()):
            ops = []
            if j:
                ops.append("d_q" if j == 1 else f"d_q^{j}")
            if k:
                ops.append("d_p" if k == 1 else f"d_p^{k}")
            parts.append(f"({format_poly(c)})" + ("*" + "*".join(ops) if ops else ""))
        return " + ".join(parts)


# ħ 展开系数 (iħ/2)^s / s!
def _series_coeff(s: int) -> PolyElement:
    return (I * hbar * rational_factor(1, 2)) ** s * rational_factor(1, factorial(s))


def _poly_derivatives(f: PolyElement, order: int) -> Dict[Tuple[int, int], PolyElement]:
    """全部 ∂_q^a ∂_p^b f，a+b ≤ order"""
    table: Dict[Tuple[int, int], PolyElement] = {}
    row = f
    for a in range(order + 1):
        col = row
        for b in range(order + 1 - a):
            table[(a, b)] = col
            col = dp(col)
        row = dq(row)
    return table


def _exp_derivatives(F: ExpPoly, order: int) -> Dict[Tuple[int, int], ExpPoly]:
    """全部 ∂_q^a ∂_p^b F，a+b ≤ order"""
    table: Dict[Tuple[int, int], ExpPoly] = {}
    row = F
    for a in range(order + 1):
        col = row
        for b in range(order + 1 - a):
            table[(a, b)] = col
            col = col.dp()
        row = row.dq()
    return table


def _groenewold(left: Dict, right: Dict, order: int, zero):
    """Σ_s (iħ/2)^s/s! Σ_t (−1)^t C(s,t) (∂_q^{s−t}∂_p^t f)(∂_p^{s−t}∂_q^t g)"""
    total = zero
    for s in range(order + 1):
        inner = zero
        for t in range(s + 1):
            weight = comb(s, t) * (-1) ** t
            inner = inner + left[(s - t, t)] * right[(t, s - t)] * weight
        total = total + inner * _series_coeff(s)
    return total


def star(f: PhaseFn, g: PhaseFn) -> PhaseFn:
    """Groenewold 星积 f⋆g

    Args:
        f: 多项式或指数多项式
        g: 多项式或指数多项式，两者至少有一个是多项式

    Returns:
        多项式⋆多项式 得到多项式；混合情形得到与指数因子同相位的 ExpPoly
    """
    if isinstance(f, ExpPoly) and f.is_polynomial():
        f = f.prefactor
    if isinstance(g, ExpPoly) and g.is_polynomial():
        g = g.prefactor
    f_exp, g_exp = isinstance(f, ExpPoly), isinstance(g, ExpPoly)

    if f_exp and g_exp:
        raise UnsupportedProduct("两个指数多项式的星积没有精确闭式，请使用网格实验室")

    if not f_exp and not g_exp:
        f, g = RING(f), RING(g)
        if not f or not g:
            return RING.zero
        order = min(degree_qp(f), degree_qp(g))
        return _groenewold(_poly_derivatives(f, order), _poly_derivatives(g, order), order, RING.zero)

    if f_exp:
        g = RING(g)
        order = degree_qp(g)
        if order < 0:
            return ExpPoly(RING.zero, f.phase)
        left = _exp_derivatives(f, order)
        right = _poly_derivatives(g, order)
    else:
        f = RING(f)
        order = degree_qp(f)
        if order < 0:
            return ExpPoly(RING.zero, g.phase)
        left = _poly_derivatives(f, order)
        right = _exp_derivatives(g, order)

    phase = f.phase if f_exp else g.phase
    result = _groenewold(left, right, order, ExpPoly(RING.zero, phase))
    return ExpPoly(result.prefactor, phase)


def moyal_bracket(f: PhaseFn, g: PhaseFn) -> PhaseFn:
    """Moyal 括号 f⋆g − g⋆f"""
    return star(f, g) - star(g, f)


def poisson_bracket(f: PolyElement, g: PolyElement) -> PolyElement:
    """经典泊松括号 ∂_q f ∂_p g − ∂_p f ∂_q g"""
    return dq(f) * dp(g) - dp(f) * dq(g)


def star_power(f: PolyElement, n: int) -> PolyElement:
    """f⋆f⋆...⋆f (n 次)，n=0 时为 1"""
    result = RING.one
    for _ in range(n):
        result = star(result, f)
    return result


def star_exponential(f: PolyElement, lam, order: int) -> List[PolyElement]:
    """星指数 e_⋆^{λf} 的截断级数，第 k 项为 λ^k f^{⋆k} / k!"""
    if order < 0:
        raise ValueError("order 必须非负")
    lam = as_coeff(lam)
    terms = [RING.one]
    power = RING.one
    for k in range(1, order + 1):
        power = star(power, f)
        terms.append(lam ** k * power * rational_factor(1, factorial(k)))
    logger.debug("星指数展开到 %d 阶", order)
    return terms


def series_sum(terms: List[PhaseFn]) -> PhaseFn:
    """级数部分和"""
    total = RING.zero
    for t in terms:
        total = t + total if isinstance(t, ExpPoly) else total + t
    return total


def star_inverse_series(f: PolyElement, order: int) -> PolyElement:
    """星逆的诺伊曼级数

    f = c(1 − n)，c 为可逆常数，返回 c⁻¹ Σ_{k≤order} n^{⋆k}，
    满足 f⋆result = 1 − n^{⋆(order+1)}。
    """
    c = constant_part(f)
    if not c:
        raise NonInvertibleConstantTerm("常数项为零，不能展开星逆")
    c_inv = coeff_inverse(c)
    n = RING.one - c_inv * f
    total = RING.zero
    power = RING.one
    for _ in range(order + 1):
        total += power
        power = star(power, n)
    return c_inv * total


def apply_diffop(D: DiffOpPoly, f: PhaseFn) -> PhaseFn:
    """把微分算子作用到多项式或指数多项式上"""
    if isinstance(f, ExpPoly):
        result = ExpPoly(RING.zero, f.phase)
        for (j, k), c in D.terms.items():
            result = result + f.derivative(j, k) * c
        return ExpPoly(result.prefactor, f.phase)
    f = RING(f)
    result = RING.zero
    for (j, k), c in D.terms.items():
        result += c * dp(dq(f, j), k)
    return result


def lie_operator_of(f: PolyElement) -> DiffOpPoly:
    """李算子 L̂_f = f⋆ − ⋆f 的有限展开

    只保留奇数阶：L̂_f = Σ_{s 奇} 2 (iħ/2)^s/s! Σ_t (−1)^t C(s,t)
    (∂_q^{s−t}∂_p^t f) ∂_q^t ∂_p^{s−t}
    """
    f = RING(f)
    order = degree_qp(f)
    derivs = _poly_derivatives(f, max(order, 0))
    terms: Dict[Tuple[int, int], PolyElement] = {}
    for s in range(1, order + 1, 2):
        weight_s = _series_coeff(s) * 2
        for t in range(s + 1):
            c = derivs[(s - t, t)]
            if not c:
                continue
            key = (t, s - t)
            terms[key] = terms.get(key, RING.zero) + c * weight_s * (comb(s, t) * (-1) ** t)
    return DiffOpPoly(terms)


def bopp_shift(V: PolyElement, shift) -> DiffOpPoly:
    """V(q + shift·∂_p) 展开为微分算子 Σ_k V^{(k)}(q) shift^k/k! ∂_p^k (V 只依赖 q)"""
    shift = as_coeff(shift)
    terms: Dict[Tuple[int, int], PolyElement] = {}
    derivative = RING(V)
    k = 0
    while derivative:
        terms[(0, k)] = derivative * shift ** k * rational_factor(1, factorial(k))
        derivative = dq(derivative)
        k += 1
    return DiffOpPoly(terms)
