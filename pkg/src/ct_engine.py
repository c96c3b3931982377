"""正则变换引擎 (精确层)

规范变换、线性变换及其生成函数、李级数共轭、三种基本变换在
函数上的作用，以及由单变量相位生成函数构造 (Q, P)。
"""

import logging
from dataclasses import dataclass
from math import factorial
from typing import Any, List, Optional, Tuple, Union

import numpy as np
import sympy
from sympy.polys.rings import PolyElement

from closed_form import ClosedFormFn, HBAR_SYM, P_SYM
from config import get_settings
from coeffs import (
    RING, I, hbar, q, p, P_INDEX, Q_INDEX,
    as_coeff, coeff_inverse, dq, dp, degree_in, hbar_power, integrate_q,
    is_coeff, prune, rational_factor, substitute_qp,
)
from errors import (
    DegenerateDecomposition, DomainError, MixedPhase, NonInvertibleConstantTerm,
    NotCanonical, SingularCayley, UnsupportedVariant,
)
from models import CanonicalPair, CheckReport, GFKind, LieSeries, LinearCT, LinearDecomposition
from phase_algebra import ExpPoly, lie_operator_of, apply_diffop, moyal_bracket, star, star_inverse_series, star_power

logger = logging.getLogger(__name__)

I_HBAR = I * hbar


def _require_q_only(f: PolyElement, what: str) -> PolyElement:
    f = RING(f)
    if degree_in(f, P_INDEX) > 0:
        raise DomainError(f"{what} 只能依赖 q")
    return f


def _emit(pair: CanonicalPair) -> CanonicalPair:
    """多项式分量的变换对在输出前复核 {Q,P} = iħ"""
    if pair.is_polynomial():
        residual = moyal_bracket(pair.Q, pair.P) - I_HBAR
        if residual:
            raise NotCanonical(f"{pair.label}: {{Q,P}} - iħ = {residual}")
    return pair


# ---------------------------------------------------------------------------
# 规范变换
# ---------------------------------------------------------------------------

def gauge_ct(f: PolyElement, lam) -> CanonicalPair:
    """规范变换 (q, p + iħλ ∂_q f)"""
    f = _require_q_only(f, "规范函数")
    lam = as_coeff(lam)
    return _emit(CanonicalPair(q, p + I_HBAR * lam * dq(f), label="gauge"))


def gauge_gf_from_ct(u: PolyElement) -> ExpPoly:
    """P = p + u(q) 的生成函数 e^{−(i/ħ)∫u dq}"""
    u = _require_q_only(u, "u")
    return ExpPoly.exp(-I * hbar_power(-1) * integrate_q(u))


def cubic_gauge_gf(nu) -> ExpPoly:
    """e^{−iνq³/(3ħ)}，对应 (q, p + νq²)"""
    return gauge_gf_from_ct(as_coeff(nu) * q ** 2)


def verify_gf_relation(F, Q: PolyElement, P: PolyElement) -> Tuple[Any, Any]:
    """(F⋆q − Q⋆F, F⋆p − P⋆F)，两者均为零当且仅当关系成立"""
    F = ExpPoly.of(F)
    return star(F, q) - star(Q, F), star(F, p) - star(P, F)


def gf_relation_holds(F, Q: PolyElement, P: PolyElement) -> bool:
    res_q, res_p = verify_gf_relation(F, Q, P)
    return ExpPoly.of(res_q).is_zero() and ExpPoly.of(res_p).is_zero()


# ---------------------------------------------------------------------------
# 正则性检查
# ---------------------------------------------------------------------------

def _closed_form_bracket(Q: ClosedFormFn, P: ClosedFormFn) -> sympy.Expr:
    """Q = Q(q)、P 为 p 的多项式时的 Moyal 括号 Σ_{s 奇} 2(iħ/2)^s/s! Q^{(s)} ∂_p^s P"""
    if Q.depends_on("p"):
        raise UnsupportedVariant("闭式正则性检查要求 Q 只依赖 q")
    if not P.is_polynomial_in("p"):
        raise UnsupportedVariant("闭式正则性检查要求 P 为 p 的多项式")
    top = int(sympy.degree(P.expr, P_SYM)) if P.depends_on("p") else 0
    bracket = sympy.Integer(0)
    for s in range(1, top + 1, 2):
        weight = 2 * (sympy.I * HBAR_SYM / 2) ** s / factorial(s)
        bracket += weight * Q.diff("q", s).expr * P.diff("p", s).expr
    return bracket


def canonicity_check(ct: CanonicalPair, q_samples=None, p_samples=None, values=None, tolerance: Optional[float] = None) -> CheckReport:
    """检查 {Q,P} = iħ

    多项式分量给出精确残差；闭式分量在采样点上给出最大残差。
    """
    Q, P = ct.Q, ct.P
    if isinstance(Q, ExpPoly) and Q.is_polynomial():
        Q = Q.prefactor
    if isinstance(P, ExpPoly) and P.is_polynomial():
        P = P.prefactor

    if isinstance(Q, (PolyElement, ExpPoly)) and isinstance(P, (PolyElement, ExpPoly)):
        residual = moyal_bracket(Q, P) - I_HBAR
        if isinstance(residual, ExpPoly):
            passed = residual.is_zero()
        else:
            passed = not residual
        return CheckReport("canonicity", passed, residual, 0.0)

    tol = tolerance if tolerance is not None else get_settings().tolerances.canonicity_numeric
    values = dict(values or {})
    values.setdefault("hbar", 1.0)
    Qf, Pf = ClosedFormFn.of(Q), ClosedFormFn.of(P)
    bracket = ClosedFormFn(_closed_form_bracket(Qf, Pf) - sympy.I * HBAR_SYM)
    q_samples = [0.3, 0.7, 1.1] if q_samples is None else q_samples
    p_samples = [-0.5, 0.0, 0.5] if p_samples is None else p_samples
    qq, pp = np.meshgrid(np.asarray(q_samples, dtype=complex), np.asarray(p_samples, dtype=complex), indexing="ij")
    residual = float(np.max(np.abs(bracket(qq, pp, values))))
    return CheckReport("canonicity", residual <= tol, residual, tol, {"samples": qq.size})


# ---------------------------------------------------------------------------
# 线性变换
# ---------------------------------------------------------------------------

def linear_act(L: LinearCT, u: PolyElement) -> PolyElement:
    """u(aq + bp, cq + dp)"""
    L.require_symplectic()
    new_q, new_p = L.images()
    return substitute_qp(RING(u), new_q, new_p)


def linear_gf(L: LinearCT) -> ExpPoly:
    """线性变换的生成函数 exp(2iA[bp² − cq² + (a−d)qp]/ħ)，A = 1/(a+d+2)"""
    L.require_symplectic()
    denom = prune(L.a + L.d + rational_factor(2))
    if not denom:
        raise SingularCayley("a + d + 2 = 0，生成函数不存在")
    try:
        A = coeff_inverse(denom)
    except NonInvertibleConstantTerm as e:
        raise SingularCayley(f"a + d + 2 必须是可逆常数: {e}") from e
    quadratic = L.b * p ** 2 - L.c * q ** 2 + (L.a - L.d) * q * p
    return ExpPoly.exp(2 * I * A * hbar_power(-1) * quadratic)


def linear_decompose(L: LinearCT) -> LinearDecomposition:
    """分解 a=(1+4ħ²αβ)k, b=−2iħα/k, c=2iħβk, d=1/k"""
    L.require_symplectic()
    if not L.d:
        raise DegenerateDecomposition("d = 0 (交换变换需要 q²、p²、q² 三个剪切因子，见 interchange_factors)")
    k = coeff_inverse(L.d)
    alpha = I * L.b * k * hbar_power(-1) * rational_factor(1, 2)
    beta = -I * L.c * L.d * hbar_power(-1) * rational_factor(1, 2)
    return LinearDecomposition(alpha, beta, k)


def shear_p_ct(alpha) -> LinearCT:
    """e^{αp²} 的作用：u(q − 2iħαp, p)"""
    return LinearCT(RING.one, -2 * I_HBAR * as_coeff(alpha), RING.zero, RING.one)


def shear_q_ct(beta) -> LinearCT:
    """e^{βq²} 的作用：u(q, p + 2iħβq)"""
    return LinearCT(RING.one, RING.zero, 2 * I_HBAR * as_coeff(beta), RING.one)


def scaling_ct(k) -> LinearCT:
    """e_⋆^{(i/ħ)(ln k) q⋆p} 的作用：u(kq, p/k)"""
    return LinearCT.scaling(k)


def decomposition_steps(decomposition: LinearDecomposition) -> List[LinearCT]:
    """按作用顺序给出三个因子：先 p² 剪切，再 q² 剪切，最后缩放"""
    return [
        shear_p_ct(decomposition.alpha),
        shear_q_ct(decomposition.beta),
        scaling_ct(decomposition.k),
    ]


def compose_steps(steps: List[LinearCT]) -> LinearCT:
    """依次作用的等效变换"""
    result = LinearCT.identity()
    for step in steps:
        result = result.then(step)
    return result


def interchange_factors() -> List[LinearCT]:
    """e^{iq²/2ħ}、e^{ip²/2ħ}、e^{iq²/2ħ} 三个规范因子对应的剪切"""
    half_i_over_hbar = I * hbar_power(-1) * rational_factor(1, 2)
    return [shear_q_ct(half_i_over_hbar), shear_p_ct(half_i_over_hbar), shear_q_ct(half_i_over_hbar)]


# ---------------------------------------------------------------------------
# 李级数
# ---------------------------------------------------------------------------

def lie_conjugate(f: PolyElement, u, lam, order: int) -> LieSeries:
    """e^{λL̂_f} u 的逐项级数，第 k 项为 λ^k/k! L̂_f^k u"""
    if order < 0:
        raise ValueError("order 必须非负")
    lam = as_coeff(lam)
    D = lie_operator_of(f)
    terms = [u]
    current = u
    for k in range(1, order + 1):
        current = apply_diffop(D, current) * (lam * rational_factor(1, k))
        if ExpPoly.of(current).is_zero():
            logger.debug("李级数在第 %d 阶终止", k)
            return LieSeries(terms, order, exact=True)
        terms.append(current)
    return LieSeries(terms, order, exact=False)


def star_conjugation_series(f: PolyElement, u: PolyElement, mu, order: int) -> List[PolyElement]:
    """用截断星指数直接共轭：第 k 项为 Σ_{a+b=k} μ^k (−1)^b/(a! b!) f^{⋆a}⋆u⋆f^{⋆b}"""
    mu = as_coeff(mu)
    powers = [star_power(f, n) for n in range(order + 1)]
    terms = []
    for k in range(order + 1):
        total = RING.zero
        for a in range(k + 1):
            b = k - a
            weight = rational_factor((-1) ** b, factorial(a) * factorial(b))
            total += star(star(powers[a], u), powers[b]) * weight
        terms.append(total * mu ** k)
    return terms


# ---------------------------------------------------------------------------
# 生成函数
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GeneratingFn:
    """生成函数的各种形式"""

    kind: GFKind
    f: Any = None
    g: Any = None
    lam: Any = None
    linear: Optional[LinearCT] = None
    F: Optional[ExpPoly] = None

    @classmethod
    def gauge(cls, f: PolyElement, lam) -> "GeneratingFn":
        return cls(GFKind.GAUGE, f=_require_q_only(f, "规范函数"), lam=as_coeff(lam))

    @classmethod
    def point(cls, f, g, lam) -> "GeneratingFn":
        return cls(GFKind.POINT_ORDINARY, f=ClosedFormFn.of(f), g=ClosedFormFn.of(g), lam=lam)

    @classmethod
    def of_linear(cls, L: LinearCT) -> "GeneratingFn":
        return cls(GFKind.LINEAR, linear=L)

    @classmethod
    def interchange(cls) -> "GeneratingFn":
        return cls(GFKind.INTERCHANGE, linear=LinearCT.interchange())

    @classmethod
    def cubic_gauge(cls, nu) -> "GeneratingFn":
        return cls(GFKind.CUBIC_GAUGE, f=q ** 3, lam=-I * as_coeff(nu) * hbar_power(-1) * rational_factor(1, 3))

    @classmethod
    def explicit(cls, F) -> "GeneratingFn":
        return cls(GFKind.EXPLICIT, F=ExpPoly.of(F))

    def exp_form(self) -> Union[ExpPoly, ClosedFormFn]:
        """生成函数本身"""
        if self.kind in (GFKind.GAUGE, GFKind.CUBIC_GAUGE):
            return ExpPoly.exp(self.lam * self.f)
        if self.kind in (GFKind.LINEAR, GFKind.INTERCHANGE):
            return linear_gf(self.linear)
        if self.kind == GFKind.POINT_ORDINARY:
            lam = sympy.sympify(self.lam)
            return ClosedFormFn(sympy.exp(lam * (self.f.expr * P_SYM + self.g.expr)))
        return self.F

    def act(self, u: PolyElement) -> PolyElement:
        """在函数上的作用"""
        return gauge_transform_known_ct(self, u)


def gauge_transform_known_ct(F: GeneratingFn, u: PolyElement) -> PolyElement:
    """已知生成函数在多项式上的精确作用"""
    u = RING(u)
    if F.kind in (GFKind.LINEAR, GFKind.INTERCHANGE):
        return linear_act(F.linear, u)
    if F.kind in (GFKind.GAUGE, GFKind.CUBIC_GAUGE):
        # q 的函数的李算子每次至少降低一次 p 的次数
        series = lie_conjugate(F.f, u, F.lam, max(degree_in(u, P_INDEX), 0) + 1)
        return series.total()
    raise UnsupportedVariant(f"{F.kind.value} 没有精确的作用公式，请使用 verify_gf_relation")


def ct_from_gf_defnalt(F, order: Optional[int] = None) -> CanonicalPair:
    """由 Q = q − iħ ∂_pF⋆F⁻¹、P = p + iħ ∂_qF⋆F⁻¹ 构造变换对

    相位只依赖 q 或只依赖 p 时星逆就是普通逆，结果精确；
    纯多项式 F 给出 order 时用截断星逆级数。
    """
    F = ExpPoly.of(F)
    if F.is_polynomial():
        prefactor = F.prefactor
        if is_coeff(prefactor):
            return _emit(CanonicalPair(q, p, label="defnalt"))
        if order is None:
            raise MixedPhase("多项式生成函数需要给出星逆级数的阶数")
        inverse = star_inverse_series(prefactor, order)
        Q = q - I_HBAR * star(dp(prefactor), inverse)
        P = p + I_HBAR * star(dq(prefactor), inverse)
        return CanonicalPair(Q, P, label=f"defnalt-series-{order}")

    if not is_coeff(F.prefactor):
        raise MixedPhase("前因子必须是常数")
    q_only = degree_in(F.phase, P_INDEX) <= 0
    p_only = degree_in(F.phase, Q_INDEX) <= 0
    if not (q_only or p_only):
        raise MixedPhase("相位同时依赖 q 和 p，请使用 verify_gf_relation")
    return _emit(CanonicalPair(q - I_HBAR * dp(F.phase), p + I_HBAR * dq(F.phase), label="defnalt"))
