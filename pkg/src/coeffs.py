"""精确系数环

所有精确对象共用同一个 sympy 稀疏多项式环 ℚ(i)[q, p, ħ, 参数...]：
- 相空间多项式 (PhasePoly) 是该环的元素；
- 系数 (CoeffElem) 是不含 q、p 的元素；
- ħ 允许出现负指数 (相位 i/ħ 需要)，加、乘、求导对负指数同样精确。
"""

import logging
from fractions import Fraction
from math import comb, factorial
from numbers import Rational
from typing import Dict, Mapping, Tuple, Union

import numpy as np
from sympy import QQ, QQ_I
from sympy.polys.orderings import lex
from sympy.polys.rings import PolyElement, PolyRing

from errors import NonInvertibleConstantTerm, UnknownSymbol

logger = logging.getLogger(__name__)

# 可声明的形式参数
PARAMETER_NAMES: Tuple[str, ...] = (
    "lam", "nu", "alpha", "beta", "gamma", "mu",
    "a", "b", "c", "d", "k", "E", "c1", "c2",
)
SYMBOL_NAMES: Tuple[str, ...] = ("q", "p", "hbar") + PARAMETER_NAMES

Q_INDEX, P_INDEX, HBAR_INDEX = 0, 1, 2

RING = PolyRing(SYMBOL_NAMES, QQ_I, lex)

# 类型别名：精确层的值都是 RING 的元素
PhasePoly = PolyElement
CoeffElem = PolyElement
Monomial = Tuple[int, ...]

_ZERO_MONOM: Monomial = (0,) * len(SYMBOL_NAMES)


def gaussian(re: Union[int, Fraction, Rational] = 0, im: Union[int, Fraction, Rational] = 0):
    """构造高斯有理数 re + i·im"""
    re, im = Fraction(re), Fraction(im)
    return QQ_I(QQ(re.numerator, re.denominator), QQ(im.numerator, im.denominator))


def monomial(**exponents: int) -> Monomial:
    """按符号名构造指数元组"""
    exps = list(_ZERO_MONOM)
    for name, e in exponents.items():
        if name not in SYMBOL_NAMES:
            raise UnknownSymbol(name)
        exps[SYMBOL_NAMES.index(name)] = e
    return tuple(exps)


def term(monom: Monomial, coeff=None) -> PolyElement:
    """单项式元素"""
    return RING.from_dict({monom: QQ_I.one if coeff is None else coeff})


def constant(value) -> PolyElement:
    """常数元素，value 可为 int / Fraction / 高斯有理数"""
    if isinstance(value, PolyElement):
        return value
    if isinstance(value, (int, Fraction)):
        return RING.ground_new(gaussian(value))
    if isinstance(value, complex):
        return RING.ground_new(gaussian(Fraction(value.real), Fraction(value.imag)))
    return RING.ground_new(QQ_I.convert(value))


ZERO = RING.zero
ONE = RING.one
I = constant(gaussian(0, 1))
q, p, hbar = RING.gens[Q_INDEX], RING.gens[P_INDEX], RING.gens[HBAR_INDEX]


def symbol(name: str) -> PolyElement:
    """按名称取生成元 (q, p, hbar 或参数)"""
    if name not in SYMBOL_NAMES:
        raise UnknownSymbol(name)
    return RING.gens[SYMBOL_NAMES.index(name)]


def hbar_power(k: int) -> PolyElement:
    """ħ^k，k 可以为负"""
    return term(monomial(hbar=k))


def is_coeff(f: PolyElement) -> bool:
    """是否不含 q、p"""
    return all(m[Q_INDEX] == 0 and m[P_INDEX] == 0 for m in f.keys())


def as_coeff(value) -> CoeffElem:
    """把 int / Fraction / complex / 参数名 / 环元素 转为系数"""
    if isinstance(value, str):
        return symbol(value)
    elem = constant(value)
    if not is_coeff(elem):
        raise ValueError(f"系数不能含 q 或 p: {elem}")
    return elem


def prune(f: PolyElement) -> PolyElement:
    """去掉值为零的项 (环元素与 Python 整数相加时可能残留)"""
    return RING.from_dict({m: c for m, c in f.items() if c})


def coeff_inverse(c: CoeffElem) -> CoeffElem:
    """系数的逆：只允许 ħ^k 乘以非零高斯有理数"""
    c = prune(c)
    if not c:
        raise NonInvertibleConstantTerm("系数为零")
    if len(c) != 1:
        raise NonInvertibleConstantTerm(f"多项式系数不可逆: {format_poly(c)}")
    (monom, value), = c.items()
    if any(e for i, e in enumerate(monom) if i != HBAR_INDEX):
        raise NonInvertibleConstantTerm(f"含参数的系数不可逆: {format_poly(c)}")
    return term(monomial(hbar=-monom[HBAR_INDEX]), QQ_I.quo(QQ_I.one, value))


def rational_factor(numer: int, denom: int = 1) -> PolyElement:
    """有理常数 numer/denom"""
    return constant(Fraction(numer, denom))


def qp_monomial(m: int, n: int) -> PolyElement:
    """q^m p^n"""
    return term(monomial(q=m, p=n))


def qp_terms(f: PolyElement) -> Dict[Tuple[int, int], CoeffElem]:
    """按 (q 指数, p 指数) 分组，值为系数元素"""
    grouped: Dict[Tuple[int, int], dict] = {}
    for monom, value in f.items():
        key = (monom[Q_INDEX], monom[P_INDEX])
        rest = (0, 0) + monom[2:]
        grouped.setdefault(key, {})[rest] = value
    return {key: RING.from_dict(d) for key, d in grouped.items()}


def from_qp_terms(terms: Mapping[Tuple[int, int], CoeffElem]) -> PolyElement:
    """qp_terms 的逆"""
    result = RING.zero
    for (m, n), c in terms.items():
        result += c * qp_monomial(m, n)
    return result


def constant_part(f: PolyElement) -> CoeffElem:
    """q^0 p^0 项的系数"""
    return qp_terms(f).get((0, 0), RING.zero)


def degree_qp(f: PolyElement) -> int:
    """q、p 的总次数；零元素返回 -1"""
    if not f:
        return -1
    return max(m[Q_INDEX] + m[P_INDEX] for m in f.keys())


def degree_in(f: PolyElement, index: int) -> int:
    """单个生成元的次数；零元素返回 -1"""
    if not f:
        return -1
    return max(m[index] for m in f.keys())


def drop_hbar(f: PolyElement) -> PolyElement:
    """令 ħ = 0 (要求没有 ħ 的负幂)"""
    if any(m[HBAR_INDEX] < 0 for m in f.keys()):
        raise ValueError("含 ħ 负幂的元素不能取 ħ→0")
    return RING.from_dict({m: c for m, c in f.items() if m[HBAR_INDEX] == 0})


def dq(f: PolyElement, order: int = 1) -> PolyElement:
    """∂_q^order"""
    for _ in range(order):
        if not f:
            break
        f = f.diff(q)
    return f


def dp(f: PolyElement, order: int = 1) -> PolyElement:
    """∂_p^order"""
    for _ in range(order):
        if not f:
            break
        f = f.diff(p)
    return f


def substitute_qp(f: PolyElement, new_q: PolyElement, new_p: PolyElement) -> PolyElement:
    """同时代换 q → new_q, p → new_p"""
    return f.compose([(q, new_q), (p, new_p)])


def integrate_q(f: PolyElement) -> PolyElement:
    """对 q 的原函数 (常数取零)"""
    result = RING.zero
    for monom, value in f.items():
        m = monom[Q_INDEX]
        shifted = (m + 1,) + monom[1:]
        result += term(shifted, QQ_I.quo(value, QQ_I(m + 1)))
    return result


def integrate_p(f: PolyElement) -> PolyElement:
    """对 p 的原函数 (常数取零)"""
    result = RING.zero
    for monom, value in f.items():
        n = monom[P_INDEX]
        shifted = monom[:1] + (n + 1,) + monom[2:]
        result += term(shifted, QQ_I.quo(value, QQ_I(n + 1)))
    return result


def used_symbols(f: PolyElement) -> Tuple[str, ...]:
    """元素中实际出现的符号名"""
    used = set()
    for monom in f.keys():
        used.update(name for name, e in zip(SYMBOL_NAMES, monom) if e)
    return tuple(name for name in SYMBOL_NAMES if name in used)


# ---------------------------------------------------------------------------
# 数值求值
# ---------------------------------------------------------------------------

def gaussian_to_complex(value) -> complex:
    """高斯有理数转 complex"""
    return complex(float(value.x), float(value.y))


def evaluate_coeff(c: CoeffElem, values: Mapping[str, complex]) -> complex:
    """在给定参数值处对系数求值"""
    total = 0j
    for monom, value in c.items():
        factor = gaussian_to_complex(value)
        for i, e in enumerate(monom):
            if not e:
                continue
            name = SYMBOL_NAMES[i]
            if name not in values:
                raise UnknownSymbol(name, f"缺少符号 {name} 的数值")
            factor *= complex(values[name]) ** e
        total += factor
    return total


def evaluate_poly(f: PolyElement, q_values, p_values, values: Mapping[str, complex]) -> np.ndarray:
    """在采样点上对相空间多项式求值 (numpy 广播)"""
    q_arr = np.asarray(q_values, dtype=complex)
    p_arr = np.asarray(p_values, dtype=complex)
    result = np.zeros(np.broadcast(q_arr, p_arr).shape, dtype=complex)
    for (m, n), c in qp_terms(f).items():
        result = result + evaluate_coeff(c, values) * q_arr ** m * p_arr ** n
    return result


# ---------------------------------------------------------------------------
# 文本格式：精确输出，可以被表达式解析器重新读入
# ---------------------------------------------------------------------------

def _format_rational(r) -> str:
    if r.denominator == 1:
        return str(r.numerator)
    return f"({r.numerator}/{r.denominator})"


def _format_coeff(value) -> Tuple[bool, str]:
    """返回 (是否为负, 去掉符号后的文本)；文本为空表示系数为 ±1"""
    x, y = value.x, value.y
    if not y:
        mag = -x if x < 0 else x
        return x < 0, "" if mag == 1 else _format_rational(mag)
    if not x:
        mag = -y if y < 0 else y
        return y < 0, "i" if mag == 1 else f"{_format_rational(mag)}*i"
    sign = "-" if x < 0 else ""
    re_text = sign + _format_rational(-x if x < 0 else x)
    im_mag = -y if y < 0 else y
    im_text = "i" if im_mag == 1 else f"{_format_rational(im_mag)}*i"
    return False, f"({re_text} {'-' if y < 0 else '+'} {im_text})"


def _format_term(monom: Monomial, value) -> Tuple[bool, str]:
    numer, denom = [], []
    for name, e in zip(SYMBOL_NAMES, monom):
        if e > 0:
            numer.append(name if e == 1 else f"{name}^{e}")
        elif e < 0:
            denom.append(name if e == -1 else f"{name}^{-e}")
    negative, ctext = _format_coeff(value)
    parts = ([ctext] if ctext else []) + numer
    body = "*".join(parts) if parts else "1"
    if denom:
        body += "/" + "/".join(denom)
    return negative, body


def format_poly(f: PolyElement) -> str:
    """精确文本，例如 q*p - (1/2)*i*hbar"""
    if not f:
        return "0"
    pieces = []
    for index, (monom, value) in enumerate(f.terms()):
        negative, body = _format_term(monom, value)
        if index == 0:
            pieces.append(f"-{body}" if negative else body)
        else:
            pieces.append(f" - {body}" if negative else f" + {body}")
    return "".join(pieces)

