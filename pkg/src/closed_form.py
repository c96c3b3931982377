"""闭式函数

对非多项式的情形 (1/q、ln q、e^q、cosh 等) 用 sympy 表达式承载，
可形式求导，并通过 lambdify 在数值点上求值。
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Mapping, Optional, Tuple

import numpy as np
import sympy
from sympy.polys.rings import PolyElement

from coeffs import SYMBOL_NAMES, evaluate_poly
from errors import UnknownSymbol

# 与系数环同名的 sympy 符号
SYMBOLS: Dict[str, sympy.Symbol] = {name: sympy.Symbol(name) for name in SYMBOL_NAMES}
Q_SYM, P_SYM, HBAR_SYM = SYMBOLS["q"], SYMBOLS["p"], SYMBOLS["hbar"]


def poly_to_sympy(f: PolyElement) -> sympy.Expr:
    """环元素转 sympy 表达式 (允许 ħ 负幂)"""
    expr = sympy.Integer(0)
    for monom, value in f.items():
        c = sympy.Rational(int(value.x.numerator), int(value.x.denominator)) + sympy.I * sympy.Rational(
            int(value.y.numerator), int(value.y.denominator)
        )
        factor = c
        for name, e in zip(SYMBOL_NAMES, monom):
            if e:
                factor *= SYMBOLS[name] ** e
        expr += factor
    return expr


@dataclass(frozen=True)
class ClosedFormFn:
    """闭式标量函数 f(q[, p])"""

    expr: sympy.Expr

    @classmethod
    def of(cls, value) -> "ClosedFormFn":
        """由 sympy 表达式、字符串、数字或环元素构造"""
        if isinstance(value, ClosedFormFn):
            return value
        if isinstance(value, PolyElement):
            return cls(poly_to_sympy(value))
        if isinstance(value, str):
            return cls(sympy.sympify(value, locals=dict(SYMBOLS)))
        return cls(sympy.sympify(value))

    @cached_property
    def parameters(self) -> Tuple[str, ...]:
        """除 q、p 之外出现的符号"""
        names = sorted(str(s) for s in self.expr.free_symbols)
        unknown = [n for n in names if n not in SYMBOLS]
        if unknown:
            raise UnknownSymbol(unknown[0])
        return tuple(n for n in names if n not in ("q", "p"))

    def depends_on(self, name: str) -> bool:
        return SYMBOLS[name] in self.expr.free_symbols

    def is_polynomial_in(self, name: str) -> bool:
        return bool(self.expr.is_polynomial(SYMBOLS[name]))

    def diff(self, name: str = "q", order: int = 1) -> "ClosedFormFn":
        """形式求导"""
        return ClosedFormFn(sympy.diff(self.expr, SYMBOLS[name], order))

    def subs(self, mapping: Mapping[str, object]) -> "ClosedFormFn":
        """代入符号值或表达式"""
        return ClosedFormFn(self.expr.subs({SYMBOLS[k]: v for k, v in mapping.items()}))

    def compose_q(self, inner: sympy.Expr) -> "ClosedFormFn":
        """f(inner(q), p)"""
        return ClosedFormFn(self.expr.subs(Q_SYM, inner))

    def simplify(self) -> "ClosedFormFn":
        return ClosedFormFn(sympy.simplify(self.expr))

    def is_zero(self) -> bool:
        return sympy.simplify(self.expr) == 0

    @cached_property
    def _numeric(self):
        args = [SYMBOLS[n] for n in ("q", "p") + self.parameters]
        return sympy.lambdify(args, self.expr, modules="numpy")

    def __call__(self, q_values, p_values=0.0, values: Optional[Mapping[str, complex]] = None) -> np.ndarray:
        """数值求值；输入按复数处理，使 sqrt、log 取主值分支"""
        values = values or {}
        missing = [n for n in self.parameters if n not in values]
        if missing:
            raise UnknownSymbol(missing[0], f"缺少符号 {missing[0]} 的数值")
        q_arr = np.asarray(q_values, dtype=complex)
        p_arr = np.asarray(p_values, dtype=complex)
        params = [complex(values[n]) for n in self.parameters]
        with np.errstate(all="ignore"):
            result = self._numeric(q_arr, p_arr, *params)
        return np.broadcast_to(np.asarray(result, dtype=complex), np.broadcast(q_arr, p_arr).shape).copy()

    def get_dict(self) -> Dict[str, str]:
        return {"expr": str(self.expr)}

    def __str__(self) -> str:
        return str(self.expr)


def evaluate_phase_fn(value, q_values, p_values, values: Mapping[str, complex]) -> np.ndarray:
    """多项式或闭式函数的统一数值求值"""
    if isinstance(value, PolyElement):
        return evaluate_poly(value, q_values, p_values, values)
    return ClosedFormFn.of(value)(q_values, p_values, values)
