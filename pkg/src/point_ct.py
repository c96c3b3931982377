"""点变换求解器

点变换 Q = Q(q)，P = Q̃(q)p + χ(q) 的正向构造、由 Q 反解 f、
χ = 0 的规范固定 g、情形 (iv) 判据以及 A(q) 的时间 1 流。

数值求解统一使用 m = iħλ (可以是复数)，采样点记为源变量 q，
像点 υ = q + m f(q)/2 处的量用 *_at(q) 表示。
"""

import logging
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import sympy
from scipy import integrate, optimize

from closed_form import ClosedFormFn, HBAR_SYM, Q_SYM, P_SYM, SYMBOLS
from config import get_settings
from errors import (
    DomainError, FlowEscape, NoConvergence, SingularDenominator, SingularIntegrand,
    UnsupportedVariant,
)
from models import CanonicalPair, CheckReport, SampleTable

logger = logging.getLogger(__name__)

LAM_SYM = SYMBOLS["lam"]
# m = iħλ
M_SYM = sympy.I * HBAR_SYM * LAM_SYM

BRANCHES = ("principal", "other")

# 判定分母为零的阈值
_SINGULAR_EPS = 1e-12


def _lam_from(lam, m, hbar: float) -> complex:
    if (lam is None) == (m is None):
        raise ValueError("lam 与 m 必须且只能给出一个")
    if lam is not None:
        return complex(lam)
    return complex(m) / (1j * hbar)


def _point_values(values: Optional[Mapping[str, complex]], hbar: float, lam: complex) -> Dict[str, complex]:
    merged = dict(values or {})
    merged["hbar"] = hbar
    merged["lam"] = lam
    return merged


def _as_samples(q_samples) -> np.ndarray:
    return np.atleast_1d(np.asarray(q_samples, dtype=complex))


@dataclass
class PointTransform:
    """由 (f, g, λ) 给出的点变换"""

    f: ClosedFormFn
    g: ClosedFormFn
    values: Dict[str, complex]
    branch: str = "principal"

    def __post_init__(self):
        if self.branch not in BRANCHES:
            raise ValueError(f"未知分支: {self.branch}")

    @property
    def hbar(self) -> float:
        return float(np.real(self.values["hbar"]))

    @property
    def m(self) -> complex:
        return 1j * self.values["hbar"] * self.values["lam"]

    @cached_property
    def _derivatives(self) -> Tuple[ClosedFormFn, ClosedFormFn, ClosedFormFn]:
        return self.f.diff("q"), self.f.diff("q", 2), self.g.diff("q")

    def _eval(self, fn: ClosedFormFn, qs) -> np.ndarray:
        return fn(qs, 0.0, self.values)

    # ------------------------------------------------------------------
    # 采样点上的数值
    # ------------------------------------------------------------------

    def upsilon(self, q_samples) -> np.ndarray:
        """υ = q + m f(q)/2"""
        qs = _as_samples(q_samples)
        return qs + self.m * self._eval(self.f, qs) / 2

    def Q_at(self, q_samples) -> np.ndarray:
        """Q(υ) = q − m f(q)/2"""
        qs = _as_samples(q_samples)
        return qs - self.m * self._eval(self.f, qs) / 2

    def _denominators(self, qs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(2 − m f', 2 + m f')"""
        fp = self._eval(self._derivatives[0], qs)
        minus = 2 - self.m * fp
        plus = 2 + self.m * fp
        bad = np.abs(minus) < _SINGULAR_EPS
        if np.any(bad):
            raise SingularDenominator(f"2 - iħλ f' 在 q={qs[bad][0]} 处为零")
        return minus, plus

    def Qtilde_at(self, q_samples) -> np.ndarray:
        """Q̃(υ) = (2 + m f')/(2 − m f')"""
        qs = _as_samples(q_samples)
        minus, plus = self._denominators(qs)
        return plus / minus

    def Qtilde_prime_at(self, q_samples) -> np.ndarray:
        """Q̃ 对自身自变量的导数在 υ 处的值 8m f''/((2 − m f')²(2 + m f'))"""
        qs = _as_samples(q_samples)
        minus, plus = self._denominators(qs)
        bad = np.abs(plus) < _SINGULAR_EPS
        if np.any(bad):
            raise SingularDenominator(f"2 + iħλ f' 在 q={qs[bad][0]} 处为零")
        fpp = self._eval(self._derivatives[1], qs)
        return 8 * self.m * fpp / (minus ** 2 * plus)

    def chi_at(self, q_samples) -> np.ndarray:
        """χ(υ) = (m/2)(1 + Q̃)g'(q) + (iħm/4) Q̃'(υ) f'(q)"""
        qs = _as_samples(q_samples)
        fp = self._eval(self._derivatives[0], qs)
        gp = self._eval(self._derivatives[2], qs)
        qt = self.Qtilde_at(qs)
        qt_prime = self.Qtilde_prime_at(qs)
        m = self.m
        return m / 2 * (1 + qt) * gp + 1j * self.hbar * m / 4 * qt_prime * fp

    def canonicity_residual(self, q_samples, step: float = 1e-5) -> np.ndarray:
        """|Q'(υ)·Q̃(υ) − 1|，Q'(υ) 由中心差分得到"""
        qs = _as_samples(q_samples)
        dQ = self.Q_at(qs + step) - self.Q_at(qs - step)
        dU = self.upsilon(qs + step) - self.upsilon(qs - step)
        return np.abs(dQ / dU * self.Qtilde_at(qs) - 1)

    def table(self, q_samples) -> SampleTable:
        """采样表：υ、Q、Q̃、χ 与正则性残差"""
        qs = _as_samples(q_samples)
        return SampleTable(
            q=qs,
            columns={
                "upsilon": self.upsilon(qs),
                "Q": self.Q_at(qs),
                "Qtilde": self.Qtilde_at(qs),
                "chi": self.chi_at(qs),
            },
            residuals=self.canonicity_residual(qs),
        )

    # ------------------------------------------------------------------
    # 闭式
    # ------------------------------------------------------------------

    def _pick_source(self, solutions: List[sympy.Expr], x: sympy.Symbol) -> sympy.Expr:
        """按 λ→0 时与恒等变换的距离给解排序，principal 取最近者"""
        trial_values = {SYMBOLS[k]: v for k, v in self.values.items() if k in SYMBOLS}
        trial_values[LAM_SYM] = complex(self.values["lam"]) * 1e-3
        trial_x = 0.3 + 0.1j

        def distance(sol: sympy.Expr) -> float:
            try:
                value = complex(sol.subs(trial_values).subs(x, trial_x).evalf())
            except (TypeError, ValueError, ZeroDivisionError):
                return float("inf")
            d = abs(value - trial_x)
            return d if np.isfinite(d) else float("inf")

        ranked = sorted(solutions, key=distance)
        if self.branch == "principal":
            return ranked[0]
        if len(ranked) < 2:
            raise UnsupportedVariant("υ(q) = x 只有一个解，不存在另一分支")
        return ranked[1]

    @cached_property
    def symbolic(self) -> Tuple[sympy.Expr, sympy.Expr, sympy.Expr]:
        """以新变量 x (输出中仍记作 q) 表示的 (Q, Q̃, χ)"""
        x = sympy.Symbol("x")
        f = self.f.expr
        try:
            solutions = sympy.solve(sympy.Eq(x, Q_SYM + M_SYM * f / 2), Q_SYM)
        except NotImplementedError as e:
            raise UnsupportedVariant(f"无法解析求逆 υ(q) = x: {e}") from e
        if not solutions:
            raise UnsupportedVariant("υ(q) = x 没有解析解")
        source = self._pick_source(solutions, x)

        fp = sympy.diff(f, Q_SYM)
        gp = sympy.diff(self.g.expr, Q_SYM)
        at_source = {Q_SYM: source}
        Q_x = (Q_SYM - M_SYM * f / 2).subs(at_source)
        Qt_x = ((2 + M_SYM * fp) / (2 - M_SYM * fp)).subs(at_source)
        chi_x = M_SYM / 2 * (1 + Qt_x) * gp.subs(at_source) + sympy.I * HBAR_SYM * M_SYM / 4 * sympy.diff(
            Qt_x, x
        ) * fp.subs(at_source)
        rename = {x: Q_SYM}
        return Q_x.subs(rename), Qt_x.subs(rename), chi_x.subs(rename)

    def pair(self) -> CanonicalPair:
        """闭式变换对 (Q(q), Q̃(q)p + χ(q))"""
        Q_x, Qt_x, chi_x = self.symbolic
        return CanonicalPair(ClosedFormFn(Q_x), ClosedFormFn(Qt_x * P_SYM + chi_x), label=f"point-{self.branch}")


def point_ct_forward(f, g=0, lam=None, *, m=None, hbar: float = 1.0,
                     values: Optional[Mapping[str, complex]] = None, branch: str = "principal") -> PointTransform:
    """构造点变换

    Args:
        f, g: q 的闭式函数或多项式
        lam: λ 的数值；也可以用 m = iħλ 给出
        hbar: ħ 的数值
        values: f、g 中其他参数的数值
        branch: 闭式求逆时选用的分支

    Returns:
        PointTransform，可在采样点求值，也可给出闭式变换对
    """
    lam_value = _lam_from(lam, m, hbar)
    return PointTransform(ClosedFormFn.of(f), ClosedFormFn.of(g), _point_values(values, hbar, lam_value), branch)


# ---------------------------------------------------------------------------
# 由 Q 反解 f
# ---------------------------------------------------------------------------

def _newton_sample(F, dF, guesses: Sequence[complex], tol: float, maxiter: int, accept: float) -> Tuple[complex, float]:
    """依次尝试初值，返回第一个残差合格的根；都失败时返回残差最小者"""
    best, best_residual = complex("nan"), float("inf")
    for index, x0 in enumerate(guesses):
        with warnings.catch_warnings(), np.errstate(all="ignore"):
            warnings.simplefilter("ignore", RuntimeWarning)
            try:
                root = complex(optimize.newton(F, x0, fprime=dF, tol=tol, maxiter=maxiter, disp=False))
            except (ZeroDivisionError, OverflowError, ValueError):
                continue
        residual = abs(F(root))
        if not np.isfinite(residual):
            continue
        if residual <= accept:
            if index:
                logger.warning("第 %d 个初值 %s 收敛", index + 1, x0)
            return root, residual
        if residual < best_residual:
            best, best_residual = root, residual
    return best, best_residual


def point_ct_inverse(Q, m: complex, q_samples, *, hbar: float = 1.0,
                     values: Optional[Mapping[str, complex]] = None,
                     guess: Optional[complex] = None, closed_form: bool = True) -> SampleTable:
    """由 Q(q) 反解 f：Q(q + m f/2) = q − m f/2

    令 h = m f/2，对每个采样点用牛顿法求 Q(q + h) − q + h = 0 的根。
    初值依次为调用者给出的 guess、上一采样点的解、设置中的默认初值。

    Returns:
        SampleTable，列 f 与 h，残差为 |Q(q + h) − q + h|；
        closed_forms 为 sympy 能给出的 f 的闭式 (可能为空)
    """
    if m == 0:
        raise ValueError("m = iħλ 不能为零")
    settings = get_settings()
    accept = settings.tolerances.point_residual
    solver = settings.solver
    Q = ClosedFormFn.of(Q)
    dQ = Q.diff("q")
    lam = complex(m) / (1j * hbar)
    numeric_values = _point_values(values, hbar, lam)

    qs = _as_samples(q_samples)
    roots = np.empty(qs.shape, dtype=complex)
    residuals = np.empty(qs.shape, dtype=float)
    previous: Optional[complex] = None
    for i, qv in enumerate(qs):
        def F(h, qv=qv):
            return complex(Q(qv + h, 0.0, numeric_values)) - qv + h

        def dF(h, qv=qv):
            return complex(dQ(qv + h, 0.0, numeric_values)) + 1

        candidates = ([guess] if guess is not None else []) + ([previous] if previous is not None else [])
        candidates += solver.guesses()
        root, residual = _newton_sample(F, dF, candidates, solver.newton_tol, solver.max_iterations, accept)
        if residual > accept:
            raise NoConvergence(qv, residual)
        roots[i], residuals[i] = root, residual
        previous = root
    logger.debug("点变换反解完成，%d 个采样点，最大残差 %.3e", qs.size, float(residuals.max(initial=0.0)))

    closed = _inverse_closed_forms(Q) if closed_form else []
    return SampleTable(
        q=qs,
        columns={"f": 2 * roots / m, "h": roots},
        residuals=residuals,
        closed_forms=closed,
    )


def _inverse_closed_forms(Q: ClosedFormFn) -> List[ClosedFormFn]:
    """sympy 能求解时给出 f = 2h/(iħλ) 的各个闭式分支"""
    h = sympy.Symbol("h")
    try:
        solutions = sympy.solve(sympy.Eq(Q.compose_q(Q_SYM + h).expr, Q_SYM - h), h)
    except (NotImplementedError, ValueError) as e:
        logger.debug("反解没有闭式: %s", e)
        return []
    return [ClosedFormFn(2 * s / M_SYM) for s in solutions]


# ---------------------------------------------------------------------------
# 规范固定 g、情形 (iv) 与 A(q) 的流
# ---------------------------------------------------------------------------

def point_g_closed_form(f) -> ClosedFormFn:
    """χ = 0 的 g：g = (iħ/2m) ln(4 − m² f'²)，m = iħλ (相差任意常数)"""
    fp = ClosedFormFn.of(f).diff("q").expr
    return ClosedFormFn(sympy.I * HBAR_SYM / (2 * M_SYM) * sympy.log(4 - M_SYM ** 2 * fp ** 2))


def point_g_from_f(f, lam=None, q_samples=(), *, m=None, hbar: float = 1.0,
                   values: Optional[Mapping[str, complex]] = None) -> SampleTable:
    """使 χ = 0 的 g

    g' = −iħ m f' f'' / (4 − m² f'²)。闭式原函数与逐段求积分互相校验，
    两者都取第一个采样点处为零。

    Returns:
        SampleTable，列 g (求积)、g_closed (闭式) 与 chi (代入闭式 g 后的 χ)；
        残差为两种 g 之差与 |χ| 的较大者；closed_forms = [g 的闭式]
    """
    lam_value = _lam_from(lam, m, hbar)
    numeric_values = _point_values(values, hbar, lam_value)
    f = ClosedFormFn.of(f)
    f1, f2 = f.diff("q"), f.diff("q", 2)
    m_value = 1j * hbar * lam_value
    solver = get_settings().solver

    def denominator(t):
        return 4 - m_value ** 2 * f1(t, 0.0, numeric_values) ** 2

    def integrand(t):
        return -1j * hbar * m_value * f1(t, 0.0, numeric_values) * f2(t, 0.0, numeric_values) / denominator(t)

    qs = _as_samples(q_samples)
    if qs.size == 0:
        raise ValueError("至少需要一个采样点")
    bad = np.abs(denominator(qs)) < _SINGULAR_EPS
    if np.any(bad):
        raise SingularIntegrand(f"1 + Q̃ 在 q={qs[bad][0]} 处奇异")

    # 沿实轴从第一个采样点逐段累积
    g_quad = np.zeros(qs.shape, dtype=complex)
    for i in range(1, qs.size):
        a, b = float(qs[i - 1].real), float(qs[i].real)
        opts = {"epsabs": solver.quad_epsabs, "epsrel": solver.quad_epsrel, "limit": 200}
        re, _ = integrate.quad(lambda t: float(np.real(integrand(t))), a, b, **opts)
        im, _ = integrate.quad(lambda t: float(np.imag(integrand(t))), a, b, **opts)
        g_quad[i] = g_quad[i - 1] + complex(re, im)

    closed = point_g_closed_form(f)
    g_closed = closed(qs, 0.0, numeric_values)
    g_closed = g_closed - g_closed[0]
    chi = PointTransform(f, closed, numeric_values).chi_at(qs)
    residuals = np.maximum(np.abs(g_quad - g_closed), np.abs(chi))
    return SampleTable(q=qs, columns={"g": g_quad, "g_closed": g_closed, "chi": chi},
                       residuals=residuals, closed_forms=[closed])


def case_iv_g(f) -> ClosedFormFn:
    """情形 (iv) 的 g = (iħ/2) f'"""
    return ClosedFormFn(sympy.I * HBAR_SYM / 2 * ClosedFormFn.of(f).diff("q").expr)


def point_case_iv_predicate(f, lam=None, q_samples=(), *, m=None, hbar: float = 1.0,
                            values: Optional[Mapping[str, complex]] = None,
                            tolerance: Optional[float] = None) -> CheckReport:
    """判断 Q̃'(υ) 是否等于 d/dq[Q̃(υ(q))]

    后者按链式法则为 Q̃'(υ)·υ'(q)，υ'(q) = 1 + m f'(q)/2。
    """
    tol = tolerance if tolerance is not None else get_settings().tolerances.case_iv
    transform = point_ct_forward(f, 0, lam, m=m, hbar=hbar, values=values)
    qs = _as_samples(q_samples)
    argument_derivative = transform.Qtilde_prime_at(qs)
    fp = transform._eval(transform._derivatives[0], qs)
    composite = argument_derivative * (1 + transform.m * fp / 2)
    residual = float(np.max(np.abs(argument_derivative - composite), initial=0.0))
    return CheckReport("case_iv", residual <= tol, residual, tol, {"g": str(case_iv_g(f))})


def flow_A(f, m: complex, q0, *, values: Optional[Mapping[str, complex]] = None) -> np.ndarray:
    """A(q0) = e^{−m f(q)∂_q} q 在 q0 处的值，即 dq/dt = −m f(q) 的时间 1 流"""
    f = ClosedFormFn.of(f)
    solver = get_settings().solver
    values = dict(values or {})
    radius = solver.escape_radius

    def rhs(t, y):
        return -m * f(y, 0.0, values)

    def escape(t, y):
        return radius - abs(y[0])

    escape.terminal = True

    starts = _as_samples(q0)
    result = np.empty(starts.shape, dtype=complex)
    for i, start in enumerate(starts):
        with np.errstate(all="ignore"):
            sol = integrate.solve_ivp(
                rhs, (0.0, 1.0), np.array([start], dtype=complex), method="DOP853",
                rtol=solver.flow_rtol, atol=solver.flow_atol, events=escape,
            )
        end = sol.y[0, -1] if sol.y.size else complex("nan")
        if sol.status != 0 or not np.isfinite(end):
            raise FlowEscape(f"从 q0={start} 出发的流在 t={sol.t[-1]:.6g} 处终止: {sol.message}")
        result[i] = end
    return result


def five_step_data() -> Tuple[ClosedFormFn, ClosedFormFn]:
    """Q = q²、P = p/2q 对应的 (f, g)"""
    s = sympy.sqrt(1 + 8 * Q_SYM)
    f = sympy.I / (HBAR_SYM * LAM_SYM) * (2 * Q_SYM + 1 + s)
    g = 1 / (2 * LAM_SYM) * sympy.log((1 + s) / (1 + 8 * Q_SYM))
    return ClosedFormFn(f), ClosedFormFn(g)


def require_five_step_domain(q_samples) -> np.ndarray:
    """1 + 8q > 0 且 q ≠ 0"""
    qs = _as_samples(q_samples)
    bad = (np.real(1 + 8 * qs) <= 0) | (np.abs(qs) == 0)
    if np.any(bad):
        raise DomainError(f"采样点 q={qs[bad][0]} 不满足 1 + 8q > 0 且 q ≠ 0")
    return qs
