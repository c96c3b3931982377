"""核心引擎 - 整合各模块逻辑

PsqEngine 把命令行子命令分派到精确层、点变换、缠结与网格实验室，
并把结果整理为 CommandResult。
"""

import inspect
import logging
import re
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np
import sympy
from sympy.polys.rings import PolyElement

from closed_form import ClosedFormFn
from coeffs import RING, as_coeff, format_poly, p, q
from config import get_settings
from ct_engine import (
    GeneratingFn, canonicity_check, compose_steps, ct_from_gf_defnalt, decomposition_steps,
    lie_conjugate, linear_act, linear_decompose, linear_gf, verify_gf_relation,
)
from errors import DegenerateDecomposition, SingularCayley, UnsupportedVariant, UsageError
from expr_parser import parse, parse_closed_form, parse_exact, parse_function, to_sympy
from grid_lab import (
    GridFn, airy_to_delta_fourier_check, airy_wigner_grid, general_star_grid, genvalue_residual,
    relative_residual, star_grid_poly, star_poly_grid,
)
from intertwine import (
    coordinate_relation_residual, darboux_phi_from_zeromode, gauge_form_residual, intertwine_residual,
    potential_hamiltonian, susy_pair_from_phi, twopotentials_residual,
)
from models import CanonicalPair, LinearCT, describe
from phase_algebra import ExpPoly, moyal_bracket, star
from point_ct import point_ct_forward, point_ct_inverse, point_g_from_f
from report_engine import CommandResult
from weyl_bridge import OpPoly, dequantize, quantize

logger = logging.getLogger(__name__)

# 子命令 -> 方法名
COMMANDS: Dict[str, str] = {
    "star": "star",
    "bracket": "bracket",
    "quantize": "quantize",
    "dequantize": "dequantize",
    "transform": "transform",
    "verify-gf": "verify_gf",
    "canonicity": "canonicity",
    "point-solve": "point_solve",
    "point-forward": "point_forward",
    "linear": "linear",
    "intertwine": "intertwine",
    "twopotentials": "twopotentials",
    "genvalue": "genvalue",
    "airy-delta": "airy_delta",
    "grid-star": "grid_star",
}

TRANSFORM_KINDS = ("gauge", "cubic", "linear", "interchange", "lie", "gf")


def text(value: Any) -> Any:
    """精确对象的文本形式"""
    if isinstance(value, PolyElement):
        return format_poly(value)
    if isinstance(value, (ExpPoly, ClosedFormFn, OpPoly)):
        return str(value)
    return describe(value)


def is_exact_zero(value: Any) -> bool:
    return ExpPoly.of(value).is_zero()


class PsqEngine:
    """核心引擎

    Args:
        params: 已声明的参数，值为数值 (可为 None，只在精确层使用)
        hbar: 数值命令使用的 ħ
        tolerance: 覆盖各命令的默认容差
        branch: 点变换闭式求逆的分支
        guess: 点变换反解的初始猜测
    """

    def __init__(self, params: Optional[Mapping[str, Optional[complex]]] = None, hbar: Optional[float] = None,
                 tolerance: Optional[float] = None, branch: str = "principal", guess: Optional[complex] = None):
        self.settings = get_settings()
        self.params: Dict[str, Optional[complex]] = dict(params or {})
        self.hbar = float(hbar) if hbar is not None else self.settings.grid.default_hbar
        self.tolerance = tolerance
        self.branch = branch
        self.guess = guess
        self.values: Dict[str, complex] = {k: v for k, v in self.params.items() if v is not None}
        self.values["hbar"] = self.hbar

    # ------------------------------------------------------------------
    # 分派
    # ------------------------------------------------------------------

    def handler(self, command: str) -> Callable[..., CommandResult]:
        if command not in COMMANDS:
            raise UsageError(f"未知子命令: {command}")
        return getattr(self, COMMANDS[command])

    def run(self, command: str, options: Mapping[str, Any]) -> CommandResult:
        """执行子命令，options 中多余的键被忽略"""
        method = self.handler(command)
        accepted = inspect.signature(method).parameters
        kwargs = {k: v for k, v in options.items() if k in accepted}
        logger.info("执行 %s", command)
        result = method(**kwargs)
        logger.info("%s 完成: %s", command, "通过" if result.passed else "未通过")
        return result

    # ------------------------------------------------------------------
    # 解析辅助
    # ------------------------------------------------------------------

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(self.params)

    def _tol(self, default: float) -> float:
        return self.tolerance if self.tolerance is not None else default

    def _exact(self, expr: str) -> Any:
        return parse_exact(expr, self.names)

    def _poly(self, expr: str, what: str) -> PolyElement:
        value = self._exact(expr)
        if isinstance(value, ExpPoly):
            raise UsageError(f"{what} 必须是多项式: {expr}")
        return RING(value)

    def _coeff(self, expr: str, what: str) -> PolyElement:
        try:
            return as_coeff(self._poly(expr, what))
        except ValueError as e:
            raise UsageError(f"{what} 不能含 q 或 p: {expr}") from e

    def number(self, expr: str) -> complex:
        """数值表达式，已赋值的参数和 hbar 可以出现"""
        value = to_sympy(parse(expr, self.names))
        subs = {sympy.Symbol(k): v for k, v in self.values.items()}
        result = value.subs(subs).evalf()
        if result.free_symbols:
            missing = ", ".join(sorted(str(s) for s in result.free_symbols))
            raise UsageError(f"{expr} 需要数值 (用 --param name=value 给出 {missing})")
        return complex(result)

    def _real(self, expr: str) -> float:
        value = self.number(expr)
        if value.imag:
            raise UsageError(f"{expr} 必须是实数")
        return value.real

    @staticmethod
    def _samples(qmin: float, qmax: float, n: int) -> np.ndarray:
        if n < 1:
            raise UsageError("采样点数必须为正")
        return np.linspace(qmin, qmax, n)

    def _grid(self, expr: str, nq: int, n_p: int, q_range, p_range) -> Tuple[GridFn, Optional[Any]]:
        """采样表达式，精确对象同时返回"""
        value = parse_function(expr, self.names)
        if isinstance(value, ClosedFormFn):
            grid = GridFn.sample(lambda Q, P: value(Q, P, self.values), nq, n_p, q_range, p_range, self.hbar)
            return grid, None
        return GridFn.from_phase_poly(value, nq, n_p, q_range, p_range, self.hbar, self.values), value

    @staticmethod
    def _write_grid(grid: GridFn, out: Optional[str], result: Dict[str, Any]) -> None:
        if out:
            result["csv"] = str(grid.to_csv(Path(out)))

    @staticmethod
    def _summary(grid: GridFn) -> Dict[str, Any]:
        return {
            "shape": [grid.nq, grid.n_p],
            "q_range": list(grid.q_range),
            "p_range": list(grid.p_range),
            "hbar": grid.hbar,
            "max_abs": float(np.max(np.abs(grid.values))),
        }

    # ------------------------------------------------------------------
    # 星积与 Weyl 桥
    # ------------------------------------------------------------------

    def star(self, left: str, right: str) -> CommandResult:
        """f⋆g"""
        value = star(self._exact(left), self._exact(right))
        return CommandResult(command="star", inputs={"left": left, "right": right}, result={"value": text(value)})

    def bracket(self, left: str, right: str) -> CommandResult:
        """f⋆g − g⋆f"""
        value = moyal_bracket(self._exact(left), self._exact(right))
        return CommandResult(command="bracket", inputs={"left": left, "right": right}, result={"value": text(value)})

    def quantize(self, expr: str) -> CommandResult:
        """Weyl 量子化，输出正规序 (qh、ph 表示算子)"""
        op = quantize(self._poly(expr, "量子化的函数"))
        return CommandResult(command="quantize", inputs={"expr": expr}, result={"value": str(op)})

    def dequantize(self, expr: str) -> CommandResult:
        """去量子化，输入按正规序读入 (qh、ph 与 q、p 等价)"""
        normal = re.sub(r"\b([qp])h\b", r"\1", expr)
        op = OpPoly(self._poly(normal, "算子"))
        symbol = dequantize(op)
        round_trip = quantize(symbol).poly - op.poly
        return CommandResult(
            command="dequantize",
            inputs={"expr": expr},
            result={"value": format_poly(symbol)},
            residuals={"round_trip": format_poly(round_trip)},
            tolerance=0.0,
            passed=not round_trip,
        )

    # ------------------------------------------------------------------
    # 正则变换
    # ------------------------------------------------------------------

    def _generating_fn(self, kind: str, f: Optional[str], lam: Optional[str], nu: Optional[str],
                       matrix: Tuple[Optional[str], ...]) -> GeneratingFn:
        if kind == "gauge":
            if f is None or lam is None:
                raise UsageError("gauge 需要 --f 与 --lam")
            return GeneratingFn.gauge(self._poly(f, "规范函数"), self._coeff(lam, "λ"))
        if kind == "cubic":
            if nu is None:
                raise UsageError("cubic 需要 --nu")
            return GeneratingFn.cubic_gauge(self._coeff(nu, "ν"))
        if kind == "interchange":
            return GeneratingFn.interchange()
        if any(entry is None for entry in matrix):
            raise UsageError("linear 需要 --a --b --c --d")
        return GeneratingFn.of_linear(self._linear_ct(*matrix))

    def _linear_ct(self, a: str, b: str, c: str, d: str) -> LinearCT:
        return LinearCT.of(*(self._coeff(v, name) for v, name in zip((a, b, c, d), "abcd")))

    def transform(self, kind: str, u: Optional[str] = None, f: Optional[str] = None, lam: Optional[str] = None,
                  nu: Optional[str] = None, a: Optional[str] = None, b: Optional[str] = None,
                  c: Optional[str] = None, d: Optional[str] = None, F: Optional[str] = None,
                  order: int = 8) -> CommandResult:
        """生成函数作用于 u，或由生成函数构造 (Q, P)"""
        inputs = {k: v for k, v in dict(kind=kind, u=u, f=f, lam=lam, nu=nu, a=a, b=b, c=c, d=d, F=F).items()
                  if v is not None}
        if kind not in TRANSFORM_KINDS:
            raise UsageError(f"未知的变换种类: {kind}")

        if kind == "gf":
            if F is None:
                raise UsageError("gf 需要 --F")
            pair = ct_from_gf_defnalt(self._exact(F), order)
            report = canonicity_check(pair)
            return CommandResult(
                command="transform", inputs=inputs,
                result={"Q": text(pair.Q), "P": text(pair.P), "label": pair.label},
                residuals={"canonicity": text(report.residual)},
                tolerance=0.0, passed=report.passed, shape="pair",
            )

        if kind == "lie":
            if f is None or lam is None or u is None:
                raise UsageError("lie 需要 --f、--lam 与 --u")
            series = lie_conjugate(self._poly(f, "f"), self._exact(u), self._coeff(lam, "λ"), order)
            result = {f"term_{k}": text(t) for k, t in enumerate(series.terms)}
            result["total"] = text(series.total())
            result["exact"] = series.exact
            return CommandResult(command="transform", inputs=inputs, result=result)

        gf = self._generating_fn(kind, f, lam, nu, (a, b, c, d))
        result: Dict[str, Any] = {}
        residuals: Dict[str, Any] = {}
        images = (gf.act(q), gf.act(p))
        try:
            F_exp = gf.exp_form()
            result["gf"] = text(F_exp)
            res_q, res_p = verify_gf_relation(F_exp, *images)
            residuals = {"gf_q": text(res_q), "gf_p": text(res_p)}
        except SingularCayley as e:
            result["gf"] = f"不存在 ({e.message})"
        result["Q"], result["P"] = text(images[0]), text(images[1])
        if u is not None:
            result["value"] = text(gf.act(self._poly(u, "u")))
        passed = all(v == "0" for v in residuals.values())
        return CommandResult(command="transform", inputs=inputs, result=result, residuals=residuals,
                             tolerance=0.0, passed=passed)

    def verify_gf(self, F: str, Q: str, P: str) -> CommandResult:
        """(F⋆q − Q⋆F, F⋆p − P⋆F)"""
        res_q, res_p = verify_gf_relation(self._exact(F), self._poly(Q, "Q"), self._poly(P, "P"))
        return CommandResult(
            command="verify-gf",
            inputs={"F": F, "Q": Q, "P": P},
            residuals={"q": text(res_q), "p": text(res_p)},
            tolerance=0.0,
            passed=is_exact_zero(res_q) and is_exact_zero(res_p),
            shape="residual",
        )

    def canonicity(self, Q: str, P: str, qs: Optional[List[float]] = None,
                   ps: Optional[List[float]] = None) -> CommandResult:
        """{Q,P} = iħ：多项式精确检查，闭式在采样点上检查"""
        pair = CanonicalPair(parse_function(Q, self.names), parse_function(P, self.names))
        report = canonicity_check(pair, qs, ps, self.values, self._tol(self.settings.tolerances.canonicity_numeric))
        return CommandResult(
            command="canonicity",
            inputs={"Q": Q, "P": P},
            result={k: text(v) for k, v in report.details.items()},
            residuals={"canonicity": text(report.residual)},
            tolerance=report.tolerance,
            passed=report.passed,
            shape="residual",
        )

    # ------------------------------------------------------------------
    # 点变换
    # ------------------------------------------------------------------

    def point_solve(self, Q: str, m: str, qmin: float, qmax: float, n: int,
                    gauge_fix: bool = False) -> CommandResult:
        """由 Q(q) 反解 f，并与 sympy 给出的闭式分支比较"""
        Q_fn = ClosedFormFn.of(parse_closed_form(Q, self.names))
        m_value = self.number(m)
        qs = self._samples(qmin, qmax, n)
        table = point_ct_inverse(Q_fn, m_value, qs, hbar=self.hbar, values=self.values, guess=self.guess)
        tol = self._tol(self.settings.tolerances.point_residual)
        residuals: Dict[str, Any] = {"implicit": table.max_residual()}
        passed = table.max_residual() <= tol
        columns = ["q", "f", "residual"]

        closed_values = dict(self.values, lam=m_value / (1j * self.hbar))
        best, best_gap = None, float("inf")
        for form in table.closed_forms:
            gap = float(np.max(np.abs(form(qs, 0.0, closed_values) - table.columns["f"])))
            if gap < best_gap:
                best, best_gap = form, gap
        if best is not None:
            residuals["closed_form"] = best_gap

        if gauge_fix:
            if best is None:
                raise UnsupportedVariant("没有闭式 f，无法求 χ = 0 的 g")
            g_table = point_g_from_f(best, q_samples=qs, m=m_value, hbar=self.hbar, values=self.values)
            table.columns["g"] = g_table.columns["g"]
            table.columns["chi"] = g_table.columns["chi"]
            residuals["g"] = g_table.max_residual()
            passed = passed and g_table.max_residual() <= self._tol(self.settings.tolerances.point_g)
            columns = ["q", "f", "g", "chi", "residual"]

        return CommandResult(
            command="point-solve",
            inputs={"Q": Q, "m": m, "qmin": qmin, "qmax": qmax, "n": n},
            result={
                "columns": columns,
                "rows": table.rows(),
                "closed_forms": [str(form) for form in table.closed_forms],
                "matched_closed_form": str(best) if best is not None else None,
            },
            residuals=residuals,
            tolerance=tol,
            passed=passed,
            shape="table",
        )

    def point_forward(self, f: str, qmin: float, qmax: float, n: int, g: str = "0",
                      lam: Optional[str] = None, m: Optional[str] = None) -> CommandResult:
        """由 (f, g, λ) 构造点变换并在采样点上求值"""
        if (lam is None) == (m is None):
            raise UsageError("point-forward 需要 --lam 或 --m 之一")
        transform = point_ct_forward(
            parse_closed_form(f, self.names), parse_closed_form(g, self.names),
            self.number(lam) if lam is not None else None,
            m=self.number(m) if m is not None else None,
            hbar=self.hbar, values=self.values, branch=self.branch,
        )
        table = transform.table(self._samples(qmin, qmax, n))
        tol = self._tol(self.settings.tolerances.canonicity_numeric)
        result: Dict[str, Any] = {
            "columns": ["q", "upsilon", "Q", "Qtilde", "chi", "residual"],
            "rows": table.rows(),
            "closed_forms": [],
        }
        try:
            pair = transform.pair()
            result["closed_forms"] = [f"Q = {pair.Q}", f"P = {pair.P}"]
        except UnsupportedVariant as e:
            logger.info("点变换没有闭式: %s", e)
        return CommandResult(
            command="point-forward",
            inputs={"f": f, "g": g, "lam": lam, "m": m, "branch": self.branch},
            result=result,
            residuals={"canonicity": table.max_residual()},
            tolerance=tol,
            passed=table.max_residual() <= tol,
            shape="table",
        )

    # ------------------------------------------------------------------
    # 线性变换
    # ------------------------------------------------------------------

    def linear(self, a: str, b: str, c: str, d: str, u: Optional[str] = None) -> CommandResult:
        """行列式、生成函数、三因子分解与作用"""
        L = self._linear_ct(a, b, c, d)
        L.require_symplectic()
        images = L.images()
        result: Dict[str, Any] = {"Q": text(images[0]), "P": text(images[1]), "det": text(L.det())}
        residuals: Dict[str, Any] = {}

        try:
            F = linear_gf(L)
            result["gf"] = text(F)
            res_q, res_p = verify_gf_relation(F, *images)
            residuals["gf_q"], residuals["gf_p"] = text(res_q), text(res_p)
        except SingularCayley as e:
            result["gf"] = f"不存在 ({e.message})"

        try:
            decomposition = linear_decompose(L)
            result.update({k: v for k, v in decomposition.get_dict().items()})
            composed = compose_steps(decomposition_steps(decomposition))
            gap = [composed_entry - entry for composed_entry, entry in
                   zip((composed.a, composed.b, composed.c, composed.d), (L.a, L.b, L.c, L.d))]
            residuals["decomposition"] = "0" if not any(gap) else ", ".join(format_poly(x) for x in gap)
        except DegenerateDecomposition as e:
            result["decomposition"] = f"不适用 ({e.message})"

        if u is not None:
            result["value"] = text(linear_act(L, self._poly(u, "u")))

        inputs = {"a": a, "b": b, "c": c, "d": d}
        if u is not None:
            inputs["u"] = u
        return CommandResult(
            command="linear", inputs=inputs, result=result, residuals=residuals,
            tolerance=0.0, passed=all(v == "0" for v in residuals.values()), shape="pair",
        )

    # ------------------------------------------------------------------
    # 缠结
    # ------------------------------------------------------------------

    def intertwine(self, phi: Optional[str] = None, L: Optional[str] = None, H0: Optional[str] = None,
                   H1: Optional[str] = None, zeromode: Optional[str] = None, V0: Optional[str] = None,
                   qs: Optional[List[float]] = None) -> CommandResult:
        """三种用法：--phi 超势；--zeromode 零模 (Darboux)；--L --H0 --H1 直接检查"""
        if zeromode is not None:
            pair, report = darboux_phi_from_zeromode(
                parse_closed_form(zeromode, self.names),
                qs if qs else (0.1, 0.5, 1.0, 1.5),
                V0=parse_closed_form(V0, self.names) if V0 is not None else None,
                hbar_value=self.hbar, values=self.values,
                tolerance=self._tol(self.settings.tolerances.riccati),
            )
            return CommandResult(
                command="intertwine", inputs={"zeromode": zeromode, "V0": V0},
                result={"phi": str(pair.phi), "V0": str(pair.V0), "V1": str(pair.V1)},
                residuals={"riccati": report.residual}, tolerance=report.tolerance,
                passed=report.passed, shape="residual",
            )

        if phi is not None:
            potentials, intertwiner = susy_pair_from_phi(self._poly(phi, "φ"))
            L_value = intertwiner.L
            H0_value = potential_hamiltonian(potentials.V0)
            H1_value = potential_hamiltonian(potentials.V1)
            residuals = {
                "intertwine": text(intertwine_residual(L_value, H0_value, H1_value)),
                "gauge_form": text(gauge_form_residual(potentials.phi)),
                "coordinate": text(coordinate_relation_residual(L_value)),
            }
            result = {"V0": text(potentials.V0), "V1": text(potentials.V1), "L": text(L_value)}
            inputs = {"phi": phi}
        else:
            if L is None or H0 is None or H1 is None:
                raise UsageError("intertwine 需要 --phi、--zeromode 或 --L --H0 --H1")
            L_value = self._exact(L)
            residuals = {"intertwine": text(intertwine_residual(L_value, self._poly(H0, "H0"), self._poly(H1, "H1")))}
            result = {"L": text(L_value)}
            inputs = {"L": L, "H0": H0, "H1": H1}

        return CommandResult(
            command="intertwine", inputs=inputs, result=result, residuals=residuals,
            tolerance=0.0, passed=all(v == "0" for v in residuals.values()), shape="residual",
        )

    def twopotentials(self, L: str, V0: str, V1: str) -> CommandResult:
        """V1(q + iħ∂_p/2)L − V0(q − iħ∂_p/2)L − 2iħp∂_qL"""
        residual = twopotentials_residual(self._exact(L), self._poly(V0, "V0"), self._poly(V1, "V1"))
        return CommandResult(
            command="twopotentials",
            inputs={"L": L, "V0": V0, "V1": V1},
            residuals={"twopotentials": text(residual)},
            tolerance=0.0,
            passed=is_exact_zero(residual),
            shape="residual",
        )

    # ------------------------------------------------------------------
    # 网格实验室
    # ------------------------------------------------------------------

    def genvalue(self, H: str, E: str = "0", W: Optional[str] = None, nq: int = 256, n_p: int = 256,
                 qmin: float = -6.0, qmax: float = 6.0, pmin: float = -6.0, pmax: float = 6.0,
                 margin: Optional[float] = None, out: Optional[str] = None) -> CommandResult:
        """‖H⋆W − E·W‖/‖W‖，W 缺省为 Airy 函数 Ai(ξ)"""
        H_poly = self._poly(H, "H")
        E_value = self._real(E)
        q_range, p_range = (qmin, qmax), (pmin, pmax)
        if W is None:
            grid = airy_wigner_grid(nq, n_p, q_range, p_range, self.hbar, E_value)
        else:
            grid, _ = self._grid(W, nq, n_p, q_range, p_range)
        residual = genvalue_residual(H_poly, grid, E_value, margin=margin, values=self.values)
        tol = self._tol(self.settings.tolerances.genvalue)
        result = self._summary(grid)
        if out:
            self._write_grid(star_poly_grid(H_poly, grid.windowed(margin), self.values), out, result)
        return CommandResult(
            command="genvalue",
            inputs={"H": H, "E": E, "W": W if W is not None else "airy"},
            result=result,
            residuals={"genvalue": residual},
            tolerance=tol,
            passed=residual <= tol,
            shape="residual",
        )

    def airy_delta(self, E: str = "0", modes: int = 256, no_operator: bool = False) -> CommandResult:
        """e^{(ħ²/12)∂_p³} Ai 的平坦谱检查"""
        report = airy_to_delta_fourier_check(self.hbar, self._real(E), modes, apply_operator=not no_operator,
                                             tolerance=self._tol(self.settings.tolerances.airy_delta))
        return CommandResult(
            command="airy-delta",
            inputs={"hbar": self.hbar, "E": E, "modes": modes, "operator": not no_operator},
            result={k: describe(v) for k, v in report.details.items()},
            residuals={"deviation": report.residual},
            tolerance=report.tolerance,
            passed=report.passed,
            shape="residual",
        )

    def grid_star(self, F: str, G: str, nq: int = 64, n_p: int = 64, qmin: float = -6.0, qmax: float = 6.0,
                  pmin: float = -6.0, pmax: float = 6.0, margin: Optional[float] = None,
                  out: Optional[str] = None) -> CommandResult:
        """采样函数的一般星积；任一因子为多项式时与多项式星积交叉检查"""
        q_range, p_range = (qmin, qmax), (pmin, pmax)
        F_grid, F_exact = self._grid(F, nq, n_p, q_range, p_range)
        G_grid, G_exact = self._grid(G, nq, n_p, q_range, p_range)
        product = general_star_grid(F_grid, G_grid)

        result = self._summary(product)
        residuals: Dict[str, Any] = {}
        reference = None
        if isinstance(F_exact, PolyElement):
            reference = star_poly_grid(F_exact, G_grid, self.values)
        elif isinstance(G_exact, PolyElement):
            reference = star_grid_poly(F_grid, G_exact, self.values)
        tol = self._tol(self.settings.tolerances.relation)
        passed = True
        if reference is not None:
            residuals["cross_check"] = relative_residual(product - reference, reference, margin)
            passed = residuals["cross_check"] <= tol
        self._write_grid(product, out, result)
        return CommandResult(
            command="grid-star", inputs={"F": F, "G": G}, result=result, residuals=residuals,
            tolerance=tol if reference is not None else None, passed=passed, shape="residual",
        )
