"""网格实验室

精确层无法闭合时的数值验证：谱导数、多项式与采样函数的星积、
星本征值残差、两侧关系残差、Airy→δ 的傅里叶检查和一般采样函数的星积。

网格点由 linspace(endpoint=False) 给出，导数按周期延拓做 FFT；
非周期函数先乘 erf 窗，残差只在去掉边界比例 margin 的内部窗口上计算。
"""

import logging
import warnings
from dataclasses import dataclass
from math import comb, factorial
from pathlib import Path
from typing import Callable, Dict, Mapping, Optional, Tuple, Union

import numpy as np
from scipy.special import erf
from sympy.polys.rings import PolyElement

from airy import AiryEval
from coeffs import degree_qp, dp, dq, evaluate_poly
from config import get_settings
from errors import DegenerateInput, ResourceLimit, UnderResolved
from models import CheckReport
from phase_algebra import ExpPoly

logger = logging.getLogger(__name__)

Range = Tuple[float, float]

CSV_HEADER_FIELDS = "nq np qmin qmax pmin pmax hbar"


def _axis(n: int, bounds: Range) -> np.ndarray:
    return np.linspace(bounds[0], bounds[1], n, endpoint=False)


def _wavenumbers(n: int, bounds: Range) -> np.ndarray:
    return 2 * np.pi * np.fft.fftfreq(n, d=(bounds[1] - bounds[0]) / n)


def _derivative_factor(k: np.ndarray, order: int) -> np.ndarray:
    """(ik)^order，奇数阶时去掉 Nyquist 模"""
    factor = (1j * k) ** order
    if order % 2 == 1 and k.size % 2 == 0:
        factor[k.size // 2] = 0
    return factor


def _taper_1d(x: np.ndarray, bounds: Range, margin: float) -> np.ndarray:
    """两侧 erf 窗：中心距边界 margin·L/2，宽度 σ = margin·L/10"""
    if margin <= 0:
        return np.ones_like(x)
    length = bounds[1] - bounds[0]
    offset = margin * length / 2
    sigma = margin * length / 10
    rise = 1 + erf((x - (bounds[0] + offset)) / sigma)
    fall = 1 + erf(((bounds[1] - offset) - x) / sigma)
    return 0.25 * rise * fall


def _interior_mask(x: np.ndarray, bounds: Range, margin: float) -> np.ndarray:
    length = bounds[1] - bounds[0]
    return (x >= bounds[0] + margin * length) & (x <= bounds[1] - margin * length)


def _default_margin(margin: Optional[float]) -> float:
    return get_settings().grid.margin if margin is None else margin


@dataclass(frozen=True, eq=False)
class GridFn:
    """相空间矩形网格上的复值采样函数，values[i, j] 对应 (q_i, p_j)"""

    values: np.ndarray
    q_range: Range
    p_range: Range
    hbar: float = 1.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.ndim != 2:
            raise ValueError("网格函数必须是二维数组")
        if not (self.q_range[0] < self.q_range[1] and self.p_range[0] < self.p_range[1]):
            raise ValueError("区间必须满足 min < max")
        if self.hbar <= 0:
            raise ValueError("ħ 必须为正")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "q_range", (float(self.q_range[0]), float(self.q_range[1])))
        object.__setattr__(self, "p_range", (float(self.p_range[0]), float(self.p_range[1])))

    # ------------------------------------------------------------------
    # 构造
    # ------------------------------------------------------------------

    @classmethod
    def sample(cls, fn: Callable[[np.ndarray, np.ndarray], np.ndarray], nq: int, n_p: int,
               q_range: Range, p_range: Range, hbar: float = 1.0) -> "GridFn":
        """在网格上采样 fn(q, p)"""
        Q, P = np.meshgrid(_axis(nq, q_range), _axis(n_p, p_range), indexing="ij")
        values = np.broadcast_to(np.asarray(fn(Q, P), dtype=complex), Q.shape)
        return cls(values.copy(), q_range, p_range, hbar)

    @classmethod
    def from_phase_poly(cls, f: Union[PolyElement, ExpPoly], nq: int, n_p: int, q_range: Range, p_range: Range,
                        hbar: float = 1.0, values: Optional[Mapping[str, complex]] = None) -> "GridFn":
        """采样多项式或指数多项式 (ħ 取网格的 ħ)"""
        numeric = dict(values or {})
        numeric["hbar"] = hbar
        if isinstance(f, ExpPoly):
            def fn(Q, P):
                return evaluate_poly(f.prefactor, Q, P, numeric) * np.exp(evaluate_poly(f.phase, Q, P, numeric))
        else:
            def fn(Q, P):
                return evaluate_poly(f, Q, P, numeric)
        return cls.sample(fn, nq, n_p, q_range, p_range, hbar)

    def with_values(self, values: np.ndarray) -> "GridFn":
        return GridFn(values, self.q_range, self.p_range, self.hbar)

    # ------------------------------------------------------------------
    # 网格几何
    # ------------------------------------------------------------------

    @property
    def nq(self) -> int:
        return self.values.shape[0]

    @property
    def n_p(self) -> int:
        return self.values.shape[1]

    @property
    def q_axis(self) -> np.ndarray:
        return _axis(self.nq, self.q_range)

    @property
    def p_axis(self) -> np.ndarray:
        return _axis(self.n_p, self.p_range)

    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.q_axis, self.p_axis, indexing="ij")

    def same_grid(self, other: "GridFn") -> bool:
        return (self.values.shape == other.values.shape and self.q_range == other.q_range
                and self.p_range == other.p_range and self.hbar == other.hbar)

    def _require_same_grid(self, other: "GridFn") -> None:
        if not self.same_grid(other):
            raise ValueError("两个网格函数的网格不一致")

    # ------------------------------------------------------------------
    # 运算
    # ------------------------------------------------------------------

    def __add__(self, other: "GridFn") -> "GridFn":
        self._require_same_grid(other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "GridFn") -> "GridFn":
        self._require_same_grid(other)
        return self.with_values(self.values - other.values)

    def __mul__(self, scalar: complex) -> "GridFn":
        return self.with_values(self.values * scalar)

    __rmul__ = __mul__

    def taper(self, margin: Optional[float] = None) -> np.ndarray:
        """erf 窗函数本身"""
        margin = _default_margin(margin)
        return np.outer(_taper_1d(self.q_axis, self.q_range, margin), _taper_1d(self.p_axis, self.p_range, margin))

    def windowed(self, margin: Optional[float] = None) -> "GridFn":
        """乘以 erf 窗，使函数在边界处平滑地趋于零"""
        return self.with_values(self.values * self.taper(margin))

    def interior(self, margin: Optional[float] = None) -> np.ndarray:
        """内部窗口中的取值 (二维)"""
        margin = _default_margin(margin)
        rows = _interior_mask(self.q_axis, self.q_range, margin)
        cols = _interior_mask(self.p_axis, self.p_range, margin)
        return self.values[np.ix_(rows, cols)]

    def derivative_table(self, order: int) -> Dict[Tuple[int, int], np.ndarray]:
        """全部谱导数 ∂_q^a ∂_p^b，a+b ≤ order"""
        spectrum = np.fft.fft2(self.values)
        kq = _wavenumbers(self.nq, self.q_range)
        kp = _wavenumbers(self.n_p, self.p_range)
        table = {}
        for a in range(order + 1):
            fq = _derivative_factor(kq, a)
            for b in range(order + 1 - a):
                if a == 0 and b == 0:
                    table[(0, 0)] = self.values
                    continue
                factor = np.outer(fq, _derivative_factor(kp, b))
                table[(a, b)] = np.fft.ifft2(spectrum * factor)
        return table

    def derivative(self, order_q: int = 0, order_p: int = 0) -> "GridFn":
        """谱导数 ∂_q^order_q ∂_p^order_p"""
        spectrum = np.fft.fft2(self.values)
        factor = np.outer(
            _derivative_factor(_wavenumbers(self.nq, self.q_range), order_q),
            _derivative_factor(_wavenumbers(self.n_p, self.p_range), order_p),
        )
        return self.with_values(np.fft.ifft2(spectrum * factor))

    # ------------------------------------------------------------------
    # CSV
    # ------------------------------------------------------------------

    def to_csv(self, path: Union[str, Path]) -> Path:
        """首行 '# nq np qmin qmax pmin pmax hbar' 的数值，之后逐行 q,p,re,im"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        Q, P = self.mesh()
        data = np.column_stack([Q.ravel(), P.ravel(), self.values.real.ravel(), self.values.imag.ravel()])
        header = " ".join(
            [str(self.nq), str(self.n_p)]
            + ["%.17g" % v for v in (*self.q_range, *self.p_range, self.hbar)]
        )
        np.savetxt(path, data, fmt="%.17g", delimiter=",", header=header, comments="# ")
        logger.info("网格已写入 %s (%d x %d)", path, self.nq, self.n_p)
        return path

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "GridFn":
        """读取 to_csv 的输出"""
        path = Path(path)
        with open(path, "r", encoding="utf-8") as f:
            header = f.readline().lstrip("#").split()
        if len(header) != 7:
            raise ValueError(f"网格文件首行应包含 {CSV_HEADER_FIELDS}")
        nq, n_p = int(header[0]), int(header[1])
        qmin, qmax, pmin, pmax, hbar = (float(v) for v in header[2:])
        data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
        if data.shape != (nq * n_p, 4):
            raise ValueError(f"网格文件行数与首行不符: {data.shape[0]} != {nq * n_p}")
        values = (data[:, 2] + 1j * data[:, 3]).reshape(nq, n_p)
        return cls(values, (qmin, qmax), (pmin, pmax), hbar)


def relative_residual(residual: GridFn, reference: GridFn, margin: Optional[float] = None) -> float:
    """内部窗口上的 ‖r‖₂/‖reference‖₂；参考函数为零时发出 DegenerateInput 并返回 0"""
    ref_norm = float(np.linalg.norm(reference.interior(margin)))
    if ref_norm == 0.0:
        warnings.warn("参考函数在内部窗口上为零", DegenerateInput, stacklevel=2)
        logger.warning("参考函数在内部窗口上为零，残差按 0 处理")
        return 0.0
    return float(np.linalg.norm(residual.interior(margin))) / ref_norm


# ---------------------------------------------------------------------------
# 多项式与采样函数的星积
# ---------------------------------------------------------------------------

def _poly_table(H: PolyElement, order: int, W: GridFn, values: Optional[Mapping[str, complex]]):
    numeric = dict(values or {})
    numeric["hbar"] = W.hbar
    Q, P = W.mesh()
    return {
        (a, b): evaluate_poly(dp(dq(H, a), b), Q, P, numeric)
        for a in range(order + 1) for b in range(order + 1 - a)
    }


def _groenewold_grid(left, right, order: int, hbar: float) -> np.ndarray:
    """Σ_s (iħ/2)^s/s! Σ_t (−1)^t C(s,t) (∂_q^{s−t}∂_p^t f)(∂_p^{s−t}∂_q^t g)"""
    total = np.zeros(np.shape(right[(0, 0)]), dtype=complex)
    for s in range(order + 1):
        inner = 0
        for t in range(s + 1):
            inner = inner + comb(s, t) * (-1) ** t * left[(s - t, t)] * right[(t, s - t)]
        total = total + (0.5j * hbar) ** s / factorial(s) * inner
    return total


def star_poly_grid(H: PolyElement, W: GridFn, values: Optional[Mapping[str, complex]] = None) -> GridFn:
    """H⋆W：H 为多项式，W 的导数用谱方法"""
    order = degree_qp(H)
    if order < 0:
        return W.with_values(np.zeros_like(W.values))
    left = _poly_table(H, order, W, values)
    right = W.derivative_table(order)
    return W.with_values(_groenewold_grid(left, right, order, W.hbar))


def star_grid_poly(W: GridFn, H: PolyElement, values: Optional[Mapping[str, complex]] = None) -> GridFn:
    """W⋆H"""
    order = degree_qp(H)
    if order < 0:
        return W.with_values(np.zeros_like(W.values))
    left = W.derivative_table(order)
    right = _poly_table(H, order, W, values)
    return W.with_values(_groenewold_grid(left, right, order, W.hbar))


def genvalue_residual(H: PolyElement, W: GridFn, E: float, *, margin: Optional[float] = None,
                      taper: bool = True, values: Optional[Mapping[str, complex]] = None) -> float:
    """‖H⋆W − E·W‖₂/‖W‖₂ (内部窗口)"""
    windowed = W.windowed(margin) if taper else W
    residual = star_poly_grid(H, windowed, values) - windowed * E
    return relative_residual(residual, W, margin)


def relation_residual_grid(A: GridFn, X: PolyElement, Y: PolyElement, *, margin: Optional[float] = None,
                           taper: bool = True, values: Optional[Mapping[str, complex]] = None) -> float:
    """‖A⋆X − Y⋆A‖₂/‖A‖₂ (内部窗口)"""
    windowed = A.windowed(margin) if taper else A
    residual = star_grid_poly(windowed, X, values) - star_poly_grid(Y, windowed, values)
    return relative_residual(residual, A, margin)


# ---------------------------------------------------------------------------
# Airy
# ---------------------------------------------------------------------------

def airy_xi(Q: np.ndarray, P: np.ndarray, hbar: float, E: float) -> np.ndarray:
    """ξ = (2/ħ)^{2/3}(q + p² − E)"""
    return (2 / hbar) ** (2 / 3) * (Q + P ** 2 - E)


def airy_wigner_grid(nq: int, n_p: int, q_range: Range, p_range: Range, hbar: float = 1.0,
                     E: float = 0.0) -> GridFn:
    """W = Ai(ξ)，H = p² + q 的星本征函数"""
    evaluator = AiryEval()
    return GridFn.sample(lambda Q, P: evaluator(airy_xi(Q, P, hbar, E)), nq, n_p, q_range, p_range, hbar)


def airy_to_delta_fourier_check(hbar: float = 1.0, E: float = 0.0, modes: int = 256, *,
                                apply_operator: bool = True, tolerance: Optional[float] = None) -> CheckReport:
    """检查 e^{(ħ²/12)∂_p³} 把 Ai((2/ħ)^{2/3}(p − E)) 变为 (ħ/2)^{2/3}δ(p − E)

    采样阻尼函数 Ai(x)e^{ax}，x = (2/ħ)^{2/3}(p − E)。其傅里叶模为
    (1/α)exp(iκ³/3)，κ = t/α + ia，α = (2/ħ)^{2/3}。算子对模 t 乘以
    exp(−iħ²t³/12) = exp(−i(t/α)³/3)，阻尼相当于把 t/α 平移为 κ，
    于是修正后的模应为常数 1/α。返回可分辨频带内 |α·ĉ − 1| 的最大值。
    """
    settings = get_settings()
    airy_cfg = settings.airy
    tol = tolerance if tolerance is not None else settings.tolerances.airy_delta
    alpha = (2 / hbar) ** (2 / 3)
    a = airy_cfg.delta_damping

    x = np.linspace(airy_cfg.lower_limit, airy_cfg.delta_upper, modes, endpoint=False)
    step = (x[1] - x[0]) / alpha
    p0 = E + x[0] / alpha
    samples = AiryEval().precise(x) * np.exp(a * x)

    t = 2 * np.pi * np.fft.fftfreq(modes, d=step)
    spectrum = np.fft.fft(samples) * step * np.exp(-1j * t * (p0 - E))
    kappa = t / alpha + 1j * a

    magnitude = np.abs(spectrum)
    band = magnitude >= airy_cfg.delta_band * magnitude.max()
    band_modes = int(band.sum())
    if band_modes < airy_cfg.min_band_modes:
        raise UnderResolved(f"可分辨频带只有 {band_modes} 个模，至少需要 {airy_cfg.min_band_modes}")

    corrected = alpha * spectrum
    if apply_operator:
        corrected = corrected * np.exp(-1j * kappa ** 3 / 3)
    deviation = float(np.max(np.abs(corrected[band] - 1)))
    logger.debug("Airy→δ 检查：%d 个模，频带内 %d 个，偏差 %.3e", modes, band_modes, deviation)
    details = {"band_modes": band_modes, "modes": modes, "alpha": alpha, "operator": apply_operator}
    return CheckReport("airy_delta", deviation <= tol, deviation, tol, details)


# ---------------------------------------------------------------------------
# 一般星积
# ---------------------------------------------------------------------------

def general_star_grid(F: GridFn, G: GridFn) -> GridFn:
    """F⋆G = Σ_modes Ĝ(σ,τ) F(q − ħτ/2, p + ħσ/2) e^{i(σq + τp)}

    F 的平移通过频域相位实现；|Ĝ| 低于 mode_cutoff 的模被舍去。
    """
    F._require_same_grid(G)
    settings = get_settings()
    cells = F.nq * F.n_p
    limit = settings.max_grid_cells()
    if cells > limit:
        raise ResourceLimit(f"网格 {F.nq}x{F.n_p} 超过上限 {limit} 个单元")

    hbar = F.hbar
    kq = _wavenumbers(F.nq, F.q_range)
    kp = _wavenumbers(F.n_p, F.p_range)
    KQ, KP = np.meshgrid(kq, kp, indexing="ij")
    Q, P = F.mesh()
    q_off, p_off = Q - F.q_range[0], P - F.p_range[0]

    F_hat = np.fft.fft2(F.values)
    G_hat = np.fft.fft2(G.values) / cells
    peak = np.abs(G_hat).max()
    result = np.zeros_like(F.values)
    if peak == 0:
        return F.with_values(result)

    keep = np.argwhere(np.abs(G_hat) > settings.grid.mode_cutoff * peak)
    logger.debug("一般星积：保留 %d / %d 个模", len(keep), cells)
    for i, j in keep:
        sigma, tau = kq[i], kp[j]
        shift = np.exp(0.5j * hbar * (sigma * KP - tau * KQ))
        shifted = np.fft.ifft2(F_hat * shift)
        result += G_hat[i, j] * shifted * np.exp(1j * (sigma * q_off + tau * p_off))
    return F.with_values(result)
