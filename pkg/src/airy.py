"""Airy 函数

Maclaurin 级数 (series_min < x < series_max) 与渐近展开 (其余部分)。
工作范围只有下限 lower_limit：x 越负振荡渐近式越不准，x 为正时衰减渐近式对任意大的 x 都适用。
高精度路径在 mpmath 中运行同一组级数递推，供傅里叶检查使用。
"""

import logging
from typing import Tuple

import mpmath
import numpy as np
from scipy import integrate

from config import get_settings
from errors import OutOfRange

logger = logging.getLogger(__name__)

# Ai(0) 与 −Ai'(0)
AI_0 = 0.355028053887817239
AI_PRIME_0 = 0.258819403792806798

# 级数截断的相对阈值
_SERIES_EPS = 1e-17
_MAX_TERMS = 400


def _asymptotic_coefficients(count: int) -> Tuple[np.ndarray, np.ndarray]:
    """u_k、v_k：u_k = (6k−5)(6k−3)(6k−1)/((2k−1)·216k)·u_{k−1}，v_k = −(6k+1)/(6k−1)·u_k"""
    u = np.ones(count)
    v = np.ones(count)
    for k in range(1, count):
        u[k] = u[k - 1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216 * k)
        v[k] = -(6 * k + 1) / (6 * k - 1) * u[k]
    return u, v


_U, _V = _asymptotic_coefficients(60)


def _optimal_sum(coeffs: np.ndarray, zeta: float, parity: int = -1) -> float:
    """Σ (−1)^k c_k/ζ^k 在项开始增大处截断

    parity 为 0 或 1 时只取 k ≡ parity (mod 2) 的项，符号按 (−1)^{k//2}。
    """
    total = 0.0
    previous = float("inf")
    for k, c in enumerate(coeffs):
        if parity >= 0 and k % 2 != parity:
            continue
        term = c / zeta ** k
        if abs(term) > previous:
            break
        sign = (-1) ** (k // 2) if parity >= 0 else (-1) ** k
        total += sign * term
        previous = abs(term)
        if abs(term) < _SERIES_EPS * abs(total):
            break
    return total


class AiryEval:
    """Ai 与 Ai' 的求值器

    x < lower_limit 抛出 OutOfRange；x ≥ series_max 一律使用衰减渐近式，没有上限。
    """

    def __init__(self):
        settings = get_settings().airy
        self.series_min = settings.series_min
        self.series_max = settings.series_max
        self.lower_limit = settings.lower_limit

    # ------------------------------------------------------------------
    # 标量实现
    # ------------------------------------------------------------------

    @staticmethod
    def _series(x: float) -> Tuple[float, float]:
        """Ai = c1·f − c2·g，Ai' = c1·f' − c2·g'"""
        x3 = x ** 3
        f_term, g_term = 1.0, x
        fp_term, gp_term = x * x / 2, 1.0
        f, g, fp, gp = f_term, g_term, fp_term, gp_term
        for k in range(_MAX_TERMS):
            f_term *= x3 / ((3 * k + 2) * (3 * k + 3))
            g_term *= x3 / ((3 * k + 3) * (3 * k + 4))
            fp_term *= x3 / ((3 * k + 3) * (3 * k + 5))
            gp_term *= x3 / ((3 * k + 1) * (3 * k + 3))
            f += f_term
            g += g_term
            fp += fp_term
            gp += gp_term
            if max(abs(f_term), abs(g_term), abs(fp_term), abs(gp_term)) < _SERIES_EPS * max(abs(f), 1.0):
                break
        return AI_0 * f - AI_PRIME_0 * g, AI_0 * fp - AI_PRIME_0 * gp

    @staticmethod
    def _asymptotic_positive(x: float) -> Tuple[float, float]:
        zeta = 2.0 / 3.0 * x ** 1.5
        decay = np.exp(-zeta) / (2 * np.sqrt(np.pi))
        ai = decay / x ** 0.25 * _optimal_sum(_U, zeta)
        ai_prime = -decay * x ** 0.25 * _optimal_sum(_V, zeta)
        return ai, ai_prime

    @staticmethod
    def _asymptotic_negative(x: float) -> Tuple[float, float]:
        z = -x
        zeta = 2.0 / 3.0 * z ** 1.5
        phase = zeta + np.pi / 4
        s, c = np.sin(phase), np.cos(phase)
        scale = 1 / np.sqrt(np.pi)
        ai = scale / z ** 0.25 * (s * _optimal_sum(_U, zeta, 0) - c * _optimal_sum(_U, zeta, 1))
        ai_prime = -scale * z ** 0.25 * (c * _optimal_sum(_V, zeta, 0) + s * _optimal_sum(_V, zeta, 1))
        return ai, ai_prime

    def _scalar(self, x: float) -> Tuple[float, float]:
        if x < self.lower_limit:
            raise OutOfRange(f"x={x} 低于工作范围下限 {self.lower_limit}")
        if x >= self.series_max:
            return self._asymptotic_positive(x)
        if x <= self.series_min:
            return self._asymptotic_negative(x)
        return self._series(x)

    def _vectorized(self, x, pick: int) -> np.ndarray:
        arr = np.asarray(x, dtype=float)
        if arr.size and np.nanmin(arr) < self.lower_limit:
            raise OutOfRange(f"x={np.nanmin(arr)} 低于工作范围下限 {self.lower_limit}")
        flat = np.array([self._scalar(float(v))[pick] for v in arr.ravel()])
        return flat.reshape(arr.shape)

    def __call__(self, x) -> np.ndarray:
        """Ai(x)"""
        return self._vectorized(x, 0)

    def prime(self, x) -> np.ndarray:
        """Ai'(x)"""
        return self._vectorized(x, 1)

    def both(self, x) -> Tuple[np.ndarray, np.ndarray]:
        return self(x), self.prime(x)

    # ------------------------------------------------------------------
    # 高精度与积分表示
    # ------------------------------------------------------------------

    @staticmethod
    def _series_mp(x: float) -> float:
        """在 mpmath 中求 Maclaurin 级数，精度随抵消量自动提高"""
        lost_digits = int(2 * (2.0 / 3.0) * abs(x) ** 1.5 * 0.4343) + 1
        with mpmath.workdps(30 + lost_digits):
            xm = mpmath.mpf(x)
            x3 = xm ** 3
            f_term, g_term = mpmath.mpf(1), xm
            f, g = f_term, g_term
            eps = mpmath.mpf(10) ** (-(25 + lost_digits))
            k = 0
            while True:
                f_term *= x3 / ((3 * k + 2) * (3 * k + 3))
                g_term *= x3 / ((3 * k + 3) * (3 * k + 4))
                f += f_term
                g += g_term
                k += 1
                if abs(f_term) + abs(g_term) < eps * (abs(f) + abs(g)):
                    break
            c1 = 1 / (mpmath.power(3, mpmath.mpf(2) / 3) * mpmath.gamma(mpmath.mpf(2) / 3))
            c2 = 1 / (mpmath.power(3, mpmath.mpf(1) / 3) * mpmath.gamma(mpmath.mpf(1) / 3))
            return float(c1 * f - c2 * g)

    def precise(self, x, upper_switch: float = 12.0) -> np.ndarray:
        """高精度 Ai：x ≤ upper_switch 用 mpmath 级数，以上用渐近展开"""
        arr = np.asarray(x, dtype=float)
        if arr.size and np.nanmin(arr) < self.lower_limit:
            raise OutOfRange(f"x={np.nanmin(arr)} 低于工作范围下限 {self.lower_limit}")
        flat = np.array([
            self._series_mp(float(v)) if v <= upper_switch else self._asymptotic_positive(float(v))[0]
            for v in arr.ravel()
        ])
        return flat.reshape(arr.shape)


def airy_integral(x: float, dps: int = 30) -> float:
    """积分表示 Ai(x) = (1/π)∫_0^∞ cos(t³/3 + xt) dt，用 mpmath 振荡求积"""
    with mpmath.workdps(dps):
        xm = mpmath.mpf(x)
        value = mpmath.quadosc(
            lambda t: mpmath.cos(t ** 3 / 3 + xm * t),
            [0, mpmath.inf],
            zeros=lambda n: mpmath.cbrt(3 * mpmath.pi * n),
        )
        return float(value / mpmath.pi)


def ode_residual(evaluator: AiryEval, a: float, b: float) -> float:
    """Ai'' = x·Ai 的积分形式 |Ai'(b) − Ai'(a) − ∫_a^b x·Ai(x) dx|"""
    solver = get_settings().solver
    area, _ = integrate.quad(lambda t: t * float(evaluator(t)), a, b,
                             epsabs=solver.quad_epsabs, epsrel=solver.quad_epsrel, limit=200)
    return abs(float(evaluator.prime(b)) - float(evaluator.prime(a)) - area)
