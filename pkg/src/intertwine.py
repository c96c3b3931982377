"""缠结关系

势函数型哈密顿函数之间的缠结 L⋆H0 = H1⋆L：Riccati/Darboux 构造、
精确残差、两势函数关系，以及 Q = q²、P = p/2q 的五步数据检查。
全部检查使用不含逆的两侧形式。
"""

import logging
from typing import Optional, Tuple

import numpy as np
import sympy
from sympy.polys.rings import PolyElement

from closed_form import ClosedFormFn, HBAR_SYM
from coeffs import RING, I, hbar, p, q, P_INDEX, dq, dp, degree_in, hbar_power, integrate_q, rational_factor
from config import get_settings
from errors import DomainError, ZeroNode
from models import CheckReport, Intertwiner, PotentialPair
from phase_algebra import ExpPoly, PhaseFn, apply_diffop, bopp_shift, star
from point_ct import five_step_data, point_ct_forward, require_five_step_domain

logger = logging.getLogger(__name__)


def _q_only(f: PolyElement, what: str) -> PolyElement:
    f = RING(f)
    if degree_in(f, P_INDEX) > 0:
        raise DomainError(f"{what} 只能依赖 q")
    return f


def susy_pair_from_phi(phi: PolyElement) -> Tuple[PotentialPair, Intertwiner]:
    """V0 = φ² − ħφ'，V1 = φ² + ħφ'，L = p − iφ"""
    phi = _q_only(phi, "超势")
    V0 = phi ** 2 - hbar * dq(phi)
    V1 = phi ** 2 + hbar * dq(phi)
    return PotentialPair(V0, V1, phi), Intertwiner(p - I * phi)


def potential_hamiltonian(V: PolyElement) -> PolyElement:
    """H = p² + V(q)"""
    return p ** 2 + RING(V)


def darboux_phi_from_zeromode(phi0, q_samples=(0.1, 0.5, 1.0, 1.5), *, V0=None, hbar_value: float = 1.0,
                              values=None, tolerance: Optional[float] = None) -> Tuple[PotentialPair, CheckReport]:
    """由零模 φ0 构造超势 φ = −ħ φ0'/φ0

    V0 缺省时取零模方程给出的 ħ² φ0''/φ0；在采样点上检查 Riccati 残差
    V0 − (φ² − ħφ')。

    Returns:
        (闭式的 PotentialPair, Riccati 残差报告)
    """
    tol = tolerance if tolerance is not None else get_settings().tolerances.riccati
    phi0 = ClosedFormFn.of(phi0)
    numeric_values = dict(values or {})
    numeric_values["hbar"] = hbar_value

    qs = np.atleast_1d(np.asarray(q_samples, dtype=complex))
    at_samples = phi0(qs, 0.0, numeric_values)
    nodes = np.abs(at_samples) < 1e-300
    if np.any(nodes) or not np.all(np.isfinite(at_samples)):
        bad = qs[nodes][0] if np.any(nodes) else qs[~np.isfinite(at_samples)][0]
        raise ZeroNode(f"零模函数在 q={bad} 处为零或无定义")

    phi = ClosedFormFn(sympy.simplify(-HBAR_SYM * phi0.diff("q").expr / phi0.expr))
    if V0 is None:
        potential = ClosedFormFn(sympy.simplify(HBAR_SYM ** 2 * phi0.diff("q", 2).expr / phi0.expr))
    else:
        potential = ClosedFormFn.of(V0)
    V1 = ClosedFormFn(phi.expr ** 2 + HBAR_SYM * phi.diff("q").expr)

    riccati = ClosedFormFn(potential.expr - (phi.expr ** 2 - HBAR_SYM * phi.diff("q").expr))
    residual = float(np.max(np.abs(riccati(qs, 0.0, numeric_values))))
    logger.debug("Darboux 超势 φ = %s，Riccati 残差 %.3e", phi, residual)
    report = CheckReport("riccati", residual <= tol, residual, tol, {"phi": str(phi)})
    return PotentialPair(potential, V1, phi), report


def intertwine_residual(L: PhaseFn, H0: PolyElement, H1: PolyElement) -> PhaseFn:
    """L⋆H0 − H1⋆L"""
    return star(L, H0) - star(H1, L)


def twopotentials_residual(L: PhaseFn, V0: PolyElement, V1: PolyElement) -> PhaseFn:
    """V1(q + iħ∂_p/2) L − V0(q − iħ∂_p/2) L − 2iħ p ∂_q L

    与 intertwine_residual(L, p² + V0, p² + V1) 相差一个符号。
    """
    half_i_hbar = I * hbar * rational_factor(1, 2)
    V0, V1 = _q_only(V0, "V0"), _q_only(V1, "V1")
    shifted_1 = apply_diffop(bopp_shift(V1, half_i_hbar), L)
    shifted_0 = apply_diffop(bopp_shift(V0, -half_i_hbar), L)
    if isinstance(L, ExpPoly):
        transport = L.dq() * (2 * I * hbar * p)
    else:
        transport = 2 * I * hbar * p * dq(RING(L))
    return shifted_1 - shifted_0 - transport


def gauge_form_residual(phi: PolyElement) -> ExpPoly:
    """e^{−Φ/ħ}⋆p − (p − iφ)⋆e^{−Φ/ħ}，Φ = ∫φ dq"""
    phi = _q_only(phi, "超势")
    weight = ExpPoly.exp(-integrate_q(phi) * hbar_power(-1))
    return ExpPoly.of(star(weight, p)) - star(p - I * phi, weight)


def coordinate_relation_residual(L: PolyElement) -> PolyElement:
    """L⋆q − q⋆L + iħ ∂_p L"""
    L = RING(L)
    return star(L, q) - star(q, L) + I * hbar * dp(L)


def airy_intertwiner() -> ExpPoly:
    """e^{−2i(qp + 4p³/3)/ħ}，联系 p² + q 与 p²"""
    phase = -2 * I * hbar_power(-1) * (q * p + rational_factor(4, 3) * p ** 3)
    return ExpPoly.exp(phase)


def five_step_verify(lam: complex, q_samples, *, hbar_value: float = 1.0,
                     tolerance: Optional[float] = None) -> CheckReport:
    """检查 Q = q²、P = p/2q 对应的 (f, g)

    (i) Q(υ) = υ²，即 q − iħλf/2 = (q + iħλf/2)²；
    (ii) Q̃(υ) = 1/(2υ) 且 χ = 0。
    """
    tol = tolerance if tolerance is not None else get_settings().tolerances.chi_residual
    qs = require_five_step_domain(q_samples)
    f, g = five_step_data()
    transform = point_ct_forward(f, g, lam, hbar=hbar_value)

    upsilon = transform.upsilon(qs)
    square = np.abs(transform.Q_at(qs) - upsilon ** 2)
    momentum = np.abs(transform.Qtilde_at(qs) - 1 / (2 * upsilon))
    chi = np.abs(transform.chi_at(qs))
    residual = float(max(square.max(), momentum.max(), chi.max()))
    details = {
        "samples": qs.size,
        "square_residual": float(square.max()),
        "momentum_residual": float(momentum.max()),
        "chi_residual": float(chi.max()),
    }
    return CheckReport("five_step", residual <= tol, residual, tol, details)
