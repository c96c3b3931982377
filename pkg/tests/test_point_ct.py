"""测试点变换求解器"""

import sys
from pathlib import Path

import numpy as np
import pytest

# 将 src 目录添加到模块搜索路径
src_path = str(Path(__file__).parent.parent / "src")
if src_path not in sys.path:
    sys.path.insert(0, src_path)

from errors import DomainError, FlowEscape, SingularDenominator
from intertwine import five_step_verify
from point_ct import (
    flow_A, point_case_iv_predicate, point_ct_forward, point_ct_inverse, point_g_from_f, require_five_step_domain,
)

SAMPLES = np.linspace(0.1, 0.9, 16)
# 1/q 反解得到的 f (λ = −i/2，ħ = 1，即 m = 1/2)
INVERSE_F = "2/(hbar*lam)*sqrt(1 - q**2)"
LAM = -0.5j


def test_inverse_of_reciprocal():
    """Q = 1/q：h² = q² − 1，h = m f/2"""
    table = point_ct_inverse("1/q", 0.5, SAMPLES)
    h = table.columns["h"]
    assert np.allclose(h ** 2, SAMPLES ** 2 - 1, atol=1e-9)
    assert np.allclose(0.5 * table.columns["f"] / 2, h)
    assert table.max_residual() <= 1e-10
    assert len(table.closed_forms) == 2


@pytest.mark.parametrize("Q", ["log(q)", "exp(q)"])
def test_inverse_converges(Q):
    table = point_ct_inverse(Q, 0.5, SAMPLES, closed_form=False)
    assert table.max_residual() <= 1e-10
    assert table.closed_forms == []


def test_inverse_rejects_zero_m():
    with pytest.raises(ValueError):
        point_ct_inverse("1/q", 0, SAMPLES)


def test_gauge_fixing_g():
    """χ = 0 的 g 为 −(1/2λ) ln(1 − q²)，取第一个采样点处为零"""
    table = point_g_from_f(INVERSE_F, LAM, SAMPLES)
    expected = -(np.log(1 - SAMPLES ** 2) - np.log(1 - SAMPLES[0] ** 2)) / (2 * LAM)
    assert np.allclose(table.columns["g"], expected, atol=1e-9)
    assert np.allclose(table.columns["g_closed"], expected, atol=1e-9)
    assert np.max(np.abs(table.columns["chi"])) <= 1e-9


def test_forward_reciprocal_transform():
    """g = 0 时 Q = 1/x、Q̃ = −x²、χ = iħx(1 + x²)/(1 − x²)，x 为像点 υ"""
    transform = point_ct_forward(INVERSE_F, 0, LAM)
    x = transform.upsilon(SAMPLES)
    assert np.allclose(transform.Q_at(SAMPLES), 1 / x, atol=1e-12)
    assert np.allclose(transform.Qtilde_at(SAMPLES), -x ** 2, atol=1e-12)
    assert np.allclose(transform.chi_at(SAMPLES), 1j * x * (1 + x ** 2) / (1 - x ** 2), atol=1e-9)
    assert np.max(transform.canonicity_residual(SAMPLES)) <= 1e-6


def test_forward_table_columns():
    table = point_ct_forward("q**2", 0, m=0.5).table([0.2, 0.4])
    assert set(table.columns) == {"upsilon", "Q", "Qtilde", "chi"}
    assert len(table.rows()) == 2


@pytest.mark.parametrize("branch, sign", [("principal", 1), ("other", -1)])
def test_forward_square_closed_form(branch, sign):
    """f = q²，g = 0：Q = −x + 2(±η − 1)/m，η = (1 + 2mx)^{1/2}，p 的系数为 1/Q'(x)"""
    m = 0.5
    transform = point_ct_forward("q**2", 0, m=m, branch=branch)
    pair = transform.pair()
    xs = np.linspace(0.2, 1.0, 9)
    eta = np.sqrt(1 + 2 * m * xs)
    Q = pair.Q(xs, 0.0, transform.values)
    assert np.allclose(Q, -xs + 2 * (sign * eta - 1) / m, atol=1e-12)
    slope = pair.P(xs, 1.0, transform.values) - pair.P(xs, 0.0, transform.values)
    assert np.allclose(slope, eta / (2 * sign - eta), atol=1e-12)
    if branch == "principal":
        x = transform.upsilon(SAMPLES)
        assert np.allclose(pair.Q(x, 0.0, transform.values), transform.Q_at(SAMPLES), atol=1e-12)


def test_forward_needs_exactly_one_of_lam_and_m():
    with pytest.raises(ValueError):
        point_ct_forward("q", 0, 1.0, m=1.0)
    with pytest.raises(ValueError):
        point_ct_forward("q", 0)


def test_singular_denominator():
    """f = q，m = 2 时 2 − m f' = 0"""
    with pytest.raises(SingularDenominator):
        point_ct_forward("q", 0, m=2).Qtilde_at([0.5])


def test_unknown_branch():
    with pytest.raises(ValueError):
        point_ct_forward("q", 0, m=0.5, branch="third")


def test_flow_of_constant_field():
    q0 = np.array([0.0, 1.0, -2.5])
    assert np.allclose(flow_A("1", 0.75, q0), q0 - 0.75, atol=1e-10)


def test_flow_escape():
    """dq/dt = q² 从 q0 = 2 出发在 t = 1/2 处爆破"""
    with pytest.raises(FlowEscape):
        flow_A("q**2", -1, 2.0)


@pytest.mark.parametrize("f, expected", [
    ("q", lambda m, q0: np.exp(-m) * q0),
    ("q**2", lambda m, q0: q0 / (1 + m * q0)),
])
def test_flow_closed_forms(f, expected):
    """dq/dt = −m f(q)：f = q 给出 e^{−m}q0，f = q² 给出 q0/(1 + m q0)"""
    q0 = np.array([0.2, 0.5, 1.0])
    assert np.allclose(flow_A(f, 0.3, q0), expected(0.3, q0), rtol=1e-9, atol=1e-10)


@pytest.mark.parametrize("m", [0.5, 1.0, 0.5j])
def test_scaling_transform(m):
    """f = q 时 Q = k υ，k = (2 − m)/(2 + m)"""
    transform = point_ct_forward("q", 0, m=m)
    assert np.allclose(transform.Q_at(SAMPLES) / transform.upsilon(SAMPLES), (2 - m) / (2 + m), atol=1e-12)


def test_inverse_then_forward_reproduces_Q():
    """反解得到的每个闭式 f 代回正向构造，Q(υ) = 1/υ"""
    table = point_ct_inverse("1/q", 0.5, SAMPLES)
    for f in table.closed_forms:
        transform = point_ct_forward(f, 0, m=0.5)
        x = transform.upsilon(SAMPLES)
        assert np.allclose(transform.Q_at(SAMPLES), 1 / x, atol=1e-10)


def test_case_iv_predicate():
    assert point_case_iv_predicate("q", m=0.5, q_samples=[0.2, 0.4]).passed
    report = point_case_iv_predicate("q**2", m=0.5, q_samples=[0.2, 0.4])
    assert not report.passed
    assert report.details["g"]


def test_five_step_domain():
    with pytest.raises(DomainError):
        require_five_step_domain([0.0])
    with pytest.raises(DomainError):
        require_five_step_domain([-0.2])


def test_five_step_verify():
    report = five_step_verify(1.0, np.linspace(0.5, 2, 32))
    assert report.passed
    assert report.details["samples"] == 32
