"""测试网格实验室"""

import sys
from pathlib import Path

import numpy as np
import pytest

# 将 src 目录添加到模块搜索路径
src_path = str(Path(__file__).parent.parent / "src")
if src_path not in sys.path:
    sys.path.insert(0, src_path)

from coeffs import I, RING, hbar, p, q
from ct_engine import cubic_gauge_gf, linear_gf
from errors import DegenerateInput, ResourceLimit
from grid_lab import (
    GridFn, airy_to_delta_fourier_check, airy_wigner_grid, general_star_grid, genvalue_residual,
    relation_residual_grid, relative_residual, star_grid_poly, star_poly_grid,
)
from intertwine import airy_intertwiner, intertwine_residual
from models import LinearCT
from phase_algebra import ExpPoly

BOX = (-6.0, 6.0)
SMALL_BOX = (-4.0, 4.0)
CHIRP_BOX = (-3.0, 3.0)


def _gaussian(Q, P):
    return np.exp(-(Q ** 2 + P ** 2))


@pytest.fixture(scope="module")
def airy_grid():
    return airy_wigner_grid(256, 256, BOX, BOX)


def test_airy_star_genvalue(airy_grid):
    """(p² + q)⋆Ai((2/ħ)^{2/3}(q + p²)) = 0"""
    assert genvalue_residual(p ** 2 + q, airy_grid, 0.0) <= 1e-6


def test_airy_genvalue_negative_control(airy_grid):
    assert genvalue_residual(p ** 2 + q, airy_grid, 0.5) > 1e-2
    assert genvalue_residual(p ** 2 - q, airy_grid, 0.0) > 1e-2


def test_star_with_polynomial_matches_exact():
    """q⋆W = (q − iħp)W，W⋆q = (q + iħp)W"""
    W = GridFn.sample(_gaussian, 64, 64, BOX, BOX)
    Q, P = W.mesh()
    assert np.allclose(star_poly_grid(q, W).values, (Q - 1j * P) * W.values, atol=1e-10)
    assert np.allclose(star_grid_poly(W, q).values, (Q + 1j * P) * W.values, atol=1e-10)
    assert np.allclose(star_poly_grid(RING.zero, W).values, 0)


RELATION_CASES = [
    ("interchange", linear_gf(LinearCT.interchange()), q, p),
    ("cubic_gauge", cubic_gauge_gf(1), p, p + q ** 2),
    ("susy", p - I * q, p ** 2 + q ** 2 - hbar, p ** 2 + q ** 2 + hbar),
]


@pytest.mark.parametrize("name, A, X, Y", RELATION_CASES)
def test_relation_residual(name, A, X, Y):
    grid = GridFn.from_phase_poly(A, 256, 256, SMALL_BOX, SMALL_BOX)
    assert relation_residual_grid(grid, X, Y) <= 1e-8


def test_relation_negative_controls():
    A = GridFn.from_phase_poly(linear_gf(LinearCT.interchange()), 256, 256, SMALL_BOX, SMALL_BOX)
    assert relation_residual_grid(A, q, -p) > 1e-2
    A = GridFn.from_phase_poly(cubic_gauge_gf(1), 256, 256, SMALL_BOX, SMALL_BOX)
    assert relation_residual_grid(A, p, p - q ** 2) > 1e-2


def test_airy_intertwiner_relation():
    """e^{−2i(qp + 4p³/3)/ħ} 联系 p² + q 与 p²；三次相位要求较小的窗口"""
    A = GridFn.from_phase_poly(airy_intertwiner(), 256, 256, CHIRP_BOX, CHIRP_BOX)
    assert relation_residual_grid(A, p ** 2 + q, p ** 2) <= 1e-6
    assert relation_residual_grid(A, p ** 2, p ** 2 + q) > 1e-2


@pytest.mark.parametrize("A, box, X, Y, n", [
    (linear_gf(LinearCT.interchange()), SMALL_BOX, q, p, 128),
    (airy_intertwiner(), CHIRP_BOX, p ** 2 + q, p ** 2, 256),
])
def test_spectral_convergence(A, box, X, Y, n):
    """分辨率加倍，残差至少缩小 4 倍"""
    coarse = relation_residual_grid(GridFn.from_phase_poly(A, n, n, box, box), X, Y)
    fine = relation_residual_grid(GridFn.from_phase_poly(A, 2 * n, 2 * n, box, box), X, Y)
    assert fine * 4 <= coarse


def test_relation_residual_scale_invariant():
    A = GridFn.from_phase_poly(linear_gf(LinearCT.interchange()), 128, 128, SMALL_BOX, SMALL_BOX)
    scaled = A * (3 - 2j)
    for X, Y in ((q, -p), (p, q)):
        assert relation_residual_grid(scaled, X, Y) == pytest.approx(relation_residual_grid(A, X, Y), rel=1e-9)


@pytest.mark.parametrize("A, X, Y", [
    (linear_gf(LinearCT.interchange()), q, p),
    (linear_gf(LinearCT.interchange()), q, -p),
    (cubic_gauge_gf(1), p, p + q ** 2),
    (cubic_gauge_gf(1), p, p - q ** 2),
    (p - I * q, p ** 2 + q ** 2 - hbar, p ** 2 + q ** 2 + hbar),
    (p - I * q, p ** 2 + q ** 2 + hbar, p ** 2 + q ** 2 - hbar),
])
def test_grid_verdict_agrees_with_exact(A, X, Y):
    exact_holds = ExpPoly.of(intertwine_residual(A, X, Y)).is_zero()
    grid = GridFn.from_phase_poly(A, 256, 256, SMALL_BOX, SMALL_BOX)
    assert (relation_residual_grid(grid, X, Y) <= 1e-6) == exact_holds


def test_harmonic_ground_state():
    """(p² + q²)⋆e^{−(q² + p²)/ħ} = ħ e^{−(q² + p²)/ħ}"""
    W = GridFn.sample(_gaussian, 128, 128, BOX, BOX)
    assert genvalue_residual(p ** 2 + q ** 2, W, 1.0) <= 1e-6
    assert genvalue_residual(p ** 2 + q ** 2, W, 2.0) > 1e-2


def test_general_star_idempotent():
    """ħ = 1 时 2e^{−(q² + p²)} 是星幂等元"""
    g = GridFn.sample(lambda Q, P: 2 * _gaussian(Q, P), 64, 64, BOX, BOX)
    assert relative_residual(general_star_grid(g, g) - g, g) <= 1e-8


def test_general_star_depends_on_hbar():
    g = GridFn.sample(lambda Q, P: 2 * _gaussian(Q, P), 64, 64, BOX, BOX, hbar=0.5)
    assert relative_residual(general_star_grid(g, g) - g, g) > 1e-2


def test_general_star_resource_limit(monkeypatch):
    monkeypatch.setenv("PSQ_MAX_GRID", "100")
    g = GridFn.sample(_gaussian, 16, 16, BOX, BOX)
    with pytest.raises(ResourceLimit):
        general_star_grid(g, g)


def test_grid_mismatch():
    a = GridFn.sample(_gaussian, 16, 16, BOX, BOX)
    b = GridFn.sample(_gaussian, 16, 32, BOX, BOX)
    with pytest.raises(ValueError):
        a - b


def test_csv_file(tmp_path):
    W = GridFn.sample(lambda Q, P: (Q + 1j * P) * _gaussian(Q, P), 8, 6, BOX, SMALL_BOX, hbar=0.5)
    path = W.to_csv(tmp_path / "grid.csv")
    loaded = GridFn.from_csv(path)
    assert loaded.same_grid(W)
    assert np.array_equal(loaded.values, W.values)


def test_csv_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("# 8 6\n0,0,1,0\n", encoding="utf-8")
    with pytest.raises(ValueError):
        GridFn.from_csv(path)


def test_airy_delta_check():
    report = airy_to_delta_fourier_check()
    assert report.passed
    assert report.details["band_modes"] >= 8


def test_airy_delta_without_operator_fails():
    report = airy_to_delta_fourier_check(apply_operator=False)
    assert not report.passed


def test_zero_reference_warns():
    zero = GridFn(np.zeros((8, 8)), BOX, BOX)
    with pytest.warns(DegenerateInput):
        assert relative_residual(zero, zero) == 0.0
