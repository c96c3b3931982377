"""测试报告引擎"""

import json
import sys
from pathlib import Path

import pytest

# 将 src 目录添加到模块搜索路径
src_path = str(Path(__file__).parent.parent / "src")
if src_path not in sys.path:
    sys.path.insert(0, src_path)

from report_engine import CommandResult, ReportEngine


@pytest.fixture
def engine():
    return ReportEngine()


def test_json_fields():
    result = CommandResult(command="star", inputs={"left": "p", "right": "q"}, result={"value": "q*p"})
    data = json.loads(result.to_json())
    assert list(data) == ["command", "inputs", "result", "residuals", "tolerance", "pass"]
    assert data["pass"] is True
    assert data["tolerance"] is None


def test_pass_alias():
    result = CommandResult.model_validate({"command": "canonicity", "pass": False})
    assert result.passed is False


def test_render_single_value(engine):
    rendered = engine.render(CommandResult(command="star", result={"value": "q*p - (1/2)*i*hbar"}))
    assert rendered.success
    assert rendered.content == "q*p - (1/2)*i*hbar\n"
    assert rendered.template_name == "exact.txt.j2"


def test_render_residual(engine):
    result = CommandResult(command="genvalue", result={"shape": [8, 8]}, residuals={"genvalue": 2.5e-7},
                           tolerance=1e-6, shape="residual")
    content = engine.render(result).content
    assert content.startswith("genvalue: PASS")
    assert "genvalue = 2.500e-07" in content
    assert "tolerance = 1.000e-06" in content


def test_render_failed_exact_residual(engine):
    result = CommandResult(command="canonicity", residuals={"canonicity": "i*hbar"}, tolerance=0.0,
                           passed=False, shape="residual")
    content = engine.render(result).content
    assert "canonicity: FAIL" in content
    assert "canonicity = i*hbar" in content


def test_render_table(engine):
    result = CommandResult(
        command="point-solve",
        result={"columns": ["q", "f"], "rows": [{"q": 0.5, "f": {"re": 1.0, "im": 2.0}}], "closed_forms": ["2/q"]},
        residuals={"implicit": 1e-12}, tolerance=1e-10, shape="table",
    )
    content = engine.render(result).content
    assert "closed form: 2/q" in content
    assert "q\tf" in content
    assert "0.5\t1+2j" in content


def test_render_pair(engine):
    result = CommandResult(command="linear", result={"Q": "2*q + p", "P": "q + p", "det": "1"}, shape="pair")
    content = engine.render(result).content
    assert content.splitlines()[:3] == ["Q = 2*q + p", "P = q + p", "det = 1"]


def test_missing_template_directory(tmp_path):
    rendered = ReportEngine(tmp_path).render(CommandResult(command="star", result={"value": "q"}))
    assert not rendered.success
    assert "渲染失败" in rendered.error


def test_number_filter(engine):
    assert engine._format_number({"re": 1.0, "im": -2.0}) == "1-2j"
    assert engine._format_number("n/a") == "n/a"
    assert engine._format_residual("0") == "0"
