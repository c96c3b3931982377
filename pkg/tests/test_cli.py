"""命令行测试

通过 main(argv) 调用，检查标准输出与退出码。
"""

import json
import sys
from pathlib import Path

import pytest

# 将 src 目录添加到模块搜索路径
src_path = str(Path(__file__).parent.parent / "src")
if src_path not in sys.path:
    sys.path.insert(0, src_path)

from cli import EXIT_ERROR, EXIT_FAILED, EXIT_OK, build_parser, main, parse_params
from coeffs import I, hbar, p, q, symbol
from errors import UsageError
from expr_parser import parse_exact

GOLDEN_DIR = Path(__file__).parent / "golden"


def run_json(capsys, *argv):
    """以 JSON 格式运行，返回 (退出码, 解析后的输出)"""
    code = main([*argv, "--format", "json"])
    out = capsys.readouterr().out
    return code, json.loads(out)


@pytest.mark.parametrize("golden, argv", [
    ("star_p_q.json", ["star", "p", "q"]),
    ("bracket_q_p.json", ["bracket", "q", "p"]),
    ("canonicity_q_p.json", ["canonicity", "--Q", "q", "--P", "p"]),
    ("quantize_qp.json", ["quantize", "q*p"]),
])
def test_golden_outputs(capsys, golden, argv):
    code, data = run_json(capsys, *argv)
    expected = json.loads((GOLDEN_DIR / golden).read_text(encoding="utf-8"))
    assert data == expected
    assert code == EXIT_OK


def test_text_output(capsys):
    assert main(["star", "p", "q"]) == EXIT_OK
    assert capsys.readouterr().out == "q*p - (1/2)*i*hbar\n"


def test_failed_check_exit_code(capsys):
    """{q, 2p} = 2iħ，残差 iħ"""
    code, data = run_json(capsys, "canonicity", "--Q", "q", "--P", "2*p")
    assert code == EXIT_FAILED
    assert data["pass"] is False
    assert data["residuals"]["canonicity"] == "i*hbar"


def test_declared_parameter(capsys):
    code, data = run_json(capsys, "star", "lam*q", "p", "--param", "lam")
    assert code == EXIT_OK
    lam = symbol("lam")
    assert parse_exact(data["result"]["value"], ["lam"]) == lam * q * p + I * hbar * lam / 2


@pytest.mark.parametrize("argv", [["star", "p"], [], ["frobnicate"], ["linear", "--a", "1"]])
def test_usage_errors(capsys, argv):
    assert main(argv) == EXIT_ERROR
    assert capsys.readouterr().err


def test_unknown_symbol_json_error(capsys):
    code, data = run_json(capsys, "star", "zeta", "q")
    assert code == EXIT_ERROR
    assert data["command"] == "star"
    assert data["error"]["code"] == "unknown_symbol"


def test_syntax_error_json(capsys):
    code, data = run_json(capsys, "star", "q + * p", "q")
    assert code == EXIT_ERROR
    assert data["error"]["code"] == "syntax_error"
    assert (data["error"]["line"], data["error"]["col"]) == (1, 5)


def test_parse_params():
    params = parse_params(["lam", "nu=2", "mu=nu*hbar"], 0.5)
    assert params == {"lam": None, "nu": 2, "mu": 1}
    with pytest.raises(UsageError):
        parse_params(["=1"], None)


def test_parser_defaults():
    args = build_parser().parse_args(["genvalue"])
    assert (args.H, args.E, args.nq, args.n_p) == ("p^2 + q", "0", 256, 256)
    args = build_parser().parse_args(["grid-star", "--F", "q", "--G", "p", "--np", "32"])
    assert (args.nq, args.n_p) == (64, 32)


# ---------------------------------------------------------------------------
# 精确层子命令
# ---------------------------------------------------------------------------

def test_dequantize(capsys):
    code, data = run_json(capsys, "dequantize", "qh*ph")
    assert code == EXIT_OK
    assert parse_exact(data["result"]["value"]) == q * p + I * hbar / 2
    assert data["residuals"]["round_trip"] == "0"


def test_transform_gauge(capsys):
    code, data = run_json(capsys, "transform", "--kind", "gauge", "--f", "q^2", "--lam", "lam", "--u", "p",
                          "--param", "lam")
    assert code == EXIT_OK
    assert parse_exact(data["result"]["value"], ["lam"]) == p + 2 * I * hbar * symbol("lam") * q
    assert data["residuals"] == {"gf_q": "0", "gf_p": "0"}


def test_transform_interchange(capsys):
    code, data = run_json(capsys, "transform", "--kind", "interchange", "--u", "q^2 + p")
    assert code == EXIT_OK
    assert parse_exact(data["result"]["value"]) == p ** 2 - q


def test_transform_from_generating_function(capsys):
    code, data = run_json(capsys, "transform", "--kind", "gf", "--F", "exp(lam*q^2)", "--param", "lam")
    assert code == EXIT_OK
    assert data["result"]["Q"] == "q"
    assert data["residuals"]["canonicity"] == "0"


def test_transform_lie_series(capsys):
    code, data = run_json(capsys, "transform", "--kind", "lie", "--f", "p^2", "--lam", "lam", "--u", "q",
                          "--param", "lam")
    assert code == EXIT_OK
    assert data["result"]["exact"] is True
    assert parse_exact(data["result"]["total"], ["lam"]) == q - 2 * I * hbar * symbol("lam") * p


def test_leading_minus_expression_values(capsys):
    """-q、-p 作为选项值或位置参数时按表达式解析"""
    code, data = run_json(capsys, "verify-gf", "--F", "exp(i*(q^2 + p^2)/hbar)", "--Q", "p", "--P", "-q")
    assert code == EXIT_OK
    assert data["residuals"] == {"q": "0", "p": "0"}
    code, data = run_json(capsys, "canonicity", "--Q", "-p", "--P", "q")
    assert code == EXIT_OK
    assert data["pass"] is True
    code, data = run_json(capsys, "star", "-q", "p")
    assert code == EXIT_OK
    assert parse_exact(data["result"]["value"]) == -(q * p + I * hbar / 2)


def test_verify_gf(capsys):
    code, data = run_json(capsys, "verify-gf", "--F", "exp(i*(q^2 + p^2)/hbar)", "--Q", "p", "--P", "-q")
    assert code == EXIT_OK
    assert data["residuals"] == {"q": "0", "p": "0"}
    code, _ = run_json(capsys, "verify-gf", "--F", "exp(i*(q^2 + p^2)/hbar)", "--Q", "p", "--P", "q")
    assert code == EXIT_FAILED


def test_linear(capsys):
    code, data = run_json(capsys, "linear", "--a", "2", "--b", "1", "--c", "1", "--d", "1", "--u", "q")
    assert code == EXIT_OK
    assert data["residuals"]["decomposition"] == "0"
    assert parse_exact(data["result"]["value"]) == 2 * q + p


def test_linear_interchange_has_no_decomposition(capsys):
    code, data = run_json(capsys, "linear", "--a", "0", "--b", "1", "--c", "-1", "--d", "0")
    assert code == EXIT_OK
    assert "decomposition" in data["result"]
    assert "decomposition" not in data["residuals"]


def test_linear_not_symplectic(capsys):
    code, data = run_json(capsys, "linear", "--a", "2", "--b", "0", "--c", "0", "--d", "2")
    assert code == EXIT_ERROR
    assert data["error"]["code"] == "not_symplectic"


def test_intertwine_superpotential(capsys):
    code, data = run_json(capsys, "intertwine", "--phi", "q")
    assert code == EXIT_OK
    assert set(data["residuals"].values()) == {"0"}
    assert parse_exact(data["result"]["V0"]) == q ** 2 - hbar


def test_intertwine_zero_mode(capsys):
    code, data = run_json(capsys, "intertwine", "--zeromode", "exp(-q^2/(2*hbar))")
    assert code == EXIT_OK
    assert data["result"]["phi"] == "q"


def test_intertwine_direct(capsys):
    code, _ = run_json(capsys, "intertwine", "--L", "p - i*q", "--H0", "p^2 + q^2 - hbar", "--H1",
                       "p^2 + q^2 + hbar")
    assert code == EXIT_OK
    assert main(["intertwine"]) == EXIT_ERROR


def test_twopotentials(capsys):
    airy = "exp(-2*i*(q*p + 4*p^3/3)/hbar)"
    code, _ = run_json(capsys, "twopotentials", "--L", airy, "--V0", "q", "--V1", "0")
    assert code == EXIT_OK
    code, _ = run_json(capsys, "twopotentials", "--L", airy, "--V0", "0", "--V1", "q")
    assert code == EXIT_FAILED


# ---------------------------------------------------------------------------
# 数值子命令
# ---------------------------------------------------------------------------

def test_point_solve(capsys):
    code, data = run_json(capsys, "point-solve", "--Q", "1/q", "--m", "0.5", "--qmin", "0.1", "--qmax", "0.9",
                          "--n", "8", "--gauge-fix")
    assert code == EXIT_OK
    assert len(data["result"]["rows"]) == 8
    assert data["result"]["columns"] == ["q", "f", "g", "chi", "residual"]
    assert data["residuals"]["implicit"] <= 1e-10
    assert data["residuals"]["closed_form"] <= 1e-8


def test_point_forward(capsys):
    code, data = run_json(capsys, "point-forward", "--f", "q^2", "--m", "0.5", "--qmin", "0.1", "--qmax", "0.9",
                          "--n", "5")
    assert code == EXIT_OK
    assert len(data["result"]["rows"]) == 5
    assert len(data["result"]["closed_forms"]) == 2


def test_point_forward_needs_lam_or_m(capsys):
    code, data = run_json(capsys, "point-forward", "--f", "q^2", "--qmin", "0.1", "--qmax", "0.9")
    assert code == EXIT_ERROR
    assert data["error"]["code"] == "usage_error"


def test_airy_delta(capsys):
    code, data = run_json(capsys, "airy-delta")
    assert code == EXIT_OK
    assert data["residuals"]["deviation"] <= 1e-6
    code, _ = run_json(capsys, "airy-delta", "--no-operator")
    assert code == EXIT_FAILED


def test_genvalue(capsys):
    code, data = run_json(capsys, "genvalue")
    assert code == EXIT_OK
    assert data["result"]["shape"] == [256, 256]
    code, _ = run_json(capsys, "genvalue", "--E", "1")
    assert code == EXIT_OK
    harmonic = ("genvalue", "--H", "p^2 + q^2", "--W", "exp(-(q^2 + p^2))", "--nq", "128", "--np", "128")
    code, data = run_json(capsys, *harmonic, "--E", "1")
    assert code == EXIT_OK
    code, data = run_json(capsys, *harmonic, "--E", "2")
    assert code == EXIT_FAILED
    assert data["pass"] is False


def test_grid_star_writes_csv(capsys, tmp_path):
    out = tmp_path / "product.csv"
    code, data = run_json(capsys, "grid-star", "--F", "2*exp(-(q^2 + p^2))", "--G", "2*exp(-(q^2 + p^2))",
                          "--nq", "32", "--np", "32", "--out", str(out))
    assert code == EXIT_OK
    assert out.exists()
    assert data["result"]["max_abs"] == pytest.approx(2.0, rel=1e-3)


def test_exit_code_matches_pass_flag(capsys):
    for argv in (["canonicity", "--Q", "q", "--P", "p"], ["canonicity", "--Q", "q", "--P", "3*p"]):
        code, data = run_json(capsys, *argv)
        assert code == (EXIT_OK if data["pass"] else EXIT_FAILED)
