"""命令行前端

退出码：0 成功；2 验证未通过 (JSON 中 "pass": false)；1 用法、解析或计算错误。
"""

import argparse
import json
import logging
import sys
from typing import Dict, List, Optional

from config import config
from core import TRANSFORM_KINDS, PsqEngine
from errors import PsqError, UsageError
from point_ct import BRANCHES
from report_engine import CommandResult, ReportEngine

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FAILED = 2

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class PsqArgumentParser(argparse.ArgumentParser):
    """用法错误抛出 UsageError，而不是以退出码 2 结束进程"""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")

    def _parse_optional(self, arg_string: str):
        # 单个 "-" 开头且不是已注册选项的参数 (如 -q、-p^2) 是表达式
        if arg_string.startswith("-") and not arg_string.startswith("--") \
                and arg_string not in self._option_string_actions:
            return None
        return super()._parse_optional(arg_string)


def _common_options() -> argparse.ArgumentParser:
    common = PsqArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text", help="输出格式")
    common.add_argument("--param", action="append", default=[], metavar="NAME[=VALUE]",
                        help="声明参数，可附数值 (可重复)")
    common.add_argument("--hbar", type=float, default=None, help="数值命令使用的 ħ")
    common.add_argument("--tol", type=float, default=None, help="覆盖默认容差")
    common.add_argument("--branch", choices=BRANCHES, default="principal", help="点变换闭式求逆的分支")
    common.add_argument("--guess", default=None, help="点变换反解的初始猜测")
    common.add_argument("--verbose", action="store_true", help="输出调试日志")
    return common


def _add_grid_options(sub: argparse.ArgumentParser, n: int) -> None:
    sub.add_argument("--nq", type=int, default=n)
    sub.add_argument("--np", dest="n_p", type=int, default=n)
    sub.add_argument("--qmin", type=float, default=-6.0)
    sub.add_argument("--qmax", type=float, default=6.0)
    sub.add_argument("--pmin", type=float, default=-6.0)
    sub.add_argument("--pmax", type=float, default=6.0)
    sub.add_argument("--margin", type=float, default=None, help="每侧排除的边界比例")
    sub.add_argument("--out", default=None, help="网格 CSV 输出文件")


def _add_samples(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--qmin", type=float, required=True)
    sub.add_argument("--qmax", type=float, required=True)
    sub.add_argument("--n", type=int, default=16)


def build_parser() -> PsqArgumentParser:
    """构造参数解析器"""
    common = _common_options()
    parser = PsqArgumentParser(prog=config.APP_NAME, description="相空间量子力学的精确代数与数值验证")
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="command")

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        return subparsers.add_parser(name, parents=[common], help=help_text)

    for name, help_text in (("star", "星积 f⋆g"), ("bracket", "Moyal 括号 f⋆g − g⋆f")):
        sub = add(name, help_text)
        sub.add_argument("left")
        sub.add_argument("right")

    add("quantize", "Weyl 量子化").add_argument("expr")
    add("dequantize", "去量子化 (输入为正规序)").add_argument("expr")

    sub = add("transform", "生成函数作用于 u，或由生成函数构造变换对")
    sub.add_argument("--kind", choices=TRANSFORM_KINDS, required=True)
    sub.add_argument("--u")
    sub.add_argument("--f")
    for name in ("lam", "nu", "a", "b", "c", "d", "F"):
        sub.add_argument(f"--{name}")
    sub.add_argument("--order", type=int, default=8)

    sub = add("verify-gf", "检查 F⋆q = Q⋆F 与 F⋆p = P⋆F")
    for name in ("F", "Q", "P"):
        sub.add_argument(f"--{name}", required=True)

    sub = add("canonicity", "检查 {Q,P} = iħ")
    sub.add_argument("--Q", required=True)
    sub.add_argument("--P", required=True)

    sub = add("point-solve", "由 Q(q) 反解点变换的 f")
    sub.add_argument("--Q", required=True)
    sub.add_argument("--m", required=True, help="m = iħλ")
    _add_samples(sub)
    sub.add_argument("--gauge-fix", action="store_true", help="同时求 χ = 0 的 g")

    sub = add("point-forward", "由 (f, g, λ) 构造点变换")
    sub.add_argument("--f", required=True)
    sub.add_argument("--g", default="0")
    sub.add_argument("--lam")
    sub.add_argument("--m")
    _add_samples(sub)

    sub = add("linear", "线性正则变换")
    for name in ("a", "b", "c", "d"):
        sub.add_argument(f"--{name}", required=True)
    sub.add_argument("--u")

    sub = add("intertwine", "缠结关系 L⋆H0 = H1⋆L")
    for name in ("phi", "L", "H0", "H1", "zeromode", "V0"):
        sub.add_argument(f"--{name}")

    sub = add("twopotentials", "两势函数关系")
    for name in ("L", "V0", "V1"):
        sub.add_argument(f"--{name}", required=True)

    sub = add("genvalue", "星本征值残差 H⋆W − E·W")
    sub.add_argument("--H", default="p^2 + q")
    sub.add_argument("--E", default="0")
    sub.add_argument("--W", help="缺省为 Airy 函数")
    _add_grid_options(sub, 256)

    sub = add("airy-delta", "Airy→δ 的傅里叶检查")
    sub.add_argument("--E", default="0")
    sub.add_argument("--modes", type=int, default=256)
    sub.add_argument("--no-operator", action="store_true", help="不施加三次相位算子 (对照)")

    sub = add("grid-star", "采样函数的一般星积")
    sub.add_argument("--F", required=True)
    sub.add_argument("--G", required=True)
    _add_grid_options(sub, 64)

    return parser


def configure_logging(verbose: bool) -> None:
    """在 stderr 上配置根日志，stdout 只输出结果"""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format=LOG_FORMAT,
        stream=sys.stderr,
        force=True,
    )


def parse_params(specs: List[str], hbar: Optional[float]) -> Dict[str, Optional[complex]]:
    """--param name 或 name=value；值按声明顺序求值，可以引用 hbar 与之前的参数"""
    params: Dict[str, Optional[complex]] = {}
    for spec in specs:
        name, _, raw = spec.partition("=")
        name = name.strip()
        if not name:
            raise UsageError(f"无效的参数声明: {spec!r}")
        params[name] = None
        if raw.strip():
            params[name] = PsqEngine(params, hbar).number(raw.strip())
    return params


def _emit(result: CommandResult, fmt: str) -> int:
    if fmt == "json":
        print(result.to_json())
    else:
        rendered = ReportEngine().render(result)
        if not rendered.success:
            print(rendered.error, file=sys.stderr)
            return EXIT_ERROR
        print(rendered.content, end="")
    return EXIT_OK if result.passed else EXIT_FAILED


def _emit_error(command: Optional[str], error: Exception, fmt: str) -> int:
    if isinstance(error, PsqError):
        payload = error.get_dict()
    else:
        payload = {"code": "invalid_value", "message": str(error)}
    if fmt == "json":
        print(json.dumps({"command": command, "error": payload}, ensure_ascii=False))
    else:
        print(f"{config.APP_NAME} {command or ''}: [{payload['code']}] {payload['message']}", file=sys.stderr)
    return EXIT_ERROR


def main(argv: Optional[List[str]] = None) -> int:
    """命令行入口，返回退出码"""
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(e.message, file=sys.stderr)
        return EXIT_ERROR

    configure_logging(args.verbose)
    options = vars(args)
    try:
        params = parse_params(args.param, args.hbar)
        engine = PsqEngine(params, args.hbar, args.tol, args.branch)
        if args.guess is not None:
            engine.guess = engine.number(args.guess)
        result = engine.run(args.command, options)
    except (PsqError, ValueError, ZeroDivisionError) as e:
        logger.debug("%s 失败", args.command, exc_info=True)
        return _emit_error(args.command, e, args.format)
    return _emit(result, args.format)


if __name__ == "__main__":
    sys.exit(main())
