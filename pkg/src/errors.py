"""错误定义

所有库错误都继承 PsqError，并带有稳定的机器可读代码 (code)，
命令行在 JSON 模式下原样输出该代码。
"""

from typing import Iterable, Optional


class PsqError(Exception):
    """库错误基类"""

    code = "psq_error"

    def __init__(self, message: str = ""):
        super().__init__(message or self.__class__.__doc__ or self.code)
        self.message = message or (self.__class__.__doc__ or self.code)

    def get_dict(self) -> dict:
        """转换为字典格式，用于 JSON 输出"""
        return {"code": self.code, "message": self.message}


class UnsupportedProduct(PsqError):
    """两个指数多项式之间的星积没有精确闭式"""

    code = "unsupported_product"


class NonInvertibleConstantTerm(PsqError):
    """常数项为零或在系数环中不可逆"""

    code = "non_invertible_constant_term"


class NotSymplectic(PsqError):
    """线性变换行列式不等于 1"""

    code = "not_symplectic"


class SingularCayley(PsqError):
    """a+d+2 = 0，线性生成函数不存在"""

    code = "singular_cayley"


class DegenerateDecomposition(PsqError):
    """d = 0，三因子分解不适用"""

    code = "degenerate_decomposition"


class NotCanonical(PsqError):
    """生成的变换对不满足 {Q,P} = iħ"""

    code = "not_canonical"


class MixedPhase(PsqError):
    """相位不满足单变量或相同相位的要求"""

    code = "mixed_phase"


class UnsupportedVariant(PsqError):
    """该生成函数类型没有精确的作用公式"""

    code = "unsupported_variant"


class SingularDenominator(PsqError):
    """点变换分母 2 - iħλ f' 在采样点处为零"""

    code = "singular_denominator"


class SingularIntegrand(PsqError):
    """g 的积分被积函数在采样点处奇异"""

    code = "singular_integrand"


class NoConvergence(PsqError):
    """牛顿迭代未收敛"""

    code = "no_convergence"

    def __init__(self, point: complex, residual: float, message: str = ""):
        self.point = point
        self.residual = residual
        super().__init__(message or f"在 q={point} 处未收敛，残差 {residual:.3e}")

    def get_dict(self) -> dict:
        data = super().get_dict()
        data["point"] = str(self.point)
        data["residual"] = float(self.residual)
        return data


class FlowEscape(PsqError):
    """流在 t=1 之前发散"""

    code = "flow_escape"


class ZeroNode(PsqError):
    """零模函数在采样点处为零"""

    code = "zero_node"


class DomainError(PsqError):
    """采样点不在定义域内"""

    code = "domain_error"


class OutOfRange(PsqError):
    """自变量超出 Airy 函数工作范围"""

    code = "out_of_range"


class UnderResolved(PsqError):
    """可分辨频带太窄"""

    code = "under_resolved"


class ResourceLimit(PsqError):
    """网格尺寸超过配置上限"""

    code = "resource_limit"


class UnknownSymbol(PsqError):
    """未声明的符号"""

    code = "unknown_symbol"

    def __init__(self, name: str, message: str = ""):
        self.name = name
        super().__init__(message or f"未声明的符号: {name}")


class ExprSyntaxError(PsqError):
    """表达式语法错误，带行列位置和期望的记号集合"""

    code = "syntax_error"

    def __init__(self, line: int, col: int, expected: Iterable[str], found: Optional[str] = None):
        self.line = line
        self.col = col
        self.expected = sorted(set(expected))
        self.found = found
        got = f"，实际为 {found!r}" if found is not None else ""
        super().__init__(f"第 {line} 行第 {col} 列: 期望 {', '.join(self.expected)}{got}")

    def get_dict(self) -> dict:
        data = super().get_dict()
        data.update({"line": self.line, "col": self.col, "expected": self.expected})
        return data


class DegenerateInput(UserWarning):
    """输入退化 (例如全零网格函数)，按约定返回零残差"""


class UsageError(PsqError):
    """命令行参数错误"""

    code = "usage_error"
