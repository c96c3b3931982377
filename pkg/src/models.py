"""数据模型

精确层与数值层共用的结果对象。get_dict() 给出可序列化的字典，
供命令行的 JSON 输出和模板渲染使用。
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from sympy.polys.rings import PolyElement

from coeffs import RING, format_poly, as_coeff, coeff_inverse, prune, q, p
from errors import NotSymplectic


def describe(value: Any) -> Any:
    """把精确对象、数组等转换为可序列化的值"""
    if isinstance(value, PolyElement):
        return format_poly(value)
    if isinstance(value, (np.ndarray, list, tuple)):
        return [describe(v) for v in value]
    if isinstance(value, (complex, np.complexfloating)):
        value = complex(value)
        if value.imag == 0:
            return value.real
        return {"re": value.real, "im": value.imag}
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.integer):
        return int(value)
    if hasattr(value, "get_dict"):
        return value.get_dict()
    if isinstance(value, (int, float, str, bool)) or value is None:
        return value
    return str(value)


class GFKind(Enum):
    """生成函数种类"""

    GAUGE = "gauge"
    POINT_ORDINARY = "point_ordinary"
    LINEAR = "linear"
    INTERCHANGE = "interchange"
    CUBIC_GAUGE = "cubic_gauge"
    EXPLICIT = "explicit"


@dataclass
class CanonicalPair:
    """正则变换 (Q, P)

    分量可以是相空间多项式、ExpPoly 或 ClosedFormFn。
    """

    Q: Any
    P: Any
    label: str = ""

    def is_polynomial(self) -> bool:
        return isinstance(self.Q, PolyElement) and isinstance(self.P, PolyElement)

    def get_dict(self) -> Dict[str, Any]:
        """转换为字典格式"""
        return {"Q": describe(self.Q), "P": describe(self.P), "label": self.label}


@dataclass(frozen=True)
class LinearCT:
    """线性正则变换 (q, p) → (aq + bp, cq + dp)"""

    a: PolyElement
    b: PolyElement
    c: PolyElement
    d: PolyElement

    @classmethod
    def of(cls, a, b, c, d) -> "LinearCT":
        """由 int / Fraction / 参数名 / 系数构造"""
        return cls(as_coeff(a), as_coeff(b), as_coeff(c), as_coeff(d))

    @classmethod
    def identity(cls) -> "LinearCT":
        return cls.of(1, 0, 0, 1)

    @classmethod
    def interchange(cls) -> "LinearCT":
        return cls.of(0, 1, -1, 0)

    @classmethod
    def scaling(cls, k) -> "LinearCT":
        k = as_coeff(k)
        return cls(k, RING.zero, RING.zero, coeff_inverse(k))

    def det(self) -> PolyElement:
        return self.a * self.d - self.b * self.c

    def is_symplectic(self) -> bool:
        return prune(self.det()) == RING.one

    def validate(self) -> tuple[bool, str]:
        """验证行列式"""
        if not self.is_symplectic():
            return False, f"ad - bc = {format_poly(self.det())}，应为 1"
        return True, ""

    def require_symplectic(self) -> None:
        ok, message = self.validate()
        if not ok:
            raise NotSymplectic(message)

    def __matmul__(self, other: "LinearCT") -> "LinearCT":
        """矩阵乘积 self·other"""
        return LinearCT(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def then(self, other: "LinearCT") -> "LinearCT":
        """先作用 self 再作用 other 时的等效变换 (代换复合顺序)"""
        return self @ other

    def inverse(self) -> "LinearCT":
        """辛矩阵的逆 (d, −b; −c, a)"""
        self.require_symplectic()
        return LinearCT(self.d, -self.b, -self.c, self.a)

    def images(self) -> Tuple[PolyElement, PolyElement]:
        """(aq + bp, cq + dp)"""
        return self.a * q + self.b * p, self.c * q + self.d * p

    def get_dict(self) -> Dict[str, Any]:
        """转换为字典格式"""
        return {k: format_poly(getattr(self, k)) for k in ("a", "b", "c", "d")}


@dataclass(frozen=True)
class LinearDecomposition:
    """三因子分解参数 (α, β, k)"""

    alpha: PolyElement
    beta: PolyElement
    k: PolyElement

    def get_dict(self) -> Dict[str, Any]:
        return {"alpha": format_poly(self.alpha), "beta": format_poly(self.beta), "k": format_poly(self.k)}


@dataclass
class LieSeries:
    """逐项报告的级数 Σ_k terms[k]

    exact 为 True 表示在 order 之前已出现零项，级数精确终止。
    """

    terms: List[Any]
    order: int
    exact: bool = False

    def total(self) -> Any:
        result = RING.zero
        for t in self.terms:
            result = t + result if not isinstance(t, PolyElement) else result + t
        return result

    def get_dict(self) -> Dict[str, Any]:
        return {
            "terms": [describe(t) for t in self.terms],
            "order": self.order,
            "exact": self.exact,
            "total": describe(self.total()),
        }


@dataclass
class PotentialPair:
    """势函数对 V0、V1 与超势 φ"""

    V0: Any
    V1: Any
    phi: Optional[Any] = None

    def get_dict(self) -> Dict[str, Any]:
        return {"V0": describe(self.V0), "V1": describe(self.V1), "phi": describe(self.phi)}


@dataclass
class Intertwiner:
    """缠结函数 L"""

    L: Any

    def get_dict(self) -> Dict[str, Any]:
        return {"L": describe(self.L)}


@dataclass
class CheckReport:
    """验证结果

    residual 可以是精确元素 (精确层) 或浮点数 (数值层)。
    """

    name: str
    passed: bool
    residual: Any = 0.0
    tolerance: float = 0.0
    details: Dict[str, Any] = field(default_factory=dict)

    def get_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "residual": describe(self.residual),
            "tolerance": self.tolerance,
            "details": {k: describe(v) for k, v in self.details.items()},
        }


@dataclass
class SampleTable:
    """采样表：q 点、数值列与逐点残差"""

    q: np.ndarray
    columns: Dict[str, np.ndarray]
    residuals: np.ndarray
    closed_forms: List[Any] = field(default_factory=list)

    def max_residual(self) -> float:
        if self.residuals.size == 0:
            return 0.0
        return float(np.max(np.abs(self.residuals)))

    def rows(self) -> List[Dict[str, Any]]:
        """逐行数据，用于文本表格"""
        result = []
        for i, qv in enumerate(self.q):
            row = {"q": describe(qv)}
            for name, col in self.columns.items():
                row[name] = describe(col[i])
            row["residual"] = float(abs(self.residuals[i]))
            result.append(row)
        return result

    def get_dict(self) -> Dict[str, Any]:
        return {
            "q": describe(self.q),
            "columns": {k: describe(v) for k, v in self.columns.items()},
            "residuals": [float(abs(r)) for r in self.residuals],
            "closed_forms": [describe(c) for c in self.closed_forms],
        }


@dataclass
class RenderResult:
    """渲染结果"""

    success: bool
    content: str = ""
    error: str = ""
    template_name: str = ""
