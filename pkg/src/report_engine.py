"""报告引擎 - 封装 Jinja2 文本渲染和 JSON 结果格式"""

import logging
from pathlib import Path
from typing import Any, Dict, Optional

import jinja2
from pydantic import BaseModel, ConfigDict, Field

from config import config
from models import RenderResult

logger = logging.getLogger(__name__)

# 结果形态 -> 模板文件
TEMPLATES = {
    "exact": "exact.txt.j2",
    "residual": "residual.txt.j2",
    "table": "table.txt.j2",
    "pair": "pair.txt.j2",
}


class CommandResult(BaseModel):
    """一次命令的结果

    JSON 字段固定为 command、inputs、result、residuals、tolerance、pass。
    """

    model_config = ConfigDict(populate_by_name=True)

    command: str
    inputs: Dict[str, Any] = Field(default_factory=dict)
    result: Dict[str, Any] = Field(default_factory=dict)
    residuals: Dict[str, Any] = Field(default_factory=dict)
    tolerance: Optional[float] = None
    passed: bool = Field(True, alias="pass")
    # 文本输出使用的模板，不进入 JSON
    shape: str = Field("exact", exclude=True)

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True)


class ReportEngine:
    """报告引擎"""

    def __init__(self, templates_dir: Optional[Path] = None):
        self.templates_dir = Path(templates_dir or config.TEMPLATES_DIR)
        self.jinja_env = jinja2.Environment(
            loader=jinja2.FileSystemLoader([str(self.templates_dir)]),
            trim_blocks=True,
            lstrip_blocks=True,
            keep_trailing_newline=True,
            autoescape=False,
            undefined=jinja2.StrictUndefined,
        )

        # 添加自定义过滤器
        self.jinja_env.filters["format_residual"] = self._format_residual
        self.jinja_env.filters["format_number"] = self._format_number
        self.jinja_env.filters["pass_mark"] = self._pass_mark

    def _format_residual(self, value: Any) -> str:
        """浮点残差用 3 位科学计数法，精确残差原样输出"""
        if isinstance(value, bool) or value is None:
            return str(value)
        if isinstance(value, (int, float)):
            return f"{float(value):.3e}"
        return str(value)

    def _format_number(self, value: Any, digits: int = 12) -> str:
        """格式化表格中的数值，复数按 re+imj 输出"""
        if isinstance(value, dict) and set(value) == {"re", "im"}:
            re, im = value["re"], value["im"]
            sign = "-" if im < 0 else "+"
            return f"{re:.{digits}g}{sign}{abs(im):.{digits}g}j"
        try:
            return f"{float(value):.{digits}g}"
        except (ValueError, TypeError):
            return str(value)

    def _pass_mark(self, value: bool) -> str:
        return "PASS" if value else "FAIL"

    def render(self, result: CommandResult) -> RenderResult:
        """按结果形态渲染文本"""
        template_name = TEMPLATES.get(result.shape, TEMPLATES["exact"])
        try:
            tpl = self.jinja_env.get_template(template_name)
            content = tpl.render(**result.model_dump(by_alias=False))
            return RenderResult(success=True, content=content, template_name=template_name)
        except jinja2.TemplateError as e:
            logger.error("渲染 %s 失败: %s", template_name, e)
            return RenderResult(success=False, error=f"渲染失败: {str(e)}", template_name=template_name)
