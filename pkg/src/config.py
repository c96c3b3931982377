"""配置管理

路径常量沿用 Config 类；数值设置 (容差、网格上限、Airy 切换点、
求解器参数) 保存在 data/config/settings.yaml，由 Pydantic 模型校验。
"""

import logging
import os
from pathlib import Path
from typing import Optional

import yaml
from pydantic import BaseModel, Field, ValidationError

logger = logging.getLogger(__name__)


class Config:
    """全局路径配置"""

    # 目录路径
    ROOT = Path(__file__).parent.parent if Path(__file__).parent.name == "src" else Path(__file__).parent
    DATA_ROOT = ROOT / "data"
    CONFIG_DIR = DATA_ROOT / "config"
    TEMPLATES_DIR = DATA_ROOT / "templates"
    SETTINGS_FILE = CONFIG_DIR / "settings.yaml"

    APP_NAME = "psq"

    # 环境变量
    ENV_MAX_GRID = "PSQ_MAX_GRID"
    ENV_SETTINGS = "PSQ_SETTINGS"

    @classmethod
    def settings_file(cls) -> Path:
        """当前生效的设置文件路径"""
        override = os.environ.get(cls.ENV_SETTINGS)
        return Path(override) if override else cls.SETTINGS_FILE


class Tolerances(BaseModel):
    """各类检查的容差"""

    exact_zero: float = 0.0
    point_residual: float = 1e-10
    point_g: float = 1e-9
    chi_residual: float = 1e-9
    case_iv: float = 1e-9
    riccati: float = 1e-10
    flow: float = 1e-10
    genvalue: float = 1e-6
    relation: float = 1e-6
    airy_delta: float = 1e-6
    canonicity_numeric: float = 1e-6


class GridSettings(BaseModel):
    """网格实验室设置"""

    margin: float = Field(0.15, ge=0.0, lt=0.5)
    max_cells: int = Field(128 * 128, gt=0)
    mode_cutoff: float = Field(1e-15, ge=0.0)
    default_hbar: float = Field(1.0, gt=0.0)


class AirySettings(BaseModel):
    """Airy 函数求值与傅里叶检查设置"""

    series_max: float = 5.0
    series_min: float = -7.0
    lower_limit: float = -12.0
    delta_damping: float = Field(3.0, gt=0.0)
    delta_upper: float = Field(36.0, gt=0.0)
    delta_band: float = Field(1e-6, gt=0.0)
    min_band_modes: int = Field(8, gt=0)


class SolverSettings(BaseModel):
    """数值求解器设置"""

    max_iterations: int = Field(100, gt=0)
    newton_tol: float = Field(1e-12, gt=0.0)
    # 初始猜测 [实部, 虚部]
    newton_guesses: list[list[float]] = Field(default_factory=lambda: [[0.0, 0.0], [0.0, 0.5], [0.0, -0.5]])
    flow_rtol: float = Field(1e-12, gt=0.0)
    flow_atol: float = Field(1e-12, gt=0.0)
    escape_radius: float = Field(1e8, gt=0.0)
    quad_epsabs: float = Field(1e-13, gt=0.0)
    quad_epsrel: float = Field(1e-12, gt=0.0)

    def guesses(self) -> list[complex]:
        """牛顿迭代的初始猜测序列"""
        return [complex(re, im) for re, im in self.newton_guesses]


class LabSettings(BaseModel):
    """数值设置总表"""

    tolerances: Tolerances = Field(default_factory=Tolerances)
    grid: GridSettings = Field(default_factory=GridSettings)
    airy: AirySettings = Field(default_factory=AirySettings)
    solver: SolverSettings = Field(default_factory=SolverSettings)

    def max_grid_cells(self) -> int:
        """网格单元上限，环境变量 PSQ_MAX_GRID 优先"""
        raw = os.environ.get(Config.ENV_MAX_GRID)
        if raw:
            try:
                value = int(raw)
                if value > 0:
                    return value
            except ValueError:
                pass
            logger.warning("忽略无效的 %s=%r", Config.ENV_MAX_GRID, raw)
        return self.grid.max_cells

    def get_dict(self) -> dict:
        """转换为字典格式，用于YAML序列化"""
        return self.model_dump()


class SettingsManager:
    """数值设置管理器（单例）"""

    _instance: Optional["SettingsManager"] = None
    _initialized: bool = False

    def __new__(cls) -> "SettingsManager":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __init__(self):
        if self._initialized:
            return

        self._settings: Optional[LabSettings] = None
        self._settings_file: Optional[Path] = None
        self._initialized = True

    @property
    def settings(self) -> LabSettings:
        """获取设置，首次访问时加载"""
        if self._settings is None:
            self.load()
        return self._settings

    def load(self, settings_file: Optional[Path] = None) -> LabSettings:
        """加载设置文件

        Args:
            settings_file: 设置文件路径，缺省时使用 Config.settings_file()

        Returns:
            校验后的设置
        """
        self._settings_file = settings_file or Config.settings_file()
        try:
            if not self._settings_file.exists():
                logger.info("设置文件不存在，使用默认设置: %s", self._settings_file)
                self._settings = LabSettings()
                self.save()
                return self._settings

            with open(self._settings_file, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f) or {}

            self._settings = LabSettings.model_validate(data)
        except (OSError, yaml.YAMLError, ValidationError, ValueError) as e:
            logger.error("加载设置失败，使用默认设置: %s", e)
            self._settings = LabSettings()
        return self._settings

    def save(self) -> bool:
        """保存设置

        Returns:
            保存是否成功
        """
        if self._settings is None or self._settings_file is None:
            return False
        try:
            self._settings_file.parent.mkdir(parents=True, exist_ok=True)
            with open(self._settings_file, "w", encoding="utf-8") as f:
                yaml.dump(self._settings.get_dict(), f, allow_unicode=True, sort_keys=False)
            return True
        except OSError as e:
            logger.warning("保存设置失败: %s", e)
            return False

    def reset(self) -> None:
        """丢弃已加载的设置 (测试用)"""
        self._settings = None
        self._settings_file = None


def get_settings() -> LabSettings:
    """获取全局数值设置"""
    return SettingsManager().settings


# 全局配置实例
config = Config()
