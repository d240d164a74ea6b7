"""HTTP layer: FastAPI app factory and its request/response models."""

from .app import create_app
from .schemas import (
    ExpectationModel,
    HealthResponse,
    MetricModel,
    PresetInfo,
    PresetListResponse,
    ReportModel,
    ScenarioRequest,
    SuiteRequest,
    SuiteResponse,
    Table1Response,
    Table1Row,
)

__all__ = [
    "ExpectationModel",
    "HealthResponse",
    "MetricModel",
    "PresetInfo",
    "PresetListResponse",
    "ReportModel",
    "ScenarioRequest",
    "SuiteRequest",
    "SuiteResponse",
    "Table1Response",
    "Table1Row",
    "create_app",
]
