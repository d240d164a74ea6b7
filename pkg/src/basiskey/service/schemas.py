"""Pydantic request/response models for the HTTP service.

Response shapes mirror the harness report dicts one-to-one (the JSON
`pass` key maps to the `passed` field via alias), so a service response
validates against the same committed report schema as CLI output.
"""

from __future__ import annotations

from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str


class ScenarioRequest(BaseModel):
    """A scenario document plus optional overrides."""

    scenario: str = Field(description="Scenario text (key = value lines)")
    name: str = "scenario"
    seed: Optional[int] = Field(default=None, description="Master seed override")


class MetricModel(BaseModel):
    value: float
    exact: Optional[str] = None
    stderr: Optional[float] = None
    n: Optional[int] = None


class ExpectationModel(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    metric: str
    expected: float
    tolerance: float
    passed: bool = Field(alias="pass")


class ReportModel(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    scenario: str
    mode: str
    seed: Optional[int] = None
    elapsed_seconds: Optional[float] = None
    metrics: Dict[str, MetricModel]
    expectations: List[ExpectationModel]

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.expectations)


class SuiteRequest(BaseModel):
    seed: Optional[int] = None
    mc_scale: float = Field(
        default=1.0,
        gt=0,
        description="Monte Carlo size multiplier; expectations are only "
        "guaranteed green at 1.0",
    )
    names: Optional[List[str]] = Field(
        default=None, description="Subset of presets to run (default: all)"
    )


class SuiteResponse(BaseModel):
    ok: bool
    elapsed_seconds: float
    reports: List[ReportModel]


class Table1Row(BaseModel):
    eve_basis: str
    resend: str
    bob_basis: str
    outcome: str
    result: str
    disturbance: str
    probability: str
    probability_float: float


class Table1Response(BaseModel):
    rows: List[Table1Row]


class PresetInfo(BaseModel):
    name: str
    mode: str
    text: str


class PresetListResponse(BaseModel):
    presets: List[PresetInfo]
