"""HTTP service exposing the simulator and harness.

Thin handlers over the same harness entry points the CLI uses: scenario
evaluation, forced exact enumeration, the branch table, and the preset
battery.  Config errors surface as 422 with a line- or parameter-anchored
detail string.
"""

from __future__ import annotations

import time

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..harness import (
    MODE_ENUMERATE,
    NotEnumerableError,
    ScenarioError,
    build_report,
    check_expectations,
    enumerate_exact,
    get_preset,
    parse_scenario,
    run_attack_suite,
    run_monte_carlo,
    table1_report,
)
from ..harness.presets import PRESET_ORDER, PRESETS
from .schemas import (
    HealthResponse,
    PresetInfo,
    PresetListResponse,
    ReportModel,
    ScenarioRequest,
    SuiteRequest,
    SuiteResponse,
    Table1Response,
    Table1Row,
)


def _parse_or_422(request: ScenarioRequest):
    try:
        return parse_scenario(request.scenario, name=request.name)
    except ScenarioError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from None


def create_app() -> FastAPI:
    app = FastAPI(
        title="basiskey",
        version=__version__,
        description="Simulator and analysis toolkit for a basis-keyed QKD "
        "protocol against a BB84 baseline.",
    )

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(version=__version__)

    @app.post("/run", response_model=ReportModel, response_model_exclude_none=True)
    def run(request: ScenarioRequest) -> ReportModel:
        """Evaluate a scenario in its own mode (enumerate or montecarlo)."""
        scenario = _parse_or_422(request)
        t0 = time.perf_counter()
        try:
            if scenario.mode == MODE_ENUMERATE:
                metrics = enumerate_exact(scenario)
                seed = None
            else:
                metrics = run_monte_carlo(scenario, master_seed=request.seed)
                seed = request.seed if request.seed is not None else scenario.seed
        except NotEnumerableError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        rows, _ok = check_expectations(scenario, metrics)
        report = build_report(
            scenario.name, metrics, rows, seed=seed,
            elapsed_seconds=time.perf_counter() - t0,
        )
        return ReportModel(**report)

    @app.post("/enumerate", response_model=ReportModel, response_model_exclude_none=True)
    def enumerate_(request: ScenarioRequest) -> ReportModel:
        """Force exact evaluation regardless of the scenario's mode; 422
        (naming the parameter) when the scenario is not enumerable."""
        scenario = _parse_or_422(request)
        t0 = time.perf_counter()
        try:
            metrics = enumerate_exact(scenario)
        except NotEnumerableError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        rows, _ok = check_expectations(scenario, metrics)
        report = build_report(
            scenario.name, metrics, rows,
            elapsed_seconds=time.perf_counter() - t0,
        )
        return ReportModel(**report)

    @app.post("/attack-suite", response_model=SuiteResponse, response_model_exclude_none=True)
    def attack_suite(request: SuiteRequest) -> SuiteResponse:
        try:
            result = run_attack_suite(
                master_seed=request.seed,
                mc_scale=request.mc_scale,
                names=request.names,
            )
        except KeyError as exc:
            raise HTTPException(status_code=422, detail=str(exc.args[0])) from None
        return SuiteResponse(
            ok=result.ok,
            elapsed_seconds=result.elapsed_seconds,
            reports=[ReportModel(**r) for r in result.reports],
        )

    @app.get("/table1", response_model=Table1Response)
    def table1() -> Table1Response:
        rows = [
            Table1Row(
                eve_basis=row["eve_basis"],
                resend=row["resend"],
                bob_basis=row["bob_basis"],
                outcome=row["outcome"],
                result=row["result"],
                disturbance=row["disturbance"],
                probability=str(row["probability"]),
                probability_float=float(row["probability"]),
            )
            for row in table1_report()
        ]
        return Table1Response(rows=rows)

    @app.get("/presets", response_model=PresetListResponse)
    def presets() -> PresetListResponse:
        infos = [
            PresetInfo(name=name, mode=get_preset(name).mode, text=PRESETS[name])
            for name in PRESET_ORDER
        ]
        return PresetListResponse(presets=infos)

    return app
