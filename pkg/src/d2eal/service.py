"""HTTP service wrapping the simulator: submit a scenario, get logs and audits back.

Campaigns are CPU-bound batch jobs, so every endpoint is synchronous and
returns the full rendered artifacts (CSV text plus JSON summaries); the CLI
ships these to disk. All endpoints are deterministic for a given request.
"""

from __future__ import annotations

from dataclasses import asdict
from typing import Any, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, ConfigDict, Field

from . import __version__
from .audit import audit_bounds, audit_convergence
from .baselines import STRATEGIES
from .config import ConfigError, ScenarioConfig
from .harness import (
    CampaignError,
    NumericalFailure,
    comparison_csv,
    compare_strategies,
    curves_csv,
    execute_run,
    linkdrop_hist_csv,
    linkdrops_csv,
    monte_carlo,
    scalability_sweep,
    steps_csv,
    sweep_csv,
)


class RunRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: ScenarioConfig
    seed: Optional[int] = None


class RunResponse(BaseModel):
    summary: dict[str, Any]
    audit: dict[str, Any]
    steps_csv: str
    linkdrops_csv: str
    linkdrop_hist_csv: str


class MonteCarloRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: ScenarioConfig
    runs: Optional[int] = Field(default=None, ge=1)


class CampaignSummary(BaseModel):
    strategies: list[str]
    runs: int
    totals: dict[str, float]
    totals_std: dict[str, float]
    per_robot_totals: dict[str, list[float]]
    failures: list[tuple[int, str, int]]


class MonteCarloResponse(BaseModel):
    summary: CampaignSummary
    curves_csv: str


class CompareRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: ScenarioConfig
    runs: Optional[int] = Field(default=None, ge=1)
    strategies: Optional[list[str]] = None


class CompareResponse(BaseModel):
    summary: CampaignSummary
    comparison_csv: str
    curves_csv: str


class SweepRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: ScenarioConfig
    n_values: Optional[list[int]] = None
    strategies: Optional[list[str]] = None
    runs: Optional[int] = Field(default=None, ge=1)


class SweepResponse(BaseModel):
    n_values: list[int]
    strategies: list[str]
    runs: int
    per_robot_avg: dict[str, list[float]]
    per_robot_std: dict[str, list[float]]
    reliability_cost: list[float]
    sweep_csv: str


class AuditRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: ScenarioConfig
    seed: Optional[int] = None


def _campaign_summary(result, runs: int) -> CampaignSummary:
    return CampaignSummary(
        strategies=result.strategies,
        runs=runs,
        totals=result.totals,
        totals_std=result.totals_std,
        per_robot_totals={s: [float(v) for v in arr] for s, arr in result.per_robot_totals.items()},
        failures=result.failures,
    )


def _audit_payload(result) -> dict[str, Any]:
    payload: dict[str, Any] = {"regret": audit_bounds(result).to_dict()}
    if result.run.w_rows is not None and result.run.strategy == "d2eal":
        payload["convergence"] = audit_convergence(result).to_dict()
    else:
        payload["convergence"] = None
    return payload


def create_app() -> FastAPI:
    app = FastAPI(title="d2eal simulation service", version=__version__)

    @app.exception_handler(ConfigError)
    async def _config_error(_, exc: ConfigError):
        raise HTTPException(status_code=400, detail=str(exc))

    @app.get("/health")
    def health() -> dict[str, str]:
        return {"status": "ok", "version": __version__}

    @app.get("/strategies")
    def strategies() -> dict[str, list[str]]:
        return {"strategies": list(STRATEGIES)}

    @app.post("/run", response_model=RunResponse)
    def run(req: RunRequest) -> RunResponse:
        try:
            result = execute_run(req.config, seed=req.seed)
        except NumericalFailure as e:
            raise HTTPException(status_code=500, detail={"code": "numerical_failure", "step": e.step})
        except ConfigError as e:
            raise HTTPException(status_code=400, detail=str(e))
        return RunResponse(
            summary=asdict(result.summary()),
            audit=_audit_payload(result),
            steps_csv=steps_csv(result),
            linkdrops_csv=linkdrops_csv(result),
            linkdrop_hist_csv=linkdrop_hist_csv(result),
        )

    @app.post("/montecarlo", response_model=MonteCarloResponse)
    def montecarlo(req: MonteCarloRequest) -> MonteCarloResponse:
        runs = req.runs or req.config.num_runs
        try:
            result = monte_carlo(req.config, num_runs=runs)
        except (NumericalFailure, CampaignError) as e:
            raise HTTPException(status_code=500, detail={"code": "numerical_failure", "error": str(e)})
        except ConfigError as e:
            raise HTTPException(status_code=400, detail=str(e))
        return MonteCarloResponse(
            summary=_campaign_summary(result, runs), curves_csv=curves_csv(result)
        )

    @app.post("/compare", response_model=CompareResponse)
    def compare(req: CompareRequest) -> CompareResponse:
        runs = req.runs or req.config.num_runs
        bad = set(req.strategies or []) - set(STRATEGIES)
        if bad:
            raise HTTPException(status_code=400, detail=f"unknown strategies: {sorted(bad)}")
        try:
            result = compare_strategies(req.config, num_runs=runs, strategies=req.strategies)
        except (NumericalFailure, CampaignError) as e:
            raise HTTPException(status_code=500, detail={"code": "numerical_failure", "error": str(e)})
        except ConfigError as e:
            raise HTTPException(status_code=400, detail=str(e))
        return CompareResponse(
            summary=_campaign_summary(result, runs),
            comparison_csv=comparison_csv(result),
            curves_csv=curves_csv(result),
        )

    @app.post("/sweep", response_model=SweepResponse)
    def sweep(req: SweepRequest) -> SweepResponse:
        from .harness import DEFAULT_SWEEP_N, DEFAULT_SWEEP_STRATEGIES

        n_values = req.n_values or list(DEFAULT_SWEEP_N)
        strats = req.strategies or list(DEFAULT_SWEEP_STRATEGIES)
        bad = set(strats) - set(STRATEGIES)
        if bad:
            raise HTTPException(status_code=400, detail=f"unknown strategies: {sorted(bad)}")
        if any(n < 2 for n in n_values):
            raise HTTPException(status_code=400, detail="sweep n values must be >= 2")
        try:
            result = scalability_sweep(req.config, n_values=n_values, strategies=strats, num_runs=req.runs)
        except (NumericalFailure, CampaignError) as e:
            raise HTTPException(status_code=500, detail={"code": "numerical_failure", "error": str(e)})
        except ConfigError as e:
            raise HTTPException(status_code=400, detail=str(e))
        return SweepResponse(
            n_values=result.n_values,
            strategies=result.strategies,
            runs=result.runs,
            per_robot_avg=result.per_robot_avg,
            per_robot_std=result.per_robot_std,
            reliability_cost=result.reliability_cost,
            sweep_csv=sweep_csv(result),
        )

    @app.post("/audit")
    def audit(req: AuditRequest) -> dict[str, Any]:
        try:
            result = execute_run(req.config, seed=req.seed)
        except NumericalFailure as e:
            raise HTTPException(status_code=500, detail={"code": "numerical_failure", "step": e.step})
        except ConfigError as e:
            raise HTTPException(status_code=400, detail=str(e))
        return _audit_payload(result)

    return app


app = create_app()
