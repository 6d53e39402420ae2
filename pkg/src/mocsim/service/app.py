"""FastAPI service wrapping the simulator and analysis pipeline."""
from __future__ import annotations

import math

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..analysis import AnalysisError, angle_average
from ..experiment import ConfigError, build_fit_report, run_experiment
from ..tallies import TallyTable
from ..validation import engine_vs_floodfill, engine_vs_tableau
from ..weighted_graph import graph_to_csv
from .models import (AngleAveragePoint, AngleAverageRequest,
                     AngleAverageResponse, FitRequest, FitResponse,
                     HealthResponse, OracleCheckRequest, OracleCheckResponse,
                     RunRequest, RunResponse, WeightedGraphPayload)


def create_app() -> FastAPI:
    app = FastAPI(title="mocsim", version=__version__,
                  description="Monte Carlo percolation simulation of "
                              "measurement-only circuit ensembles")

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/run", response_model=RunResponse)
    def run(req: RunRequest) -> RunResponse:
        try:
            result = run_experiment(req.config)
        except ConfigError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        wg = None
        if result.weighted_graph is not None:
            w = result.weighted_graph
            wg = WeightedGraphPayload(
                measure=w["measure"], sum_measure=w["sum_measure"],
                count=w["count"],
                horizontal_csv=(graph_to_csv(w["horizontal"])
                                if w["horizontal"] is not None else None),
                vertical_csv=(graph_to_csv(w["vertical"])
                              if w["vertical"] is not None else None))
        return RunResponse(tally_csv=result.table.to_csv(),
                           fit_report=result.report, weighted_graph=wg,
                           meta=result.meta)

    @app.post("/fit", response_model=FitResponse)
    def fit(req: FitRequest) -> FitResponse:
        try:
            table = TallyTable.from_csv(req.tally_csv)
            report = build_fit_report(table, req.family, req.num_sites,
                                      req.prob, req.fit, req.iterations)
        except (ValueError, AnalysisError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return FitResponse(report=report)

    @app.post("/angle-average", response_model=AngleAverageResponse)
    def angle_avg(req: AngleAverageRequest) -> AngleAverageResponse:
        from ..experiment import displacement_rate_grids
        try:
            table = TallyTable.from_csv(req.tally_csv)
            grid_g, grid_m, omega = displacement_rate_grids(
                table, req.k, math.sqrt(req.radius_sq))
        except (ValueError, AnalysisError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        grid = grid_g if req.measure == "gme" else grid_m
        side = int(round(req.num_sites ** 0.5))
        points, excluded = [], []
        for eta in req.eta_values:
            try:
                rate, err = angle_average(grid, omega, eta, req.radius_sq,
                                          side, req.num_angles)
                points.append(AngleAveragePoint(eta=eta, rate=rate, stderr=err))
            except AnalysisError:
                excluded.append(eta)
        return AngleAverageResponse(points=points, excluded_etas=excluded)

    @app.post("/oracle-check", response_model=OracleCheckResponse)
    def oracle_check(req: OracleCheckRequest) -> OracleCheckResponse:
        tab = engine_vs_tableau(req.families, req.trials, req.max_sites,
                                req.max_depth, req.probs, req.seed)
        flood = None
        passed = tab.passed
        if req.include_floodfill:
            flood = engine_vs_floodfill(req.families, req.trials, req.max_sites,
                                        req.max_depth, req.probs, req.seed)
            passed = passed and flood.passed
        return OracleCheckResponse(tableau=tab.as_dict(),
                                   floodfill=flood.as_dict() if flood else None,
                                   passed=passed)

    @app.post("/weighted-graph", response_model=RunResponse)
    def weighted_graph(req: RunRequest) -> RunResponse:
        cfg = req.config
        if cfg.weighted_graph is None or not cfg.weighted_graph.enabled:
            raise HTTPException(status_code=400,
                                detail="config must enable the weighted_graph "
                                       "section")
        return run(req)

    return app


app = create_app()
