"""FastAPI service exposing the experiment harness over HTTP.

Bad requests (inconsistent configs, malformed matrix files) map to 422,
numerical failures (e.g. a scattering matrix with no finite susceptance
realization) to 409.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import MalformedFile, MilacSimError, NumericalFailure
from ..experiments import (
    parse_matrix_text,
    run_array_sweep,
    run_convergence,
    run_snr_sweep,
    synthesize_csv,
)
from ..microwave import ScatteringMatrix
from .models import (
    ArraySweepRequest,
    ConvergenceRequest,
    ExperimentResponse,
    HealthResponse,
    SnrSweepRequest,
    SynthesizeRequest,
)

app = FastAPI(title="milac-sim", version=__version__)


@app.exception_handler(MilacSimError)
async def _handle_domain_error(request: Request, exc: MilacSimError) -> JSONResponse:
    if isinstance(exc, NumericalFailure):
        status, kind = 409, "numerical_failure"
    else:
        status, kind = 422, "invalid_config"
    return JSONResponse(status_code=status, content={"detail": {"kind": kind, "message": str(exc)}})


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", service="milac-sim", version=__version__)


@app.post("/experiments/convergence", response_model=ExperimentResponse)
def convergence(request: ConvergenceRequest) -> ExperimentResponse:
    return ExperimentResponse(command="convergence", csv=run_convergence(request.to_config()))


@app.post("/experiments/snr-sweep", response_model=ExperimentResponse)
def snr_sweep(request: SnrSweepRequest) -> ExperimentResponse:
    return ExperimentResponse(command="snr-sweep", csv=run_snr_sweep(request.to_config()))


@app.post("/experiments/array-sweep", response_model=ExperimentResponse)
def array_sweep(request: ArraySweepRequest) -> ExperimentResponse:
    return ExperimentResponse(command="array-sweep", csv=run_array_sweep(request.to_config()))


@app.post("/synthesize", response_model=ExperimentResponse)
def synthesize(request: SynthesizeRequest) -> ExperimentResponse:
    matrix = parse_matrix_text(request.matrix_text)
    if not isinstance(matrix, ScatteringMatrix):
        raise MalformedFile("synthesis needs a scattering matrix file")
    return ExperimentResponse(command="synthesize", csv=synthesize_csv(matrix, request.z0))
