"""Request/response models of the HTTP service.

Defaults here are the canonical experiment defaults; the CLI only sends
flags the user actually set, so omitted fields fall back to these values.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field, model_validator

from ..experiments import BUDGET_ABSOLUTE, BUDGET_QUARTER, ExperimentConfig
from ..optimizer import VARIANT_CONSISTENT, VARIANT_LITERAL, OptimizerConfig


class OptimizerOptions(BaseModel):
    inner_iterations: int = Field(default=50, ge=1)
    outer_tolerance: float = Field(default=1e-4, gt=0)
    max_outer_iterations: int = Field(default=300, ge=1)
    surrogate_variant: Literal[VARIANT_CONSISTENT, VARIANT_LITERAL] = VARIANT_CONSISTENT
    bisection_tolerance: float = Field(default=1e-10, gt=0)

    def to_config(self) -> OptimizerConfig:
        return OptimizerConfig(**self.model_dump())


class DigitalBudget(BaseModel):
    mode: Literal[BUDGET_QUARTER, BUDGET_ABSOLUTE] = BUDGET_QUARTER
    watts: float | None = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _check_watts(self):
        if self.mode == BUDGET_ABSOLUTE and self.watts is None:
            raise ValueError("absolute budget mode needs watts")
        return self


class _ExperimentRequest(BaseModel):
    k: int = Field(default=4, ge=1)
    l: int = Field(default=16, ge=1)
    channel_model: Literal["rayleigh", "orthogonal"] = "rayleigh"
    base_seed: int = Field(default=42, ge=0)
    optimizer: OptimizerOptions = Field(default_factory=OptimizerOptions)

    def _common(self) -> dict:
        return {
            "k": self.k,
            "l": self.l,
            "channel_model": self.channel_model,
            "base_seed": self.base_seed,
            "optimizer": self.optimizer.to_config(),
        }


class ConvergenceRequest(_ExperimentRequest):
    snr_db_list: list[float] = Field(default=[0.0, 10.0, 20.0])
    realizations: int = Field(default=1, ge=1)

    def to_config(self) -> ExperimentConfig:
        return ExperimentConfig(
            snr_db_list=tuple(self.snr_db_list),
            realizations=self.realizations,
            **self._common(),
        )


class SnrSweepRequest(_ExperimentRequest):
    snr_db_list: list[float] = Field(default=[0.0, 5.0, 10.0, 15.0, 20.0])
    realizations: int = Field(default=100, ge=1)
    digital_budget: DigitalBudget = Field(default_factory=DigitalBudget)

    def to_config(self) -> ExperimentConfig:
        return ExperimentConfig(
            snr_db_list=tuple(self.snr_db_list),
            realizations=self.realizations,
            digital_budget_mode=self.digital_budget.mode,
            digital_budget_watts=self.digital_budget.watts,
            **self._common(),
        )


class ArraySweepRequest(_ExperimentRequest):
    l_list: list[int] = Field(default=[8, 16, 32])
    snr_db: float = 10.0
    realizations: int = Field(default=100, ge=1)
    digital_budget: DigitalBudget = Field(default_factory=DigitalBudget)

    def to_config(self) -> ExperimentConfig:
        return ExperimentConfig(
            l_list=tuple(self.l_list),
            snr_db=self.snr_db,
            realizations=self.realizations,
            digital_budget_mode=self.digital_budget.mode,
            digital_budget_watts=self.digital_budget.watts,
            **self._common(),
        )


class SynthesizeRequest(BaseModel):
    matrix_text: str = Field(description="scattering matrix in the MILAC-MAT v1 text format")
    z0: float = Field(default=50.0, gt=0)


class ExperimentResponse(BaseModel):
    command: str
    csv: str


class HealthResponse(BaseModel):
    status: str
    service: str
    version: str


class ErrorDetail(BaseModel):
    kind: Literal["invalid_config", "numerical_failure"]
    message: str
