"""FastAPI Application for resilient linear classification"""

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field
from typing import Dict, List
import logging

from app.core.attacks import is_valid_bfa
from app.core.classifiers import train
from app.core.config import Settings, TrainConfig, TrainerName
from app.core.errors import ResilienceError, SolverError, TrainerInfeasibleError
from app.core.resilience import (
    Algorithm, ClassCounts, evaluate_resilience, in_resilient_region, perfectly_attackable_region,
    resilience_bound,
)
from app.core.types import AttackBudget, Dataset

logging.basicConfig(level=getattr(logging, Settings().log_level, logging.INFO),
                    format='%(asctime)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

app = FastAPI(title="Resilient Linear Classification API", version="1.0.0")

# Add CORS middleware
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


class DatasetPayload(BaseModel):
    positives: List[List[float]]
    negatives: List[List[float]]

    def to_dataset(self) -> Dataset:
        return Dataset.from_classes(self.positives, self.negatives)


class TrainRequest(BaseModel):
    trainer: TrainerName
    data: DatasetPayload
    train: TrainConfig = Field(default_factory=TrainConfig)


class BudgetRequest(BaseModel):
    n_pos: int = Field(..., ge=1)
    n_neg: int = Field(..., ge=1)
    alpha_pos: int = Field(0, ge=0)
    alpha_neg: int = Field(0, ge=0)


class BoundResponse(BaseModel):
    bound: float
    exact: str
    resilient_region: bool


class EvaluateRequest(BaseModel):
    trainer: TrainerName
    clean: DatasetPayload
    tampered: DatasetPayload
    alpha_pos: int = Field(0, ge=0)
    alpha_neg: int = Field(0, ge=0)
    train: TrainConfig = Field(default_factory=TrainConfig)


class EvaluateResponse(BaseModel):
    resilience: float
    risk_pos: float
    risk_neg: float
    report: dict


def _http_error(e: Exception) -> HTTPException:
    if isinstance(e, TrainerInfeasibleError):
        return HTTPException(status_code=422, detail=str(e))
    if isinstance(e, SolverError):
        return HTTPException(status_code=500, detail=str(e))
    return HTTPException(status_code=400, detail=str(e))


@app.get("/health")
async def health():
    """Health check endpoint"""
    return {"status": "ok", "trainers": ["hinge", "zero_one", "majority"]}


@app.post("/train")
def train_classifier(request: TrainRequest):
    """Train one classifier on the posted data"""
    try:
        report = train(request.trainer, request.data.to_dataset(), request.train)
    except (ResilienceError, ValueError) as e:
        raise _http_error(e)
    if not report.feasible:
        raise _http_error(TrainerInfeasibleError(f"Trainer {request.trainer} has no feasible classifier"))
    return report.to_dict()


@app.post("/bound", response_model=BoundResponse)
async def bound(request: BudgetRequest):
    """Worst-case resilience of the majority 0-1 trainer"""
    try:
        counts = ClassCounts(request.n_pos, request.n_neg)
        budget = AttackBudget(request.alpha_pos, request.alpha_neg)
        value = resilience_bound(counts, budget)
    except (ResilienceError, ValueError) as e:
        raise _http_error(e)
    return BoundResponse(bound=float(value), exact=str(value),
                         resilient_region=in_resilient_region(counts, budget))


@app.post("/regions")
async def regions(request: BudgetRequest) -> Dict[str, bool]:
    """Perfectly-attackable verdict of every algorithm class at one budget"""
    try:
        counts = ClassCounts(request.n_pos, request.n_neg)
        budget = AttackBudget(request.alpha_pos, request.alpha_neg)
        return {algorithm.value: perfectly_attackable_region(algorithm, counts, budget).perfectly_attackable
                for algorithm in Algorithm}
    except (ResilienceError, ValueError) as e:
        raise _http_error(e)


@app.post("/evaluate", response_model=EvaluateResponse)
def evaluate(request: EvaluateRequest):
    """Empirical resilience of a trainer on one (clean, tampered) pair"""
    try:
        clean = request.clean.to_dataset()
        tampered = request.tampered.to_dataset()
        budget = AttackBudget(request.alpha_pos, request.alpha_neg)
        if not is_valid_bfa(clean, tampered, budget):
            raise ValueError(f"Tampered data exceeds the budget {budget.as_tuple()}")
        evaluation = evaluate_resilience(request.trainer, clean, tampered, request.train)
    except (ResilienceError, ValueError) as e:
        logger.warning(f"Evaluate request rejected: {e}")
        raise _http_error(e)
    return EvaluateResponse(resilience=evaluation.value,
                            risk_pos=evaluation.clean_risk.risk_pos,
                            risk_neg=evaluation.clean_risk.risk_neg,
                            report=evaluation.report.to_dict())


if __name__ == "__main__":
    import uvicorn
    uvicorn.run(app, host="0.0.0.0", port=8000)
