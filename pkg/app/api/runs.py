from pathlib import Path
from typing import Any, Dict, List, Optional

from fastapi import APIRouter
from pydantic import BaseModel, Field
from starlette.concurrency import run_in_threadpool

from app.core.config import load_profile, settings
from app.core.exceptions import CheckpointError
from app.core.logging import get_logger
from app.services.orchestrator.evaluation_service import EvaluationService

logger = get_logger("runs_routes")

router = APIRouter(prefix="/api/runs", tags=["runs"])


class TraceRequest(BaseModel):
    """Trace de um episódio sem aprendizado"""
    profile: str = "desk"
    overrides: Dict[str, Any] = Field(default_factory=dict)
    seed: Optional[int] = None
    checkpoint: Optional[str] = None
    greedy: bool = False


class TraceResponse(BaseModel):
    records: List[Dict[str, Any]]
    slots: int
    tasks_processed: int


class EvaluateRequest(BaseModel):
    """Avaliação de um checkpoint compartilhado pela frota"""
    checkpoint: Optional[str] = None
    profile: str = "desk"
    overrides: Dict[str, Any] = Field(default_factory=dict)
    episodes: int = Field(default=5, gt=0, le=500)


def _config(profile: str, overrides: Dict[str, Any], seed: Optional[int] = None):
    config = load_profile(profile)
    overrides = dict(overrides)
    if seed is not None:
        overrides["seed"] = seed
    return config.with_overrides(overrides) if overrides else config


def _checkpoint(path: Optional[str]) -> Optional[str]:
    """Caminho do checkpoint restrito ao diretório de saída (relativos partem dele)"""
    if path is None:
        return None
    root = Path(settings.output_dir).resolve()
    candidate = Path(path)
    resolved = (candidate if candidate.is_absolute() else root / candidate).resolve()
    if not resolved.is_relative_to(root):
        logger.warning(f"Checkpoint recusado fora de {root}: {path}")
        raise CheckpointError(f"Checkpoint fora do diretório de saída: {path}")
    return str(resolved)


@router.post("/trace", response_model=TraceResponse)
async def run_trace(request: TraceRequest):
    """Registros JSONL do episódio (um por slot, mais o inicial)"""
    config = _config(request.profile, request.overrides, request.seed)
    service = EvaluationService(config)
    recorder = await run_in_threadpool(service.trace, _checkpoint(request.checkpoint), request.greedy)
    records = recorder.records
    processed = sum(record.get("processed", 0) for record in records)
    logger.info(f"Trace gerado: {len(records) - 1} slots, {processed} tarefas")
    return TraceResponse(records=records, slots=len(records) - 1, tasks_processed=processed)


@router.post("/evaluate")
async def run_evaluate(request: EvaluateRequest) -> Dict[str, Any]:
    """Resumo média ± desvio das métricas de episódio"""
    config = _config(request.profile, request.overrides)
    service = EvaluationService(config)
    summary = await run_in_threadpool(service.evaluate, _checkpoint(request.checkpoint), request.episodes)
    # NaN não é JSON válido
    return {k: (None if isinstance(v, float) and v != v else v) for k, v in summary.items()}
