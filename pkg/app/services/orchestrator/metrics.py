from pathlib import Path
from typing import Any, Dict, List, Sequence

import numpy as np
import pandas as pd

from app.core.exceptions import SimulationError
from app.models import EpisodeMetrics, TrainingStats

# Formato fixo: mesmas entradas produzem arquivos idênticos byte a byte
FLOAT_FORMAT = "%.10g"

SUMMARY_FIELDS = (
    "task_pct",
    "collisions",
    "boundary_violations",
    "total_energy_J",
    "energy_per_task_J",
    "mean_discounted_reward",
)


def write_csv(rows: Sequence[Dict[str, Any]], path: str, columns: List[str] = None) -> str:
    """Grava linhas em CSV via pandas; falhas de I/O carregam o caminho"""
    frame = pd.DataFrame(list(rows), columns=columns)
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    except OSError as e:
        raise SimulationError(f"Falha ao gravar CSV: {e}", path=path) from e
    return path


def metrics_columns(num_uavs: int) -> List[str]:
    return (
        ["episode", "mean_discounted_reward"]
        + [f"discounted_reward_uav{m}" for m in range(num_uavs)]
        + [
            "task_pct",
            "collisions",
            "boundary_violations",
            "total_energy_J",
            "energy_per_task_J",
            "tasks_processed",
            "tasks_total",
            "slots",
        ]
    )


def write_metrics(metrics: Sequence[EpisodeMetrics], path: str, num_uavs: int) -> str:
    return write_csv([m.to_row() for m in metrics], path, metrics_columns(num_uavs))


def write_training_stats(stats: Sequence[TrainingStats], path: str) -> str:
    columns = ["episode", "uav", "actor_loss", "critic_loss", "entropy", "clip_fraction", "mean_ratio", "pool_size"]
    return write_csv([s.to_dict() for s in stats], path, columns)


def write_psi_series(metrics: Sequence[EpisodeMetrics], path: str) -> str:
    rows = [
        {"episode": m.episode, "slot": slot, "psi": psi}
        for m in metrics
        for slot, psi in enumerate(m.psi_series)
    ]
    return write_csv(rows, path, ["episode", "slot", "psi"])


def read_metrics(path: str) -> pd.DataFrame:
    try:
        return pd.read_csv(path)
    except (OSError, pd.errors.ParserError) as e:
        raise SimulationError(f"Falha ao ler métricas: {e}", path=path) from e


def summarize(metrics: Sequence[EpisodeMetrics]) -> Dict[str, Any]:
    """Média e desvio de cada métrica sobre os episódios"""
    frame = pd.DataFrame([m.to_row() for m in metrics])
    summary: Dict[str, Any] = {"episodes": len(metrics)}
    for field in SUMMARY_FIELDS:
        values = frame[field].to_numpy(dtype=np.float64) if len(frame) else np.zeros(0)
        finite = values[np.isfinite(values)]
        summary[f"{field}_mean"] = float(finite.mean()) if len(finite) else float("nan")
        summary[f"{field}_std"] = float(finite.std()) if len(finite) else float("nan")
    return summary
