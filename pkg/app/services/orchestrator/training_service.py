import json
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from app.core.config import RunConfig, settings
from app.core.exceptions import SimulationError
from app.core.logging import get_logger
from app.core.random import stream_seed
from app.models import EpisodeMetrics
from app.services.nn.checkpoint import save_checkpoint
from app.services.nn.params import ParameterStore
from app.services.orchestrator.metrics import write_metrics, write_psi_series, write_training_stats
from app.services.orchestrator.rollout import SwarmLearner, SwarmRunner
from app.services.ppo.policy import init_model

logger = get_logger("training_service")


def checkpoint_name(episode: int, uav: int) -> str:
    return f"ckpt_ep{episode:05d}_uav{uav}.ckpt"


class TrainingService:
    """Laço de treinamento descentralizado (um learner_round por cadência)"""

    def __init__(self, config: RunConfig, output_dir: Optional[str] = None, dtype=None):
        self.config = config
        self.output_dir = Path(output_dir or config.training.output_dir or settings.output_dir)
        self.dtype = np.dtype(dtype or settings.float_dtype)
        self.runner = SwarmRunner(config, self.dtype)
        logger.info(f"TrainingService inicializado (saída: {self.output_dir})")

    def initial_stores(self) -> List[ParameterStore]:
        """Todos os UAVs partem dos mesmos pesos (agentes homogêneos)"""
        seed = stream_seed(self.config.training.seed, "init")
        base = init_model(self.config, seed, self.dtype)
        return [base.copy() for _ in range(self.config.environment.num_uavs)]

    def train(self) -> Dict[str, Any]:
        cfg = self.config
        seed = cfg.training.seed
        episodes = cfg.training.episodes
        num_uavs = cfg.environment.num_uavs

        self._write_config()
        stores = self.initial_stores()
        learner = SwarmLearner(cfg, num_uavs, self.dtype)
        history: List[EpisodeMetrics] = []
        checkpoints: List[str] = []

        logger.info(f"Treinamento iniciado: {episodes} episódios, M={num_uavs}, seed={seed}")
        for episode in range(episodes):
            metrics, stores = self.runner.run_episode(stores, episode, seed, learner=learner)
            history.append(metrics)
            logger.info(
                f"Episódio {episode}: tarefas={metrics.task_pct:.1f}% colisões={metrics.collisions} "
                f"energia={metrics.total_energy:.1f}J recompensa={metrics.mean_discounted_reward:.2f}"
            )

            last = episode == episodes - 1
            if (episode + 1) % cfg.training.checkpoint_interval == 0 or last:
                checkpoints.extend(self._save_checkpoints(stores, episode))
                self._write_metrics(history, learner)

        logger.info(f"Treinamento concluído: {len(checkpoints)} checkpoints em {self.output_dir}")
        return {
            "output_dir": str(self.output_dir),
            "metrics": str(self.output_dir / "metrics.csv"),
            "training_stats": str(self.output_dir / "training_stats.csv"),
            "psi_series": str(self.output_dir / "psi_series.csv"),
            "checkpoints": checkpoints,
            "episodes": len(history),
            "final_task_pct": history[-1].task_pct if history else 0.0,
        }

    def _save_checkpoints(self, stores: List[ParameterStore], episode: int) -> List[str]:
        paths = []
        for m, store in enumerate(stores):
            path = str(self.output_dir / "checkpoints" / checkpoint_name(episode, m))
            save_checkpoint(path, store, self.config.training.seed, episode, uav=m)
            paths.append(path)
        logger.info(f"Checkpoints do episódio {episode} gravados ({len(paths)} UAVs)")
        return paths

    def _write_metrics(self, history: List[EpisodeMetrics], learner: SwarmLearner):
        write_metrics(history, str(self.output_dir / "metrics.csv"), self.config.environment.num_uavs)
        write_training_stats(learner.stats, str(self.output_dir / "training_stats.csv"))
        write_psi_series(history, str(self.output_dir / "psi_series.csv"))

    def _write_config(self):
        path = self.output_dir / "config.json"
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8") as f:
                json.dump(self.config.to_json_dict(), f, indent=2, sort_keys=True)
        except OSError as e:
            raise SimulationError(f"Falha ao gravar configuração: {e}", path=str(path)) from e
