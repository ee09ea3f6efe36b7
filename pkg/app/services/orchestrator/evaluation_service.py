from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.core.config import RunConfig, settings
from app.core.exceptions import CheckpointError
from app.core.logging import get_logger
from app.core.random import stream_seed
from app.models import EpisodeMetrics
from app.services.nn.checkpoint import load_checkpoint
from app.services.nn.params import ParameterStore
from app.services.orchestrator.metrics import summarize, write_csv, write_metrics
from app.services.orchestrator.rollout import SwarmRunner
from app.services.orchestrator.trace import TraceRecorder
from app.services.ppo.policy import init_model, model_layer_spec

logger = get_logger("evaluation_service")

# Mundos de avaliação: chaves (2³¹ + e,), disjuntas das chaves (e,) do treino
EVALUATION_KEY_OFFSET = 2 ** 31


def parse_value(raw: Any) -> Any:
    """'25' → 25, '2.5' → 2.5, 'true' → True; outros valores passam direto"""
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


class EvaluationService:
    """Avaliação gulosa de um checkpoint compartilhado por toda a frota"""

    def __init__(self, config: RunConfig, dtype=None):
        self.config = config
        self.dtype = np.dtype(dtype or settings.float_dtype)
        logger.info("EvaluationService inicializado")

    def load_store(self, checkpoint: Optional[str], config: Optional[RunConfig] = None) -> ParameterStore:
        """Checkpoint validado contra as dimensões da configuração (ou pesos iniciais)"""
        config = config or self.config
        if checkpoint is None:
            return init_model(config, stream_seed(config.training.seed, "init"), self.dtype)

        store, header = load_checkpoint(checkpoint)
        expected = {spec.name: spec.shape for spec in model_layer_spec(config)}
        actual = store.shapes()
        missing = sorted(set(expected) ^ set(actual))
        if missing:
            raise CheckpointError(f"Parâmetros incompatíveis com a configuração: {missing[:5]}", path=checkpoint)
        for name, shape in expected.items():
            if tuple(actual[name]) != shape:
                raise CheckpointError(
                    f"Dimensão de {name}: checkpoint {tuple(actual[name])}, configuração {shape}", path=checkpoint
                )
        logger.info(f"Checkpoint carregado: {checkpoint} (episódio {header.get('episode')})")
        return ParameterStore({n: a.astype(self.dtype) for n, a in store.items()}, store.version)

    def run(self, store: ParameterStore, config: RunConfig, episodes: int, greedy: bool = True) -> List[EpisodeMetrics]:
        runner = SwarmRunner(config, self.dtype)
        stores = [store] * config.environment.num_uavs
        seed = config.training.seed
        return [
            runner.run_episode(stores, episode, seed, greedy=greedy, key=(EVALUATION_KEY_OFFSET + episode,))[0]
            for episode in range(episodes)
        ]

    def evaluate(self, checkpoint: Optional[str], episodes: int, output: Optional[str] = None) -> Dict[str, Any]:
        """Resumo (média ± desvio) de `episodes` episódios sem aprendizado"""
        store = self.load_store(checkpoint)
        metrics = self.run(store, self.config, episodes)
        if output:
            write_metrics(metrics, output, self.config.environment.num_uavs)
        summary = summarize(metrics)
        logger.info(
            f"Avaliação: {episodes} episódios, tarefas={summary['task_pct_mean']:.1f}% "
            f"± {summary['task_pct_std']:.1f}"
        )
        return summary

    def sweep(
        self,
        param: str,
        values: Sequence[Any],
        checkpoint: Optional[str],
        episodes: int,
        output_dir: str
    ) -> List[Dict[str, Any]]:
        """Reavalia para cada valor de `param`; um arquivo de métricas por valor"""
        RunConfig.resolve_param(param)
        rows = []
        for raw in values:
            value = parse_value(raw)
            config = self.config.with_overrides({param: value})
            store = self.load_store(checkpoint, config)
            metrics = self.run(store, config, episodes)
            path = str(Path(output_dir) / f"sweep_{param}_{value}.csv")
            write_metrics(metrics, path, config.environment.num_uavs)

            row = {"param": param, "value": value, "metrics_file": path}
            row.update(summarize(metrics))
            rows.append(row)
            logger.info(f"Sweep {param}={value}: tarefas={row['task_pct_mean']:.1f}% colisões={row['collisions_mean']:.2f}")

        write_csv(rows, str(Path(output_dir) / f"sweep_{param}_summary.csv"))
        return rows

    def compare(
        self,
        general: str,
        specialized: Dict[int, str],
        fleet_sizes: Sequence[int],
        episodes: int,
        output_dir: str
    ) -> List[Dict[str, Any]]:
        """Modelo geral contra modelos especializados por tamanho de frota"""
        rows = []
        general_store = self.load_store(general)
        for size in fleet_sizes:
            config = self.config.with_overrides({"M": int(size)})
            candidates: List[Tuple[str, ParameterStore]] = [("general", general_store)]
            if int(size) in specialized:
                candidates.append(("specialized", self.load_store(specialized[int(size)], config)))
            for model, store in candidates:
                row = {"model": model, "M": int(size)}
                row.update(summarize(self.run(store, config, episodes)))
                rows.append(row)
        write_csv(rows, str(Path(output_dir) / "compare.csv"))
        return rows

    def trace(self, checkpoint: Optional[str] = None, greedy: bool = False, episode: int = 0) -> TraceRecorder:
        """Um episódio registrado slot a slot, sem aprendizado"""
        store = self.load_store(checkpoint)
        runner = SwarmRunner(self.config, self.dtype)
        recorder = TraceRecorder(runner.env.grid_size, runner.env.cell_of)
        stores = [store] * self.config.environment.num_uavs
        runner.run_episode(stores, episode, self.config.training.seed, greedy=greedy, trace=recorder)
        return recorder
