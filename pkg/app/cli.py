"""
Interface de linha de comando do SkyEdge Swarm.

Códigos de saída: 0 sucesso, 1 falha de execução, 2 uso incorreto.
"""

import json
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import click

from app.core.config import RunConfig, config_help_lines, load_run_config, settings
from app.core.exceptions import SimulationError
from app.core.logging import get_logger, setup_logging
from app.services.orchestrator.evaluation_service import EvaluationService, parse_value
from app.services.orchestrator.trace import emit_coverage_grid, read_trace
from app.services.orchestrator.training_service import TrainingService

logger = get_logger("cli")

CONFIG_EPILOG = "\b\nChaves de configuração (seção.alias (campo) = padrão):\n" + "\n".join(config_help_lines())


def _overrides(pairs: Sequence[str]) -> Dict[str, Any]:
    result = {}
    for pair in pairs:
        if "=" not in pair:
            raise click.BadParameter(f"esperado chave=valor, recebido {pair!r}", param_hint="--set")
        key, value = pair.split("=", 1)
        result[key.strip()] = parse_value(value)
    return result


def _config(path: Optional[str], pairs: Sequence[str] = (), **extra: Any) -> RunConfig:
    config = load_run_config(path)
    overrides = _overrides(pairs)
    overrides.update({k: v for k, v in extra.items() if v is not None})
    return config.with_overrides(overrides) if overrides else config


def _echo_json(data: Any):
    def clean(value):
        if isinstance(value, float) and math.isnan(value):
            return None
        if isinstance(value, dict):
            return {k: clean(v) for k, v in value.items()}
        if isinstance(value, list):
            return [clean(v) for v in value]
        return value

    click.echo(json.dumps(clean(data), indent=2, sort_keys=True))


@click.group(epilog=CONFIG_EPILOG)
@click.option("--log-level", default=None, help="Nível de log (padrão: LOG_LEVEL)")
def cli(log_level: Optional[str]):
    """SkyEdge Swarm: MEC com enxames de UAVs treinados por EPS-PPO com GAT."""
    setup_logging(level=log_level)


config_option = click.option(
    "--config", "config_path", type=click.Path(dir_okay=False), default=None,
    help="Arquivo JSON de configuração (padrão: DEFAULT_CONFIG_PATH)"
)
set_option = click.option("--set", "pairs", multiple=True, help="Substitui uma chave: --set R_cov=15")


@cli.command(epilog=CONFIG_EPILOG)
@config_option
@set_option
@click.option("--seed", type=int, default=None, help="Semente mestre")
@click.option("--out", "output_dir", type=click.Path(file_okay=False), default=None, help="Diretório de saída")
@click.option("--episodes", type=int, default=None, help="Número de episódios")
def train(config_path, pairs, seed, output_dir, episodes):
    """Treina o enxame e grava métricas e checkpoints."""
    config = _config(config_path, pairs, seed=seed, episodes=episodes)
    result = TrainingService(config, output_dir=output_dir).train()
    _echo_json(result)


@cli.command(name="eval", epilog=CONFIG_EPILOG)
@click.option("--checkpoint", required=True, type=click.Path(dir_okay=False), help="Checkpoint compartilhado pela frota")
@config_option
@set_option
@click.option("--episodes", type=int, default=10, show_default=True)
@click.option("--out", "output", type=click.Path(dir_okay=False), default=None, help="CSV de métricas por episódio")
def evaluate(checkpoint, config_path, pairs, episodes, output):
    """Avalia um checkpoint com ações gulosas, sem aprendizado."""
    config = _config(config_path, pairs)
    summary = EvaluationService(config).evaluate(checkpoint, episodes, output=output)
    _echo_json(summary)


@cli.command(epilog=CONFIG_EPILOG)
@click.option("--param", required=True, help="Chave a variar (alias ou nome do campo)")
@click.option("--values", required=True, help="Valores separados por vírgula: 5,15,25")
@click.option("--checkpoint", type=click.Path(dir_okay=False), default=None, help="Checkpoint (padrão: pesos iniciais)")
@config_option
@set_option
@click.option("--episodes", type=int, default=10, show_default=True)
@click.option("--out", "output_dir", type=click.Path(file_okay=False), default=None, help="Diretório dos CSVs")
def sweep(param, values, checkpoint, config_path, pairs, episodes, output_dir):
    """Reavalia para cada valor de um parâmetro (um CSV por valor)."""
    config = _config(config_path, pairs)
    items = [v for v in values.split(",") if v.strip()]
    if not items:
        raise click.BadParameter("nenhum valor informado", param_hint="--values")
    output_dir = output_dir or str(Path(settings.output_dir) / f"sweep_{param}")
    rows = EvaluationService(config).sweep(param, items, checkpoint, episodes, output_dir)
    _echo_json(rows)


def _specialized(pairs: Sequence[str]) -> Dict[int, str]:
    result = {}
    for pair in pairs:
        size, sep, path = pair.partition("=")
        if not sep or not size.strip().isdigit():
            raise click.BadParameter(f"esperado M=caminho, recebido {pair!r}", param_hint="--specialized")
        result[int(size)] = path
    return result


@cli.command()
@click.option("--general", required=True, type=click.Path(dir_okay=False), help="Checkpoint geral")
@click.option("--specialized", "specialized_pairs", multiple=True, help="Checkpoint especializado: M=caminho")
@click.option("--sizes", required=True, help="Tamanhos de frota: 2,4,6,8")
@config_option
@set_option
@click.option("--episodes", type=int, default=10, show_default=True)
@click.option("--out", "output_dir", type=click.Path(file_okay=False), default=None)
def compare(general, specialized_pairs, sizes, config_path, pairs, episodes, output_dir):
    """Compara o modelo geral com modelos especializados por tamanho de frota."""
    config = _config(config_path, pairs)
    try:
        fleet = [int(s) for s in sizes.split(",") if s.strip()]
    except ValueError:
        raise click.BadParameter(f"tamanhos inválidos: {sizes!r}", param_hint="--sizes")
    output_dir = output_dir or str(Path(settings.output_dir) / "compare")
    rows = EvaluationService(config).compare(general, _specialized(specialized_pairs), fleet, episodes, output_dir)
    _echo_json(rows)


@cli.command(epilog=CONFIG_EPILOG)
@config_option
@set_option
@click.option("--seed", type=int, default=None)
@click.option("--checkpoint", type=click.Path(dir_okay=False), default=None)
@click.option("--greedy", is_flag=True, help="Ações gulosas em vez de amostradas")
@click.option("--out", "output", type=click.Path(dir_okay=False), default=None, help="Arquivo JSONL (padrão: stdout)")
@click.option("--coverage", "coverage_path", type=click.Path(dir_okay=False), default=None, help="CSV do mapa de cobertura")
def trace(config_path, pairs, seed, checkpoint, greedy, output, coverage_path):
    """Emite o trace JSONL de um episódio, sem aprendizado."""
    config = _config(config_path, pairs, seed=seed)
    recorder = EvaluationService(config).trace(checkpoint, greedy=greedy)
    if output:
        recorder.write(output)
    else:
        for record in recorder.records:
            click.echo(json.dumps(record, sort_keys=True))
    if coverage_path:
        emit_coverage_grid(recorder.records, recorder.grid_size, coverage_path)


@cli.command()
@click.option("--trace", "trace_path", required=True, type=click.Path(dir_okay=False))
@config_option
@click.option("--out", "output", required=True, type=click.Path(dir_okay=False))
def coverage(trace_path, config_path, output):
    """Converte um trace JSONL no CSV de contagem de visitas por célula."""
    config = load_run_config(config_path)
    counts = emit_coverage_grid(read_trace(trace_path), config.environment.grid_size, output)
    _echo_json({"cells": int(counts.size), "visits": int(counts.sum()), "output": output})


@cli.command()
def serve():
    """Sobe a API HTTP (uvicorn)."""
    import uvicorn

    logger.info(f"🔧 Host: {settings.api_host} 🌐 Port: {settings.api_port} 🐛 Debug: {settings.debug}")
    uvicorn.run(
        "app.main:app",
        host=settings.api_host,
        port=settings.api_port,
        reload=settings.debug,
        log_level=settings.log_level.lower()
    )


def run_cli(argv: Optional[List[str]] = None) -> int:
    """Executa a CLI e devolve o código de saída"""
    try:
        result = cli.main(args=argv, prog_name="skyedge", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.Abort:
        click.echo("Abortado", err=True)
        return 1
    except SimulationError as e:
        logger.error(f"❌ {e}")
        click.echo(f"Erro: {e}", err=True)
        return 1
    return result if isinstance(result, int) else 0
