#!/usr/bin/env python3

"""
Script de aceitação em escala de bancada: treino desk (M=4, N=15, L=150 m,
T=60, 300 episódios) seguido das verificações de tendência.
"""

import filecmp
import json
import math
import sys
from pathlib import Path

import numpy as np

# Adiciona o diretório do projeto ao Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from app.core.config import load_profile
from app.core.logging import setup_logging, get_logger
from app.models import SlotAction
from app.services.environment import UavMecEnvironment, energy_scale
from app.services.orchestrator import EvaluationService, TrainingService, read_metrics
from app.services.orchestrator.training_service import checkpoint_name

WINDOW = 50
EVAL_EPISODES = 20
CONSTRAINT_SLOTS = 100_000


def check_learning(metrics, logger) -> bool:
    first = metrics.head(WINDOW)
    last = metrics.tail(WINDOW)

    task_first, task_last = first["task_pct"].mean(), last["task_pct"].mean()
    ok_tasks = task_last >= 85.0 and task_last >= task_first + 20.0
    logger.info(f"Tarefas: primeiros {WINDOW} = {task_first:.1f}%, últimos {WINDOW} = {task_last:.1f}% -> {'OK' if ok_tasks else 'FALHA'}")

    col_first, col_last = first["collisions"].mean(), last["collisions"].mean()
    ok_collisions = col_last < 0.2 and (col_last < 0.25 * col_first or col_last == 0.0)
    logger.info(f"Colisões: primeiros {WINDOW} = {col_first:.2f}, últimos {WINDOW} = {col_last:.2f} -> {'OK' if ok_collisions else 'FALHA'}")
    return ok_tasks and ok_collisions


def check_coverage_sweep(service, checkpoint, output_dir, logger) -> bool:
    rows = service.sweep("R_cov", [5, 10, 15, 25], checkpoint, EVAL_EPISODES, str(output_dir))
    ok = True
    for before, after in zip(rows, rows[1:]):
        pooled = math.sqrt((before["task_pct_std"] ** 2 + after["task_pct_std"] ** 2) / EVAL_EPISODES)
        if after["task_pct_mean"] + pooled < before["task_pct_mean"]:
            ok = False
        logger.info(f"R_cov {before['value']} -> {after['value']}: {before['task_pct_mean']:.1f}% -> {after['task_pct_mean']:.1f}% (EP {pooled:.2f})")
    return ok


def check_scalability(service, checkpoint, output_dir, logger) -> bool:
    rows = service.sweep("M", [2, 6, 8], checkpoint, EVAL_EPISODES, str(output_dir))
    for row in rows:
        logger.info(f"M={row['value']}: tarefas={row['task_pct_mean']:.1f}% energia/tarefa={row['energy_per_task_J_mean']:.2f} J")
    return rows[-1]["task_pct_mean"] >= 60.0


def check_slot_constraints(config, logger, target_slots: int = CONSTRAINT_SLOTS) -> bool:
    """Ações aleatórias por `target_slots` slots; cada slot confere atribuição, movimento e Ψ"""
    env = UavMecEnvironment(config.environment)
    cfg = env.config
    rng = np.random.default_rng(config.training.seed)
    slots = failures = episode = 0

    while slots < target_slots:
        world = env.reset(config.training.seed, key=(episode,))
        episode += 1
        while not world.done and slots < target_slots:
            users_before = world.user_positions().copy()
            actions = [
                SlotAction(*rng.normal(0.0, cfg.step_limit, size=2), int(rng.integers(-1, cfg.num_users)))
                for _ in world.uavs
            ]
            outcome = env.execute_slot(world, actions)
            uav_xy = world.uav_positions()[:, :2]
            slots += 1

            users = [n for n, _ in outcome.assignment]
            uavs = [m for _, m in outcome.assignment]
            energy = sum(
                cfg.hover_power * cfg.slot_duration
                + cfg.fly_power * float(np.hypot(*outcome.displacements[m])) / cfg.step_limit * cfg.slot_duration
                + parts.receive + parts.process
                for m, parts in enumerate(outcome.energies)
            )
            ok = (
                len(set(users)) == len(users)
                and len(set(uavs)) == len(uavs)
                and all(np.linalg.norm(users_before[n] - uav_xy[m]) <= cfg.coverage_radius for n, m in outcome.assignment)
                and np.all(np.linalg.norm(outcome.displacements, axis=1) <= cfg.step_limit + 1e-9)
                and np.all((uav_xy >= 0) & (uav_xy <= cfg.area_size))
                and math.isclose(outcome.psi, cfg.w1 * energy / energy_scale(cfg) - cfg.w2 * len(outcome.assignment), rel_tol=1e-9, abs_tol=1e-12)
            )
            failures += 0 if ok else 1

    logger.info(f"Restrições por slot: {slots} slots em {episode} episódios, {failures} falhas -> {'OK' if failures == 0 else 'FALHA'}")
    return failures == 0


def check_determinism(config, output_dir, logger) -> bool:
    short = config.with_overrides({"episodes": 3, "checkpoint_interval": 3})
    paths = []
    for run in ("a", "b"):
        result = TrainingService(short, output_dir=str(output_dir / run)).train()
        paths.append(result["metrics"])
    ok = filecmp.cmp(paths[0], paths[1], shallow=False)
    logger.info(f"Determinismo dos CSVs: {'OK' if ok else 'FALHA'}")
    return ok


def main():
    """Função principal"""

    setup_logging()
    logger = get_logger("acceptance")

    print("=" * 60)
    print("🛩️  SKYEDGE SWARM - ACEITAÇÃO DESK-SCALE")
    print("=" * 60)

    output_dir = project_root / "runs" / "acceptance"
    config = load_profile("desk")

    result = TrainingService(config, output_dir=str(output_dir / "train")).train()
    metrics = read_metrics(result["metrics"])
    last_episode = config.training.episodes - 1
    checkpoint = str(output_dir / "train" / "checkpoints" / checkpoint_name(last_episode, 0))

    service = EvaluationService(config)
    checks = {
        "learning": check_learning(metrics, logger),
        "coverage_sweep": check_coverage_sweep(service, checkpoint, output_dir / "sweep_rcov", logger),
        "scalability": check_scalability(service, checkpoint, output_dir / "sweep_m", logger),
        "determinism": check_determinism(config, output_dir / "determinism", logger),
        "slot_constraints": check_slot_constraints(config, logger),
    }

    output_dir.mkdir(parents=True, exist_ok=True)
    (output_dir / "acceptance.json").write_text(json.dumps({name: bool(ok) for name, ok in checks.items()}, indent=2))

    for name, ok in checks.items():
        print(f"{'✅' if ok else '❌'} {name}")

    if not all(checks.values()):
        sys.exit(1)


if __name__ == "__main__":
    main()
