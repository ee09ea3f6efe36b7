"""
Trace de episódio em JSON-lines e o mapa de cobertura derivado dele.

O primeiro registro (slot = -1) guarda o posicionamento inicial; os demais,
um por slot executado.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from app.core.exceptions import SimulationError
from app.models import NeighborSet, SlotOutcome, WorldState
from app.services.orchestrator.metrics import write_csv


class TraceRecorder:
    """Acumula os registros de um episódio"""

    def __init__(self, grid_size: int, cell_of):
        self.grid_size = grid_size
        self.cell_of = cell_of
        self.records: List[Dict[str, Any]] = []

    def _cells(self, world: WorldState) -> List[int]:
        cells = []
        for uav in world.uavs:
            row, col = self.cell_of(uav.xy)
            cells.append(row * self.grid_size + col)
        return cells

    def _merged(self, world: WorldState) -> List[int]:
        merged = np.zeros((self.grid_size, self.grid_size), dtype=bool)
        for uav in world.uavs:
            merged |= uav.visited_grid
        return [int(i) for i in np.flatnonzero(merged)]

    def record_initial(self, world: WorldState):
        self.records.append({
            "slot": -1,
            "uav_positions": world.uav_positions()[:, :2].tolist(),
            "user_positions": world.user_positions().tolist(),
            "visited": self._cells(world),
            "merged_visited_cells": self._merged(world),
            "tasks_total": world.tasks_total,
        })

    def record_slot(self, world: WorldState, outcome: SlotOutcome, neighbors: NeighborSet):
        """Registro após execute_slot (posições já atualizadas)"""
        record = outcome.to_dict()
        record.update({
            "uav_positions": world.uav_positions()[:, :2].tolist(),
            "user_positions": world.user_positions().tolist(),
            "visited": self._cells(world),
            "merged_visited_cells": self._merged(world),
            "neighbors": [list(row) for row in neighbors.members],
        })
        self.records.append(record)

    def write(self, path: str) -> str:
        try:
            Path(path).parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8") as f:
                for record in self.records:
                    f.write(json.dumps(record, sort_keys=True) + "\n")
        except OSError as e:
            raise SimulationError(f"Falha ao gravar trace: {e}", path=path) from e
        return path


def read_trace(path: str) -> List[Dict[str, Any]]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return [json.loads(line) for line in f if line.strip()]
    except (OSError, json.JSONDecodeError) as e:
        raise SimulationError(f"Falha ao ler trace: {e}", path=path) from e


def coverage_counts(trace: List[Dict[str, Any]], grid_size: int) -> np.ndarray:
    """Visitas por célula (uma por UAV por slot executado)"""
    counts = np.zeros(grid_size * grid_size, dtype=np.int64)
    for record in trace:
        if record["slot"] < 0:
            continue
        for cell in record["visited"]:
            counts[cell] += 1
    return counts.reshape(grid_size, grid_size)


def emit_coverage_grid(trace: List[Dict[str, Any]], grid_size: int, path: Optional[str] = None) -> np.ndarray:
    """Mapa de calor da cobertura; grava CSV `row,c0,c1,…` quando `path` é dado"""
    counts = coverage_counts(trace, grid_size)
    if path:
        rows = []
        for r in range(grid_size):
            row = {"row": r}
            row.update({f"c{c}": int(counts[r, c]) for c in range(grid_size)})
            rows.append(row)
        write_csv(rows, path, ["row"] + [f"c{c}" for c in range(grid_size)])
    return counts
