"""
Fórmulas físicas do cenário: canal, taxa, energia por slot e objetivo Ψ.

Todas são funções puras; aceitam escalares ou arrays numpy.
"""

from typing import Optional

import numpy as np

from app.core.exceptions import ContractError, DomainError
from app.models import EnergyBreakdown, SlotOutcome, Task


def db_to_linear(value_db: float) -> float:
    return float(10.0 ** (value_db / 10.0))


def dbm_to_watts(value_dbm: float) -> float:
    return float(10.0 ** ((value_dbm - 30.0) / 10.0))


def channel_gain(distance, power_gain: float):
    """h = G0 / d² (modelo de visada direta, sem desvanecimento)"""
    d = np.asarray(distance, dtype=np.float64)
    if np.any(d <= 0):
        raise DomainError(f"Distância deve ser positiva: {distance}")
    gain = power_gain / (d * d)
    return float(gain) if gain.ndim == 0 else gain


def data_rate(gain, tx_power: float, noise_power: float, bandwidth: float):
    """r = B·log2(1 + P·h/σ²) em bits/s"""
    rate = bandwidth * np.log2(1.0 + tx_power * np.asarray(gain, dtype=np.float64) / noise_power)
    return float(rate) if np.ndim(rate) == 0 else rate


def slot_energy(config, task: Optional[Task], rate: float, moved_distance: float) -> EnergyBreakdown:
    """Energias (pairar, voo, recepção, processamento) de um UAV em um slot"""

    dt = config.slot_duration
    hover = config.hover_power * dt
    # Linear na velocidade: deslocamento máximo custa P_f·Δt
    fly = config.fly_power * (moved_distance / config.step_limit) * dt

    receive = process = 0.0
    if task is not None:
        if rate <= 0:
            raise ContractError("Tarefa atendida com taxa nula")
        receive = config.receive_power * task.size_bits / rate
        process = config.kappa * task.total_cycles
    return EnergyBreakdown(hover=hover, fly=fly, receive=receive, process=process)


def energy_scale(config) -> float:
    """Divisor da energia em Ψ (1 sem normalização)"""
    if not config.normalize_energy:
        return 1.0
    return config.num_uavs * (config.hover_power + config.fly_power) * config.slot_duration


def objective_psi(outcome: SlotOutcome, config) -> float:
    """Ψ = w1·E_total − w2·L_pt a partir das energias registradas"""
    total = sum(sum(e.as_tuple()) for e in outcome.energies)
    return config.w1 * total / energy_scale(config) - config.w2 * outcome.processed
