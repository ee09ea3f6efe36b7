from .physics import channel_gain, data_rate, db_to_linear, dbm_to_watts, energy_scale, objective_psi, slot_energy
from .world import UavMecEnvironment, reflect

__all__ = [
    "channel_gain",
    "data_rate",
    "db_to_linear",
    "dbm_to_watts",
    "energy_scale",
    "objective_psi",
    "slot_energy",
    "UavMecEnvironment",
    "reflect",
]
