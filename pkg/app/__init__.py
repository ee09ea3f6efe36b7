"""
SkyEdge Swarm
Simulador descentralizado de MEC com enxames de UAVs (EPS-PPO com GAT)
"""

__version__ = "1.0.0"
__author__ = "SkyEdge Team"
