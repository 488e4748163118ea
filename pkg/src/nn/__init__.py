"""
NumPy neural network: convolutions, DO-Conv layers, the FSG network and its training loop
"""

from src.nn.network import FSGNet, GraspMaps, NetworkConfig, build_network

__all__ = ["FSGNet", "GraspMaps", "NetworkConfig", "build_network"]
