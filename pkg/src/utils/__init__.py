"""
Utility modules for FSG grasping
"""

from src.utils.reporter import BenchmarkReporter, Reporter, TrainReporter

__all__ = ["Reporter", "TrainReporter", "BenchmarkReporter"]
