"""
FSG Grasping

Fuzzy-depth soft grasping: grasp detection and planning from RGB-D images
whose depth is unreliable on specular, transparent and flat objects.
"""

__version__ = "1.0.0"
__license__ = "MIT"

from src.fsg import main

__all__ = ["main"]
