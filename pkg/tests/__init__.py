"""
Test suite for FSG grasping
"""

__version__ = "1.0.0"
