"""
Depth conditioning and network input assembly
"""
