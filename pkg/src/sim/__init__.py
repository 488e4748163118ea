"""
Synthetic tabletop scenes, depth corruption, auto-labeling and the grasp outcome oracle
"""
