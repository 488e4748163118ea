"""
Samples, grasp labels, augmentation and on-disk storage
"""
