"""
Edge Grasp Network.

6-DoF grasp detection from single-view point clouds: edge grasps built from an
approach point and a contact point, scored by a graph network whose features are
rotation invariant either through augmentation or through Vector Neurons.
"""

__version__ = "0.1.0"

# Version tag written into every artifact (grasp records, datasets, checkpoints, reports)
FORMAT_VERSION = 1
