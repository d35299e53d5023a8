"""Line-chart recognition, formal description and Petri-net reconstruction."""

__version__ = "0.1.0"
