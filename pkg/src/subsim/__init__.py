"""Multi-robot underwater simulation, teleoperation and motion planning sandbox."""

__version__ = "0.1.0"
