"""Self-supervised 2D animal pose estimation from unlabelled images and an
unpaired, synthetically generated prior of 2D poses."""

__version__ = "0.1.0"
