"""Dermoscopic lesion classification: preprocessing, segmentation, ABCD
features, and a neuro-fuzzy classifier trained by an imperialist
competitive algorithm."""

__version__ = "0.1.0"
