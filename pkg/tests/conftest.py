import numpy as np
import pytest


def disk(size, radius, cx=None, cy=None):
    cx = (size - 1) / 2 if cx is None else cx
    cy = (size - 1) / 2 if cy is None else cy
    yy, xx = np.mgrid[:size, :size]
    return (xx - cx) ** 2 + (yy - cy) ** 2 <= radius ** 2


def square(size, side, top=None, left=None):
    top = (size - side) // 2 if top is None else top
    left = (size - side) // 2 if left is None else left
    m = np.zeros((size, size), bool)
    m[top:top + side, left:left + side] = True
    return m


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
