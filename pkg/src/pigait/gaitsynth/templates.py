"""Per-gait-type joint-angle templates.

Each joint curve is a truncated Fourier series over the gait cycle,
``a0 + sum_k (a_k cos(2 pi k p) + b_k sin(2 pi k p))`` for k = 1..4, with
phase ``p = 0`` at foot strike. Coefficients are stored as
``(a0, a1, b1, a2, b2, a3, b3, a4, b4)`` in degrees.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

N_HARMONICS = 4
JOINTS = ("hip", "knee", "ankle")


class GaitType(str, Enum):
    NORMAL = "normal"
    TOE_WALKING = "toe_walking"
    FLEXED_KNEE = "flexed_knee"
    FOOT_DRAG = "foot_drag"

    @property
    def abnormal(self) -> bool:
        return self is not GaitType.NORMAL


TEMPLATE_COEFFS = {
    "normal": {
        "hip": (15.123, 20.134, -0.428, -4.021, -2.71, -0.753, 1.192, -0.423, -0.156),
        "knee": (21.604, -1.569, -19.371, -13.706, 7.059, -0.918, 4.514, -0.423, 0.644),
        "ankle": (-0.245, -1.992, 5.06, 1.96, -6.535, -2.329, 0.403, 1.869, -0.002),
    },
    "toe_walking": {
        "hip": (18.782, 18.761, -1.884, -3.744, -1.69, -0.269, 0.319, -0.553, 0.332),
        "knee": (28.199, -2.515, -17.958, -9.734, 8.107, 0.353, 2.109, -1.232, 0.804),
        "ankle": (-15.889, -0.501, 6.392, -1.102, -3.473, -1.37, 1.915, 0.093, -0.869),
    },
    "flexed_knee": {
        "hip": (28.657, 18.392, -0.394, -3.116, -2.671, -1.148, 0.226, -0.406, 0.419),
        "knee": (41.356, -0.166, -11.456, -8.045, 1.953, -1.196, 2.439, -0.264, 0.644),
        "ankle": (9.19, -0.543, 4.668, 1.193, -4.821, -1.085, 1.578, 1.266, -0.716),
    },
    "foot_drag": {
        "hip": (10.72, 15.451, 2.117, -1.525, -1.494, -0.42, -0.041, -0.204, 0.282),
        "knee": (16.474, 0.566, -12.056, -6.894, 2.594, -1.445, 1.432, -1.41, 0.713),
        "ankle": (-6.602, -4.332, 9.168, 3.007, -3.608, -0.213, -0.099, 1.253, -0.714),
    },
}

# template phase of foot off (fraction of the cycle spent in stance)
TEMPLATE_FOOT_OFF = {
    "normal": 0.62,
    "toe_walking": 0.58,
    "flexed_knee": 0.62,
    "foot_drag": 0.64,
}


def fourier_basis(phase) -> np.ndarray:
    p = np.atleast_1d(np.asarray(phase, dtype=float))
    cols = [np.ones_like(p)]
    for k in range(1, N_HARMONICS + 1):
        cols += [np.cos(2 * np.pi * k * p), np.sin(2 * np.pi * k * p)]
    return np.column_stack(cols)


def coefficients(gait_type, joint: str) -> np.ndarray:
    return np.asarray(TEMPLATE_COEFFS[GaitType(gait_type).value][joint], dtype=float)


def template_angle(gait_type, joint: str, phase) -> np.ndarray:
    """Template angle in degrees at the given cycle phase(s)."""
    return fourier_basis(phase) @ coefficients(gait_type, joint)
