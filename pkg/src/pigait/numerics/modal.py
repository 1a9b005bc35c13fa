"""Single-mode structural oscillator and its Newmark time integrator."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit


class ResolutionError(ValueError):
    """Time step too coarse for the oscillator being integrated."""


@dataclass(frozen=True)
class ModalOscillator:
    modal_mass: float          # kg
    damping_ratio: float       # dimensionless, underdamped
    natural_frequency: float   # Hz

    def __post_init__(self):
        if not self.modal_mass > 0:
            raise ValueError(f"modal_mass must be > 0, got {self.modal_mass}")
        if not 0 < self.damping_ratio < 1:
            raise ValueError(f"damping_ratio must lie in (0, 1), got {self.damping_ratio}")
        if not self.natural_frequency > 0:
            raise ValueError(f"natural_frequency must be > 0, got {self.natural_frequency}")

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * self.natural_frequency

    @property
    def stiffness(self) -> float:
        return self.omega ** 2 * self.modal_mass

    @property
    def damping(self) -> float:
        return 2.0 * self.damping_ratio * self.omega * self.modal_mass


# Sub-step size cap, as a fraction of one radian of the mode. Average
# acceleration has period elongation ~ (w h)^2 / 12, so 0.01 keeps the
# accumulated phase drift below ~1e-5 rad per radian of motion.
_MAX_PHASE_STEP = 0.01


@njit(cache=True)
def _newmark(m, c, k, f, dt, u0, v0, sub):
    n = f.size
    u = np.empty(n)
    v = np.empty(n)
    a = np.empty(n)
    beta = 0.25
    gamma = 0.5
    h = dt / sub
    a0 = 1.0 / (beta * h * h)
    a1 = gamma / (beta * h)
    a2 = 1.0 / (beta * h)
    a3 = 1.0 / (2.0 * beta) - 1.0
    a4 = gamma / beta - 1.0
    a5 = h * (gamma / (2.0 * beta) - 1.0)
    keff = k + a1 * c + a0 * m
    uc = u0
    vc = v0
    ac = (f[0] - c * v0 - k * u0) / m
    u[0] = uc
    v[0] = vc
    a[0] = ac
    for i in range(1, n):
        f0 = f[i - 1]
        df = f[i] - f0
        for j in range(1, sub + 1):
            fj = f0 + df * j / sub
            rhs = fj + m * (a0 * uc + a2 * vc + a3 * ac) + c * (a1 * uc + a4 * vc + a5 * ac)
            un = rhs / keff
            an = a0 * (un - uc) - a2 * vc - a3 * ac
            vn = vc + h * ((1.0 - gamma) * ac + gamma * an)
            uc = un
            vc = vn
            ac = an
        u[i] = uc
        v[i] = vc
        a[i] = ac
    return u, v, a


def substeps_for(osc: ModalOscillator, dt: float) -> int:
    return max(1, math.ceil(osc.omega * dt / _MAX_PHASE_STEP))


def integrate_modal(osc: ModalOscillator, force, dt: float, u0: float = 0.0, v0: float = 0.0,
                    substeps: int | None = None):
    """Solve ``m u'' + c u' + k u = F(t)`` for one mode.

    Newmark average acceleration (beta=1/4, gamma=1/2). Each output step is
    split into ``substeps`` internal steps with the force interpolated
    linearly; by default the count is chosen from the mode's frequency so the
    period error stays small. ``substeps=1`` is the textbook single-step
    scheme.

    Returns ``(u, v, a)`` arrays of the same length as ``force``.
    """
    if not dt > 0:
        raise ResolutionError(f"dt must be positive, got {dt}")
    if dt > 0.1 / osc.natural_frequency:
        raise ResolutionError(
            f"dt={dt:g} s exceeds 0.1/natural_frequency={0.1 / osc.natural_frequency:g} s")
    f = np.ascontiguousarray(force, dtype=np.float64)
    if f.ndim != 1:
        raise ValueError("force must be a 1-D series")
    if f.size == 0:
        return np.zeros(0), np.zeros(0), np.zeros(0)
    sub = substeps_for(osc, dt) if substeps is None else int(substeps)
    if sub < 1:
        raise ValueError("substeps must be >= 1")
    return _newmark(osc.modal_mass, osc.damping, osc.stiffness, f, float(dt),
                    float(u0), float(v0), sub)
