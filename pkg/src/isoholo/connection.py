"""Wilczek-Zee and mixed-state gauge potentials, gauge transformations.

Index convention (``ROW_INITIAL``): ``A[a, b] = <xi_b | d_mu xi_a>``.  The row
index is the label of the initial frame vector, so coefficient *rows* are
transported by right-multiplication, ``c <- c (I - A dq)``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import AntiHermiticityDefect, ChartDomainViolation, NonUnitaryGauge
from .frames import (DEFAULT_FD_STEP, PHI, POLE_MARGIN, THETA, ControlPoint, FrameFamily,
                     frame_derivative_many)
from .numerics import IDENTITY_2, SIGMA_Y, dagger, max_abs
from .statekit import SpectralWeights

ROW_INITIAL = "row-initial"
DEFECT_LIMIT = 1e-6


@dataclass(frozen=True)
class ConnectionSample:
    q: ControlPoint
    mu: int
    matrix: np.ndarray
    defect: float = 0.0
    convention: str = ROW_INITIAL


def connection_many(frame, chart_id, coords, mu, h=DEFAULT_FD_STEP, check=True, with_defect=False):
    """Pure Wilczek-Zee component ``A_mu`` at ``(K, d)`` points, shape ``(K, N, N)``.

    The finite-difference result is projected onto its anti-Hermitian part.
    The pre-projection defect ``max|A + A^H|`` is returned when ``with_defect``.
    """
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    f = frame.evaluate_many(chart_id, coords, check=check)
    df = frame_derivative_many(frame, chart_id, coords, mu, h, check=check)
    a = df @ dagger(f)
    defect = max_abs(a + dagger(a))
    if defect > DEFECT_LIMIT:
        raise AntiHermiticityDefect(
            f"connection anti-Hermiticity defect {defect:.3e} exceeds {DEFECT_LIMIT:g}; "
            "check the step h or the smoothness of the frame"
        )
    a = 0.5 * (a - dagger(a))
    return (a, defect) if with_defect else a


def shift_sum(pure, weights):
    """sum_k lambda_k A[(a+k) mod N, (b+k) mod N] over the last two axes."""
    lam = weights.lambdas if isinstance(weights, SpectralWeights) else tuple(weights)
    n = pure.shape[-1]
    out = np.zeros_like(pure)
    for k, lk in enumerate(lam):
        idx = (np.arange(n) + k) % n
        out = out + lk * pure[..., idx[:, None], idx[None, :]]
    return out


def mixed_connection_many(frame, weights, chart_id, coords, mu, h=DEFAULT_FD_STEP, check=True,
                          with_defect=False):
    a, defect = connection_many(frame, chart_id, coords, mu, h, check=check, with_defect=True)
    mixed = shift_sum(a, weights)
    return (mixed, defect) if with_defect else mixed


def wilczek_zee(frame, q, mu, h=DEFAULT_FD_STEP):
    a, defect = connection_many(frame, q.chart_id, [q.coords], mu, h, with_defect=True)
    return ConnectionSample(q, mu, a[0], defect)


def mixed_connection(frame, weights, q, mu, h=DEFAULT_FD_STEP):
    """Mixed-state potential ``sum_k lambda_k <xi_{b+k}| d_mu xi_{a+k}>`` at ``q``.

    Computed as the weighted sum of index-shifted copies of the pure
    Wilczek-Zee matrix of the base frame.
    """
    if not isinstance(weights, SpectralWeights):
        weights = SpectralWeights(tuple(weights))
    pure = wilczek_zee(frame, q, mu, h)
    return ConnectionSample(q, mu, shift_sum(pure.matrix, weights), pure.defect)


class GaugeTransform:
    """Pointwise unitary change of frame labels, ``xi'_a = sum_c V_ac xi_c``.

    ``func`` maps ``(K, d)`` chart coordinates to ``(K, N, N)`` unitaries.
    """

    def __init__(self, func, n, name="gauge"):
        self._func = func
        self.n = n
        self.name = name

    def __repr__(self):
        return f"GaugeTransform({self.name!r})"

    def evaluate_many(self, coords):
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        v = np.asarray(self._func(coords), dtype=complex)
        defect = max_abs(dagger(v) @ v - np.eye(self.n))
        if defect > 1e-12:
            raise NonUnitaryGauge(f"gauge {self.name!r} deviates from unitary by {defect:.3e}")
        return v

    def __call__(self, q):
        coords = q.coords if isinstance(q, ControlPoint) else q
        return self.evaluate_many([coords])[0]

    def derivative_many(self, coords, mu, h=DEFAULT_FD_STEP):
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        step = np.zeros(coords.shape[-1])
        step[mu] = h
        return (self.evaluate_many(coords + step) - self.evaluate_many(coords - step)) / (2 * h)


def gauge_transform_many(a, gauge, coords, mu, h=DEFAULT_FD_STEP):
    """``V A_mu V^H + (d_mu V) V^H`` for stacked samples."""
    v = gauge.evaluate_many(coords)
    dv = gauge.derivative_many(coords, mu, h)
    out = v @ a @ dagger(v) + dv @ dagger(v)
    defect = max_abs(out + dagger(out))
    if defect > 1e-9:
        raise AntiHermiticityDefect(f"gauge-transformed connection defect {defect:.3e}")
    return out


def gauge_transform(samples, gauge, h=DEFAULT_FD_STEP):
    """Apply a gauge transformation to a sequence of :class:`ConnectionSample`."""
    out = []
    for s in samples:
        m = gauge_transform_many(s.matrix[None], gauge, [s.q.coords], s.mu, h)[0]
        out.append(ConnectionSample(s.q, s.mu, m, s.defect, s.convention))
    return out


class GaugedFrame(FrameFamily):
    """Frame with labels rotated pointwise by a :class:`GaugeTransform`."""

    def __init__(self, frame, gauge):
        self.frame = frame
        self.gauge = gauge
        super().__init__(frame.n, frame.dim, None, frame.charts, pure=frame.pure,
                         name=f"{gauge.name}({frame.name})")

    def evaluate_many(self, chart_id, coords, check=True):
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        return self.gauge.evaluate_many(coords) @ self.frame.evaluate_many(chart_id, coords, check=check)


def apply_gauge(frame, gauge):
    return frame if gauge is None else GaugedFrame(frame, gauge)


def _sigma_y_rotation(coeff):
    """exp(i * coeff * phi * sigma_y) as a gauge on (theta, phi) charts."""

    def func(coords):
        angle = coeff * coords[:, PHI]
        c, s = np.cos(angle), np.sin(angle)
        return c[:, None, None] * IDENTITY_2 + 1j * s[:, None, None] * SIGMA_Y

    return func


def iontrap_north_gauge(r):
    """V_N = exp(-i r sigma_y phi); regularises the potential at the north pole."""
    return GaugeTransform(_sigma_y_rotation(-r), 2, name="north")


def iontrap_south_gauge(r):
    """V_S = exp(+i r sigma_y phi); regularises the potential at the south pole."""
    return GaugeTransform(_sigma_y_rotation(r), 2, name="south")


def iontrap_gauge(chart_id, r):
    """Gauge attached to a sphere chart of the ion-trap model (None = identity)."""
    return {"equatorial": None, "north": iontrap_north_gauge(r), "south": iontrap_south_gauge(r)}[chart_id]


def iontrap_connection_closed_form(patch, r, q, mu=PHI):
    """Closed-form ion-trap mixed potential on a patch.

    ``A_phi = i r sigma_y cos(theta)`` (equatorial),
    ``-i r sigma_y (1 - cos(theta))`` (north) or ``i r sigma_y (1 + cos(theta))``
    (south); ``A_theta = 0`` on every patch.
    """
    theta = q.coords[THETA]
    domains = {
        "equatorial": (POLE_MARGIN, np.pi - POLE_MARGIN),
        "north": (0.0, np.pi - POLE_MARGIN),
        "south": (POLE_MARGIN, np.pi),
    }
    if patch not in domains:
        raise ChartDomainViolation(f"unknown patch {patch!r}")
    lo, hi = domains[patch]
    if not lo <= theta <= hi:
        raise ChartDomainViolation(f"theta={theta} outside {patch} patch [{lo}, {hi}]")
    if mu == THETA:
        return ConnectionSample(q, mu, np.zeros((2, 2), dtype=complex))
    coeff = {
        "equatorial": np.cos(theta),
        "north": -(1.0 - np.cos(theta)),
        "south": 1.0 + np.cos(theta),
    }[patch]
    return ConnectionSample(q, mu, 1j * r * coeff * SIGMA_Y)


__all__ = [
    "ROW_INITIAL", "ConnectionSample", "GaugeTransform", "GaugedFrame",
    "apply_gauge", "connection_many", "gauge_transform", "gauge_transform_many",
    "iontrap_connection_closed_form", "iontrap_gauge", "iontrap_north_gauge",
    "iontrap_south_gauge", "mixed_connection", "mixed_connection_many", "shift_sum",
    "wilczek_zee",
]
