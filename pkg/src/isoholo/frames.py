"""Orthonormal frames of degenerate subspaces over charts of parameter space.

A frame family maps chart coordinates ``q`` to ``N`` orthonormal vectors,
returned as the rows of an ``(N, dim)`` array.  Evaluators are vectorised:
``evaluate_many`` takes ``(K, d)`` coordinates and returns ``(K, N, dim)``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ChartDomainViolation, LengthMismatch, NotOrthonormal
from .numerics import max_abs
from .statekit import SpectralWeights

DEFAULT_FD_STEP = 1e-5
POLE_MARGIN = 0.05
ORTHONORMAL_REPAIR_THRESHOLD = 1e-8

THETA, PHI = 0, 1


@dataclass(frozen=True)
class Chart:
    """Coordinate chart: per-coordinate closed bounds and optional periods.

    A coordinate with a period is unbounded (angles may be unwrapped).
    """

    name: str
    bounds: tuple
    periods: tuple

    @property
    def dim(self):
        return len(self.bounds)

    def violations(self, coords):
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        if coords.shape[-1] != self.dim:
            raise ChartDomainViolation(
                f"chart {self.name!r} has {self.dim} coordinates, got {coords.shape[-1]}"
            )
        bad = ~np.all(np.isfinite(coords), axis=-1)
        for i, (lo, hi) in enumerate(self.bounds):
            if self.periods[i] is None:
                bad |= (coords[:, i] < lo) | (coords[:, i] > hi)
        return bad

    def check(self, coords):
        bad = self.violations(coords)
        if np.any(bad):
            point = np.atleast_2d(coords)[int(np.argmax(bad))]
            raise ChartDomainViolation(
                f"point {tuple(float(c) for c in point)} outside chart {self.name!r} "
                f"(bounds {self.bounds})"
            )


@dataclass(frozen=True)
class ControlPoint:
    chart_id: str
    coords: tuple

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(float(c) for c in self.coords))


class FrameFamily:
    """Smooth map from chart coordinates to an ordered orthonormal N-frame.

    Parameters
    ----------
    n, dim : int
        Number of frame vectors and ambient dimension.
    evaluator : callable
        ``(K, d) -> (K, n, dim)`` if ``vectorized`` else ``(d,) -> (n, dim)``.
    charts : dict[str, Chart]
    pure : bool
        Whether the evaluator is free of side effects (safe to share).
    """

    def __init__(self, n, dim, evaluator, charts, vectorized=True, pure=True, name="frame"):
        self.n = int(n)
        self.dim = int(dim)
        self._evaluator = evaluator
        self.charts = dict(charts)
        self.vectorized = vectorized
        self.pure = pure
        self.name = name

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r}, n={self.n}, dim={self.dim})"

    def chart(self, chart_id):
        try:
            return self.charts[chart_id]
        except KeyError:
            raise ChartDomainViolation(
                f"frame {self.name!r} has no chart {chart_id!r}; known: {sorted(self.charts)}"
            ) from None

    def evaluate_many(self, chart_id, coords, check=True):
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        chart = self.chart(chart_id)
        if check:
            chart.check(coords)
        if self.vectorized:
            out = np.asarray(self._evaluator(coords), dtype=complex)
        else:
            out = np.array([self._evaluator(c) for c in coords], dtype=complex)
        if out.shape != (len(coords), self.n, self.dim):
            raise LengthMismatch(
                f"frame evaluator returned shape {out.shape}, expected {(len(coords), self.n, self.dim)}"
            )
        return out

    def evaluate(self, q, check=True):
        return self.evaluate_many(q.chart_id, [q.coords], check=check)[0]


def gram_defect(vectors):
    """max |<v_a|v_b> - delta_ab| over the last two axes."""
    v = np.asarray(vectors)
    gram = np.conj(v) @ np.swapaxes(v, -1, -2)
    return max_abs(gram - np.eye(v.shape[-2]))


def modified_gram_schmidt(vectors):
    """Orthonormalise the rows of ``(..., n, dim)`` in order."""
    v = np.array(vectors, dtype=complex)
    for a in range(v.shape[-2]):
        for b in range(a):
            overlap = np.sum(np.conj(v[..., b, :]) * v[..., a, :], axis=-1)
            v[..., a, :] -= overlap[..., None] * v[..., b, :]
        v[..., a, :] /= np.linalg.norm(v[..., a, :], axis=-1)[..., None]
    return v


def sphere_charts():
    """Equatorial chart (both poles excluded) and the two polar charts."""
    period = (None, 2 * np.pi)
    return {
        "equatorial": Chart("equatorial", ((POLE_MARGIN, np.pi - POLE_MARGIN), (-np.inf, np.inf)), period),
        "north": Chart("north", ((0.0, np.pi - POLE_MARGIN), (-np.inf, np.inf)), period),
        "south": Chart("south", ((POLE_MARGIN, np.pi), (-np.inf, np.inf)), period),
    }


def _dark_states(coords):
    theta, phi = coords[:, 0], coords[:, 1]
    ct, st, cp, sp = np.cos(theta), np.sin(theta), np.cos(phi), np.sin(phi)
    zero = np.zeros_like(theta)
    d0 = np.stack([ct * cp, ct * sp, -st, zero], axis=-1)
    d1 = np.stack([-sp, cp, zero, zero], axis=-1)
    return np.stack([d0, d1], axis=1).astype(complex)


def iontrap_dark_frame():
    """Zero-energy dark states of the tripod ion-trap Hamiltonian.

    Basis order is (|0>, |1>, |a>, |e>); coordinates are (theta, phi) in radians.
    """
    return FrameFamily(2, 4, _dark_states, sphere_charts(), name="iontrap_dark")


def _planar_rotation(coords):
    t = coords[:, 0]
    c, s = np.cos(t), np.sin(t)
    return np.stack([np.stack([c, s], -1), np.stack([-s, c], -1)], axis=1).astype(complex)


def planar_rotation_frame():
    """Frame {(cos t, sin t), (-sin t, cos t)} of C^2 on a circle chart."""
    charts = {"circle": Chart("circle", ((-np.inf, np.inf),), (2 * np.pi,))}
    return FrameFamily(2, 2, _planar_rotation, charts, name="planar_rotation")


BUILTIN_FRAMES = {
    "iontrap_dark": iontrap_dark_frame,
    "planar_rotation": planar_rotation_frame,
}


def _validated(evaluator, vectorized, repair):
    def run(coords):
        out = np.asarray(evaluator(coords), dtype=complex)
        if repair:
            return modified_gram_schmidt(out)
        defect = gram_defect(out)
        if defect > ORTHONORMAL_REPAIR_THRESHOLD:
            raise NotOrthonormal(f"frame vectors deviate from orthonormal by {defect:.3e}")
        return out

    return run


def custom_frame(spec=None, *, evaluator=None, tabulated=None, n=None, dim=None,
                 charts=None, vectorized=False, pure=True, repair=False, name="custom"):
    """Build a :class:`FrameFamily` from a user description.

    Exactly one of the following is used:

    * ``spec`` -- a builtin name (``"iontrap_dark"``, ``"planar_rotation"``),
      or a dict ``{"closed_form": name}`` / ``{"tabulated": [...]}`` as found in
      scenario files;
    * ``evaluator`` -- a callable returning the frame vectors as rows, together
      with ``n``, ``dim`` and ``charts``;
    * ``tabulated`` -- a list of ``{"coords": [...], "vectors": [[...], ...]}``
      samples.  Only the listed points can be evaluated.

    Orthonormality is checked on every evaluation; drift above 1e-8 raises
    :class:`NotOrthonormal` unless ``repair`` is set, in which case the vectors
    are re-orthonormalised by modified Gram-Schmidt.
    """
    if isinstance(spec, str):
        spec = {"closed_form": spec}
    if isinstance(spec, dict):
        if set(spec) == {"closed_form"}:
            try:
                return BUILTIN_FRAMES[spec["closed_form"]]()
            except KeyError:
                raise ValueError(
                    f"unknown closed-form frame {spec['closed_form']!r}; known: {sorted(BUILTIN_FRAMES)}"
                ) from None
        if set(spec) == {"tabulated"}:
            tabulated = spec["tabulated"]
        else:
            raise ValueError("frame spec needs exactly one of 'closed_form' or 'tabulated'")

    if tabulated is not None:
        return _tabulated_frame(tabulated, repair=repair, name=name)
    if evaluator is None or n is None or dim is None or charts is None:
        raise ValueError("custom_frame needs a spec, a tabulation, or evaluator with n, dim, charts")
    return FrameFamily(n, dim, _validated(evaluator, vectorized, repair), charts,
                       vectorized=vectorized, pure=pure, name=name)


def _vector_entry(x):
    if isinstance(x, (list, tuple)) and len(x) == 2:
        return complex(x[0], x[1])
    return complex(x)


def _tabulated_frame(samples, repair=False, name="tabulated"):
    if not samples:
        raise ValueError("tabulated frame needs at least one sample")
    coords = np.array([s["coords"] for s in samples], dtype=float)
    vectors = np.array(
        [[[_vector_entry(x) for x in vec] for vec in s["vectors"]] for s in samples], dtype=complex
    )
    if repair:
        vectors = modified_gram_schmidt(vectors)
    else:
        defect = gram_defect(vectors)
        if defect > ORTHONORMAL_REPAIR_THRESHOLD:
            raise NotOrthonormal(f"tabulated frame deviates from orthonormal by {defect:.3e}")
    d = coords.shape[1]
    chart = Chart("tabulated", tuple((-np.inf, np.inf) for _ in range(d)), (None,) * d)

    def lookup(q):
        dist = np.max(np.abs(coords - q), axis=1)
        i = int(np.argmin(dist))
        if dist[i] > 1e-12:
            raise ChartDomainViolation(f"no tabulated frame sample at {tuple(q)}")
        return vectors[i]

    _, n, dim = vectors.shape
    return FrameFamily(n, dim, lookup, {"tabulated": chart}, vectorized=False, name=name)


def frame_derivative_many(frame, chart_id, coords, mu, h=DEFAULT_FD_STEP, check=True):
    """Central-difference derivative along coordinate ``mu`` at ``(K, d)`` points."""
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    step = np.zeros(coords.shape[-1])
    step[mu] = h
    plus = frame.evaluate_many(chart_id, coords + step, check=check)
    minus = frame.evaluate_many(chart_id, coords - step, check=check)
    return (plus - minus) / (2.0 * h)


def frame_derivative(frame, q, mu, h=DEFAULT_FD_STEP):
    """d/dq_mu of each frame vector at ``q``, as an ``(N, dim)`` array."""
    return frame_derivative_many(frame, q.chart_id, [q.coords], mu, h)[0]


class IsoEntangledFrame(FrameFamily):
    """Lift of a base frame to system (x) ancilla with a common reduced spectrum.

    ``Xi_a = sum_k sqrt(lambda_k) xi_{(a+k) mod N} (x) phi_k``.  Every Xi_a
    reduces to a density operator with eigenvalues ``weights``.
    """

    def __init__(self, base, weights, ancilla_basis=None):
        if not isinstance(weights, SpectralWeights):
            weights = SpectralWeights(tuple(weights))
        if len(weights) != base.n:
            raise LengthMismatch(f"{len(weights)} weights for a frame of {base.n} vectors")
        n = base.n
        phi = np.eye(n, dtype=complex) if ancilla_basis is None else np.asarray(ancilla_basis, dtype=complex)
        if phi.shape != (n, n):
            raise LengthMismatch(f"ancilla basis must be {n}x{n}")
        self.base = base
        self.weights = weights
        self.ancilla_basis = phi
        self._shift = (np.arange(n)[:, None] + np.arange(n)[None, :]) % n
        self._root = np.sqrt(weights.as_array())
        super().__init__(n, base.dim * n, None, base.charts, vectorized=True,
                         pure=base.pure, name=f"iso({base.name})")

    def evaluate_many(self, chart_id, coords, check=True):
        xi = self.base.evaluate_many(chart_id, coords, check=check)
        shifted = xi[:, self._shift, :]  # (K, a, k, dimS)
        out = np.einsum("k,xakd,ke->xade", self._root, shifted, self.ancilla_basis)
        return out.reshape(len(xi), self.n, self.dim)


def lift_iso_entangled(base, weights, ancilla_basis=None):
    return IsoEntangledFrame(base, weights, ancilla_basis)
