"""Holonomy of closed loops: two numerical integrators, closed forms, and the
reduced-state transformations of the ion-trap example.

Results follow the ``row-initial`` convention of :mod:`isoholo.connection`:
frame vector ``a`` at the start is carried to ``sum_b U[a, b] xi_b`` at the end.
``U`` is expressed against the frame evaluated at the *final* sample; for
single-valued frames that is the starting frame.  ``HolonomyResult.transport``
re-expresses it against the starting frame, which matters for gauges that do
not return to themselves around the loop.
"""

from dataclasses import dataclass, field

import numpy as np

from .connection import (ROW_INITIAL, apply_gauge, connection_many, gauge_transform_many,
                         shift_sum)
from .errors import ConventionMismatch, DimensionMismatch, NoConvergence, NonClosure
from .frames import DEFAULT_FD_STEP, PHI, Chart, ControlPoint, FrameFamily, IsoEntangledFrame
from .numerics import (IDENTITY_2, SIGMA_Y, dagger, expm, max_abs, unitarity_defect,
                       unitary_polar_factor)
from .statekit import SpectralWeights, reduce

SPHERE_PERIODS = (None, 2 * np.pi)
UNITARIZE_FLOOR = 1e-12
UNITARITY_LIMIT = 1e-9
DEFAULT_SEGMENTS = 20000


@dataclass(frozen=True)
class Loop:
    """Closed path sampled at ``M + 1`` chart points, ``samples[M] ~ samples[0]``.

    ``seams`` lists ``(index, chart_id)`` pairs: from sample ``index`` onward
    the loop is carried by ``chart_id``.  Segments are attributed to the chart
    of their first sample.
    """

    chart_id: str
    samples: np.ndarray
    periods: tuple = SPHERE_PERIODS
    kind: str = "samples"
    params: dict = field(default_factory=dict)
    seams: tuple = ()

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.samples, dtype=float))
        if len(pts) < 2:
            raise NonClosure("a loop needs at least two samples")
        periods = tuple(self.periods)[: pts.shape[1]]
        periods = periods + (None,) * (pts.shape[1] - len(periods))
        gap = pts[-1] - pts[0]
        for i, p in enumerate(periods):
            g = gap[i] if p is None else gap[i] - p * np.round(gap[i] / p)
            if abs(g) > 1e-12:
                raise NonClosure(f"loop does not close in coordinate {i}: gap {gap[i]:.3e}")
        pts.setflags(write=False)
        object.__setattr__(self, "samples", pts)
        object.__setattr__(self, "periods", periods)
        object.__setattr__(self, "seams", tuple(sorted((int(i), c) for i, c in self.seams)))

    @property
    def segments(self):
        return len(self.samples) - 1

    def pieces(self):
        """Yield ``(chart_id, start, stop)`` sample ranges, one per chart run."""
        bounds = [(0, self.chart_id)] + [s for s in self.seams if 0 < s[0] < self.segments]
        for j, (start, chart) in enumerate(bounds):
            stop = bounds[j + 1][0] if j + 1 < len(bounds) else self.segments
            yield chart, start, stop

    def chart_at(self, index):
        chart = self.chart_id
        for i, c in self.seams:
            if i <= index:
                chart = c
        return chart

    @classmethod
    def latitude(cls, theta0, segments=DEFAULT_SEGMENTS, phi0=0.0, chart_id="north", orientation=1):
        """Circle of constant theta, traversed with increasing phi when orientation=+1."""
        phi = phi0 + orientation * np.linspace(0.0, 2 * np.pi, segments + 1)
        pts = np.column_stack([np.full(segments + 1, float(theta0)), phi])
        return cls(chart_id, pts, SPHERE_PERIODS, "latitude",
                   {"theta0": float(theta0), "orientation": int(np.sign(orientation))})

    @classmethod
    def polygon(cls, vertices, segments=DEFAULT_SEGMENTS, chart_id="north"):
        """Spherical polygon through (theta, phi) vertices joined by great-circle arcs.

        The last vertex is joined back to the first.  Samples are spread over
        the edges in proportion to their arc length and every vertex is a sample.
        """
        verts = np.asarray(vertices, dtype=float)
        if len(verts) < 3:
            raise NonClosure("a polygon needs at least three vertices")
        unit = _to_unit(verts)
        closed = np.vstack([unit, unit[:1]])
        arcs = np.array([np.arccos(np.clip(np.dot(a, b), -1, 1)) for a, b in zip(closed[:-1], closed[1:])])
        counts = np.maximum(1, np.round(segments * arcs / arcs.sum()).astype(int))
        pts = [closed[0]]
        for (a, b), arc, n in zip(zip(closed[:-1], closed[1:]), arcs, counts):
            t = np.linspace(0, 1, n + 1)[1:]
            if arc < 1e-15:
                pts.extend([b] * n)
                continue
            s = np.sin(arc)
            pts.extend(np.outer(np.sin((1 - t) * arc) / s, a) + np.outer(np.sin(t * arc) / s, b))
        coords = _from_unit(np.array(pts), phi_start=verts[0, 1])
        coords[-1] = [verts[0, 0], coords[-1, 1]]
        coords[0, 0] = verts[0, 0]
        return cls(chart_id, coords, SPHERE_PERIODS, "polygon", {"vertices": verts.tolist()})

    @classmethod
    def from_samples(cls, points, chart_id, periods=SPHERE_PERIODS, seams=()):
        return cls(chart_id, np.asarray(points, dtype=float), periods, "samples", {}, seams)


def _to_unit(coords):
    th, ph = coords[:, 0], coords[:, 1]
    return np.column_stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])


def _from_unit(xyz, phi_start=0.0):
    theta = np.arccos(np.clip(xyz[:, 2], -1, 1))
    phi = np.unwrap(np.arctan2(xyz[:, 1], xyz[:, 0]))
    phi += phi_start - phi[0]
    return np.column_stack([theta, phi])


@dataclass(frozen=True)
class HolonomyResult:
    U: np.ndarray
    method: str
    segments: int
    unitarity_defect: float
    closure: np.ndarray = None
    weights: tuple = None
    convention: str = ROW_INITIAL

    @property
    def U_col(self):
        """Action on coefficient columns (transpose of the row convention)."""
        return self.U.T

    @property
    def transport(self):
        """``U`` expressed against the frame at the starting sample."""
        return self.U if self.closure is None else self.U @ self.closure


def _resolve(frame, weights):
    """Split an iso-entangled frame into (base, weights)."""
    if isinstance(frame, IsoEntangledFrame):
        if weights is not None and tuple(SpectralWeights(tuple(weights)).lambdas) != frame.weights.lambdas:
            raise ConventionMismatch("weights given twice with different values")
        return frame.base, frame.weights
    if weights is not None and not isinstance(weights, SpectralWeights):
        weights = SpectralWeights(tuple(weights))
    return frame, weights


def ordered_product(mats):
    """``mats[0] @ mats[1] @ ... @ mats[-1]`` by pairwise reduction."""
    m = np.asarray(mats)
    if len(m) == 0:
        raise ValueError("empty product")
    n = m.shape[-1]
    while len(m) > 1:
        if len(m) % 2:
            m = np.concatenate([m, np.eye(n, dtype=m.dtype)[None]])
        m = m[0::2] @ m[1::2]
    return m[0]


def _check_closure(frame, loop, check):
    chart_end = loop.chart_at(loop.segments)
    start = frame.evaluate_many(loop.chart_id, loop.samples[:1], check=check)[0]
    end = frame.evaluate_many(chart_end, loop.samples[-1:], check=check)[0]
    gap = max_abs(end - start)
    if gap > 1e-12:
        raise NonClosure(f"frame does not return to itself around the loop (gap {gap:.3e})")


def _finish(u, method, loop, closure, weights):
    defect = unitarity_defect(u)
    if defect > UNITARITY_LIMIT:
        raise NoConvergence(
            f"holonomy unitarity defect {defect:.3e} exceeds {UNITARITY_LIMIT:g}; double M"
        )
    if defect > UNITARIZE_FLOOR:
        u = unitary_polar_factor(u)
        defect = unitarity_defect(u)
    lam = None if weights is None else weights.lambdas
    return HolonomyResult(u, method, loop.segments, defect, closure, lam)


def _gauge_for(gauges, chart_id):
    if gauges is None:
        return None
    if callable(gauges) and not isinstance(gauges, dict):
        return gauges(chart_id)
    return gauges.get(chart_id)


def _closure_matrix(frame, loop, gauges, check):
    """C with F_end(q_M) = C F_start(q_0), rows as frame labels."""
    first = apply_gauge(frame, _gauge_for(gauges, loop.chart_id))
    chart_end = loop.chart_at(loop.segments)
    last = apply_gauge(frame, _gauge_for(gauges, chart_end))
    f0 = first.evaluate_many(loop.chart_id, loop.samples[:1], check=check)[0]
    fm = last.evaluate_many(chart_end, loop.samples[-1:], check=check)[0]
    return fm @ dagger(f0)


def holonomy_exponential_product(frame, loop, weights=None, gauges=None, h=DEFAULT_FD_STEP,
                                 enforce_domain=True):
    """Path-ordered product of ``expm(-sum_mu A_mu(q_mid) dq_mu)`` over segments.

    Parameters
    ----------
    frame : FrameFamily or IsoEntangledFrame
        Base frame; an iso-entangled frame supplies its own weights.
    loop : Loop
    weights : SpectralWeights or sequence, optional
        When given (or implied), the mixed-state potential is used.
    gauges : dict or callable, optional
        Chart id -> :class:`GaugeTransform` (missing charts use the identity).
    h : float
        Finite-difference step for the potential.
    enforce_domain : bool
        Reject samples outside their chart.  Only disabled to demonstrate
        coordinate singularities.
    """
    base, weights = _resolve(frame, weights)
    _check_closure(base, loop, enforce_domain)
    pts = loop.samples
    factors = []
    seam_links = []
    for chart, start, stop in loop.pieces():
        q0, q1 = pts[start:stop], pts[start + 1:stop + 1]
        mid = 0.5 * (q0 + q1)
        dq = q1 - q0
        gauge = _gauge_for(gauges, chart)
        gen = np.zeros((len(mid), base.n, base.n), dtype=complex)
        for mu in range(pts.shape[1]):
            if not np.any(dq[:, mu]):
                continue
            a = connection_many(base, chart, mid, mu, h, check=enforce_domain)
            if weights is not None:
                a = shift_sum(a, weights)
            if gauge is not None:
                a = gauge_transform_many(a, gauge, mid, mu, h)
            gen += a * dq[:, mu, None, None]
        factors.append(ordered_product(expm(-gen)) if len(gen) else np.eye(base.n, dtype=complex))
        if stop < loop.segments:
            seam_links.append(_seam_transition(base, weights, loop, stop, chart, gauges, enforce_domain))
    u = factors[0]
    for link, piece in zip(seam_links, factors[1:]):
        u = u @ link @ piece
    closure = _closure_matrix(_lifted(base, weights), loop, gauges, enforce_domain)
    return _finish(u, "exponential-product", loop, closure, weights)


def _lifted(base, weights):
    return base if weights is None else IsoEntangledFrame(base, weights)


def _seam_transition(base, weights, loop, index, chart, gauges, check):
    """Re-express coefficients from the old chart's frame to the new one's at a seam."""
    new_chart = loop.chart_at(index)
    frame = _lifted(base, weights)
    q = loop.samples[index:index + 1]
    old = apply_gauge(frame, _gauge_for(gauges, chart)).evaluate_many(chart, q, check=check)[0]
    new = apply_gauge(frame, _gauge_for(gauges, new_chart)).evaluate_many(new_chart, q, check=check)[0]
    return old @ dagger(new)


def holonomy_wilson_link(frame, loop, weights=None, gauges=None, enforce_domain=True):
    """Ordered product of unitarised overlap links between consecutive samples.

    Link ``i`` is ``L[b, d] = <F_d(q_{i+1}) | F_b(q_i)>`` for the (lifted,
    gauged) frame ``F``; each link is replaced by its unitary polar factor.
    """
    base, weights = _resolve(frame, weights)
    _check_closure(base, loop, enforce_domain)
    lifted = _lifted(base, weights)
    pts = loop.samples
    frames = np.empty((len(pts), lifted.n, lifted.dim), dtype=complex)
    link_end = np.empty_like(frames[:-1])
    for chart, start, stop in loop.pieces():
        f = apply_gauge(lifted, _gauge_for(gauges, chart))
        frames[start:stop + 1] = f.evaluate_many(chart, pts[start:stop + 1], check=enforce_domain)
        link_end[start:stop] = frames[start + 1:stop + 1]
        if stop < loop.segments:
            new_chart = loop.chart_at(stop)
            g = apply_gauge(lifted, _gauge_for(gauges, new_chart))
            # the last link of this piece lands in the next chart's frame
            link_end[stop - 1] = g.evaluate_many(new_chart, pts[stop:stop + 1], check=enforce_domain)[0]
    links = frames[:-1] @ dagger(link_end)
    try:
        links = unitary_polar_factor(links)
    except NoConvergence as exc:
        raise NoConvergence(f"Wilson links too far from unitary ({exc}); double M") from exc
    u = ordered_product(links)
    closure = _closure_matrix(lifted, loop, gauges, enforce_domain)
    return _finish(u, "wilson-link", loop, closure, weights)


def solid_angle(loop):
    """Oriented solid angle enclosed by a loop on the (theta, phi) sphere.

    Latitude circles use ``2 pi (1 - cos theta0)`` directly; other loops sum
    signed spherical-triangle areas of (north pole, q_i, q_{i+1}).
    """
    if loop.kind == "latitude":
        return loop.params["orientation"] * 2 * np.pi * (1 - np.cos(loop.params["theta0"]))
    xyz = _to_unit(loop.samples)
    a, b = xyz[:-1], xyz[1:]
    pole = np.array([0.0, 0.0, 1.0])
    num = np.einsum("j,ij->i", pole, np.cross(a, b))
    den = 1.0 + a @ pole + b @ pole + np.einsum("ij,ij->i", a, b)
    return float(np.sum(2 * np.arctan2(num, den)))


def winding(loop):
    """Net number of turns of the azimuth around the loop."""
    return float((loop.samples[-1, PHI] - loop.samples[0, PHI]) / (2 * np.pi))


def sigma_y_rotation(angle):
    """exp(i angle sigma_y)."""
    return np.cos(angle) * IDENTITY_2 + 1j * np.sin(angle) * SIGMA_Y


def iontrap_holonomy_closed_form(loop, r):
    """``U = exp(i r Omega sigma_y)`` in the north gauge; no path ordering needed.

    The closure records the north gauge's failure to be single-valued,
    ``exp(-2 pi i r w sigma_y)`` for winding number ``w``.
    """
    omega = solid_angle(loop)
    u = sigma_y_rotation(r * omega)
    closure = sigma_y_rotation(-2 * np.pi * r * winding(loop))
    return HolonomyResult(u, "closed-form", loop.segments, unitarity_defect(u), closure,
                          SpectralWeights.from_r(r).lambdas)


def pole_loop_equatorial_closed_form(theta, r):
    """Holonomy of a small latitude loop integrated in the equatorial gauge,
    ``exp(-2 pi i r cos(theta) sigma_y)``; tends to ``exp(-2 pi i r sigma_y)``."""
    return sigma_y_rotation(-2 * np.pi * r * np.cos(theta))


# reduced states ---------------------------------------------------------------

def _as_unitary(holonomy, n, weights=None, use_transport=False):
    if isinstance(holonomy, HolonomyResult):
        if holonomy.convention != ROW_INITIAL:
            raise ConventionMismatch(f"holonomy uses convention {holonomy.convention!r}")
        if weights is not None and holonomy.weights is not None:
            if not np.allclose(holonomy.weights, weights, atol=1e-12):
                raise ConventionMismatch(
                    f"holonomy computed for weights {holonomy.weights}, frame has {weights}"
                )
        u = holonomy.transport if use_transport else holonomy.U
    else:
        u = np.asarray(holonomy, dtype=complex)
    if u.shape != (n, n):
        raise DimensionMismatch(f"holonomy is {u.shape}, frame has {n} vectors")
    return u


def apply_to_reduced_state(holonomy, iso_frame, q0, label=None, composite=None, use_transport=False):
    """Reduced system state after transport around the loop.

    Either ``label`` (start in ``Xi_label(q0)``) or ``composite`` (an ``N x N``
    density matrix in the ``Xi(q0)`` basis) selects the input.  The composite
    input evolves as ``C -> U^T C U^*``, the row-convention form of
    ``rho -> U rho U^H``.
    """
    if (label is None) == (composite is None):
        raise ValueError("give exactly one of label or composite")
    n = iso_frame.n
    u = _as_unitary(holonomy, n, iso_frame.weights.lambdas, use_transport)
    xi = iso_frame.evaluate(q0, check=False)
    dim_s, dim_a = iso_frame.base.dim, n
    if label is not None:
        psi = u[label] @ xi
        return reduce(psi, dim_s, dim_a)
    c0 = np.asarray(composite, dtype=complex)
    if c0.shape != (n, n):
        raise DimensionMismatch(f"composite input must be {n}x{n}")
    ct = u.T @ c0 @ u.conj()
    full = xi.T @ ct @ xi.conj()
    return reduce(full, dim_s, dim_a)


def in_frame_basis(rho, frame, q0):
    """Matrix elements ``<xi_a|rho|xi_b>`` of a system operator in the frame at ``q0``."""
    xi = frame.evaluate(q0, check=False)
    return xi.conj() @ np.asarray(rho) @ xi.T


def constant_frame(vectors, name="constant"):
    """Frame family that is the same set of vectors everywhere (0-d chart)."""
    v = np.asarray(vectors, dtype=complex)
    chart = Chart("point", ((-np.inf, np.inf),), (None,))
    return FrameFamily(v.shape[0], v.shape[1], lambda c: np.broadcast_to(v, (len(c),) + v.shape),
                       {"point": chart}, name=name)


_ORIGIN = ControlPoint("point", (0.0,))
_COMPUTATIONAL = np.eye(2)
_HADAMARD_PAIR = np.array([[1, 1], [1, -1]]) / np.sqrt(2)


def _two_level_iso(r, vectors):
    return IsoEntangledFrame(constant_frame(vectors), SpectralWeights.from_r(r))


def _default_unitary(U, r, omega):
    return sigma_y_rotation(r * omega) if U is None else U


def scenario_mixed_input(r, omega, U=None):
    """Start in the purification psi_0 of diag((1+r)/2, (1-r)/2) and transport."""
    return apply_to_reduced_state(_default_unitary(U, r, omega), _two_level_iso(r, _COMPUTATIONAL),
                                  _ORIGIN, label=0)


def scenario_pure_to_mixed(r, omega, U=None):
    """Transport (psi'_0 + psi'_1)/sqrt(2), a purification of |0><0|.

    ``psi'_a`` are the iso-entangled vectors built on ``(|0> +- |1>)/sqrt(2)``;
    the loop acts on their labels with ``U``.
    """
    iso = _two_level_iso(r, _HADAMARD_PAIR)
    return apply_to_reduced_state(_default_unitary(U, r, omega), iso, _ORIGIN,
                                  composite=0.5 * np.ones((2, 2)))


def scenario_composite_mixed(r, R, omega, U=None):
    """Transport ((1+R)/2)|psi_0><psi_0| + ((1-R)/2)|psi_1><psi_1|."""
    if not -1.0 <= R <= 1.0:
        raise ValueError(f"R must lie in [-1, 1], got {R}")
    c0 = np.diag([(1 + R) / 2, (1 - R) / 2])
    return apply_to_reduced_state(_default_unitary(U, r, omega), _two_level_iso(r, _COMPUTATIONAL),
                                  _ORIGIN, composite=c0)


def closed_form_mixed_input_bloch(r, omega):
    return (np.sin(2 * r * omega), 0.0, r * np.cos(2 * r * omega))


def closed_form_pure_to_mixed_bloch(r, omega):
    return (-r * np.sin(2 * r * omega), 0.0, np.cos(2 * r * omega))


def closed_form_composite_bloch(r, R, omega):
    return (R * np.sin(2 * r * omega), 0.0, r * R * np.cos(2 * r * omega))


def closed_form_purity(r, omega):
    return 0.5 * (1 + r * r + (1 - r * r) * np.sin(2 * r * omega) ** 2)
