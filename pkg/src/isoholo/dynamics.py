"""Hamiltonians with degenerate subspaces and slow-loop Schroedinger evolution.

Used to check that genuinely adiabatic dynamics reproduces the holonomy
prediction.  hbar = 1; times are in units of inverse energy.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .connection import apply_gauge
from .errors import DimensionMismatch, StepCountTooSmall
from .frames import PHI, THETA, IsoEntangledFrame
from .holonomy import (HolonomyResult, Loop, _gauge_for, holonomy_exponential_product,
                       ordered_product)
from .numerics import dagger, expm, hermitian_eigensystem
from .statekit import reduce, trace_distance

STEPS_PER_RADIAN = 200
CHUNK = 8192


def iontrap_hamiltonian_many(omega, coords):
    """Tripod coupling ``|e>(w0<0| + w1<1| + wa<a|) + h.c.`` at ``(K, 2)`` (theta, phi)."""
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    theta, phi = coords[:, THETA], coords[:, PHI]
    h = np.zeros((len(coords), 4, 4), dtype=complex)
    h[:, 3, 0] = omega * np.sin(theta) * np.cos(phi)
    h[:, 3, 1] = omega * np.sin(theta) * np.sin(phi)
    h[:, 3, 2] = omega * np.cos(theta)
    h[:, :3, 3] = np.conj(h[:, 3, :3])
    return h


def iontrap_hamiltonian(omega, theta, phi):
    """4x4 ion-trap Hamiltonian in the basis (|0>, |1>, |a>, |e>); spectrum (-w, 0, 0, w)."""
    if omega < 0:
        raise ValueError("omega must be non-negative")
    return iontrap_hamiltonian_many(omega, [(theta, phi)])[0]


@dataclass(frozen=True)
class HamiltonianFamily:
    """Parametrised Hermitian operator with a degenerate subspace at energy ``E(q)``.

    ``evaluator`` maps ``(K, d)`` coordinates to ``(K, dim, dim)`` matrices;
    ``energy`` maps them to ``(K,)`` subspace energies.
    """

    dim: int
    evaluator: object
    energy: object = None
    gap: float = None
    name: str = "hamiltonian"

    def evaluate_many(self, coords):
        out = np.asarray(self.evaluator(np.atleast_2d(np.asarray(coords, dtype=float))), dtype=complex)
        if out.shape[1:] != (self.dim, self.dim):
            raise DimensionMismatch(f"hamiltonian evaluator returned {out.shape}")
        return out

    def evaluate(self, coords):
        return self.evaluate_many([coords])[0]

    def energy_many(self, coords):
        coords = np.atleast_2d(coords)
        if self.energy is None:
            return np.zeros(len(coords))
        return np.broadcast_to(np.asarray(self.energy(coords), dtype=float), (len(coords),))


def iontrap_family(omega=1.0):
    return HamiltonianFamily(4, lambda c: iontrap_hamiltonian_many(omega, c), None, omega, "iontrap")


def _energy_fn(energy):
    if energy is None:
        return None
    if callable(energy):
        return energy
    value = float(energy)
    return lambda coords: np.full(len(coords), value)


def subspace_projector_many(frame, chart_id, coords):
    xi = frame.evaluate_many(chart_id, coords, check=False)
    return np.einsum("xai,xaj->xij", xi, xi.conj())


def composite_hamiltonian(iso_frame, energy=0.0, gap=1.0, chart_id="equatorial"):
    """``E(q) P(q) + gap (I - P(q))`` with ``P`` the projector onto the iso frame.

    The gap term is the simplest operator acting only on the orthogonal
    complement.  Projectors are gauge invariant, so any chart of the frame may
    be used.
    """
    if gap <= 0:
        raise ValueError("gap must be positive")
    efn = _energy_fn(energy)
    dim = iso_frame.dim
    eye = np.eye(dim)

    def evaluate(coords):
        p = subspace_projector_many(iso_frame, chart_id, coords)
        e = np.zeros(len(coords)) if efn is None else np.asarray(efn(coords), dtype=float)
        return e[:, None, None] * p + gap * (eye - p)

    return HamiltonianFamily(dim, evaluate, efn, gap, f"composite({iso_frame.name})")


def two_level_energy_term(base, weights, chart_id, coords, energy=1.0, ancilla_basis=None):
    """The N=2 energy term written with frame Pauli operators.

    ``E (s0 (x) [l0 |p0><p0| + l1 |p1><p1|] + sqrt(l0 l1) s1 (x) a1)`` where
    ``s0 = |x0><x0| + |x1><x1|``, ``s1 = |x0><x1| + |x1><x0|`` on the system and
    ``a1 = |p0><p1| + |p1><p0|`` on the ancilla.
    """
    lam = weights.lambdas
    if len(lam) != 2:
        raise DimensionMismatch("explicit form is only defined for two weights")
    phi = np.eye(2, dtype=complex) if ancilla_basis is None else np.asarray(ancilla_basis, dtype=complex)
    xi = base.evaluate_many(chart_id, coords, check=False)
    x0, x1 = xi[:, 0], xi[:, 1]
    outer = lambda a, b: np.einsum("xi,xj->xij", a, b.conj())
    s0 = outer(x0, x0) + outer(x1, x1)
    s1 = outer(x0, x1) + outer(x1, x0)
    anc_diag = lam[0] * np.outer(phi[0], phi[0].conj()) + lam[1] * np.outer(phi[1], phi[1].conj())
    a1 = np.outer(phi[0], phi[1].conj()) + np.outer(phi[1], phi[0].conj())
    kron = lambda a, b: np.einsum("xij,kl->xikjl", a, b).reshape(len(a), a.shape[1] * 2, a.shape[2] * 2)
    return energy * (kron(s0, anc_diag) + math.sqrt(lam[0] * lam[1]) * kron(s1, a1))


def _uniform(s):
    return s


def _smooth(s):
    return s - np.sin(2 * np.pi * s) / (2 * np.pi)


RAMPS = {"uniform": _uniform, "smooth": _smooth}


@dataclass(frozen=True)
class Schedule:
    """Closed parameter path traversed in time ``[0, duration]``.

    ``path`` maps a progress array ``u`` in [0, 1] to ``(K, d)`` chart
    coordinates with ``path(1) = path(0)`` modulo periods; ``ramp`` is the
    traversal law ``u(t / duration)`` ("uniform" or "smooth", the latter
    starting and stopping at zero speed).
    """

    duration: float
    path: object
    chart_id: str = "equatorial"
    ramp: str = "uniform"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.ramp not in RAMPS:
            raise ValueError(f"unknown ramp {self.ramp!r}; known: {sorted(RAMPS)}")
        if self.duration < 0:
            raise ValueError("duration must be non-negative")

    def at(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        s = t / self.duration if self.duration > 0 else np.zeros_like(t)
        return np.atleast_2d(self.path(RAMPS[self.ramp](s)))

    def with_duration(self, duration):
        return replace(self, duration=float(duration))

    def loop(self, segments=2000):
        """Geometric loop traced by the schedule (independent of the ramp)."""
        pts = np.atleast_2d(self.path(np.linspace(0.0, 1.0, segments + 1)))
        return Loop.from_samples(pts, self.chart_id)

    @classmethod
    def latitude(cls, theta0, duration, phi0=0.0, chart_id="equatorial", ramp="uniform"):
        def path(u):
            u = np.atleast_1d(u)
            return np.column_stack([np.full(len(u), float(theta0)), phi0 + 2 * np.pi * u])

        return cls(float(duration), path, chart_id, ramp, {"theta0": float(theta0)})

    @classmethod
    def stationary(cls, coords, duration=0.0, chart_id="equatorial"):
        point = np.asarray(coords, dtype=float)
        return cls(float(duration), lambda u: np.tile(point, (len(np.atleast_1d(u)), 1)), chart_id)


def default_steps(ham, schedule, samples=16):
    """``200 * T * max ||H||`` so that each step rotates the phase by ~0.005 rad."""
    coords = schedule.at(np.linspace(0.0, schedule.duration, samples))
    norm = max(np.max(np.abs(hermitian_eigensystem(h)[0])) for h in ham.evaluate_many(coords))
    return max(1, math.ceil(STEPS_PER_RADIAN * schedule.duration * max(norm, 1e-12)))


def schrodinger_evolve(ham, schedule, psi0, steps=None, method="exponential"):
    """Integrate ``i d/dt psi = H(q(t)) psi`` over the schedule.

    ``method="exponential"`` applies ``expm(-i H(t_mid) dt)`` per step (exactly
    norm preserving).  ``method="rk4"`` is a classical Runge-Kutta cross-check;
    it raises :class:`StepCountTooSmall` if the norm drifts by more than 1e-8.
    """
    psi = np.array(psi0, dtype=complex)
    if psi.shape != (ham.dim,):
        raise DimensionMismatch(f"initial state has shape {psi.shape}, expected ({ham.dim},)")
    if abs(np.linalg.norm(psi) - 1.0) > 1e-12:
        raise ValueError("initial state must be normalized")
    if schedule.duration == 0:
        return psi
    steps = default_steps(ham, schedule) if steps is None else int(steps)
    dt = schedule.duration / steps

    if method == "exponential":
        for start in range(0, steps, CHUNK):
            j = np.arange(start, min(start + CHUNK, steps))
            hs = ham.evaluate_many(schedule.at((j + 0.5) * dt))
            props = expm(-1j * dt * hs)
            psi = ordered_product(props[::-1]) @ psi
        return psi

    if method == "rk4":
        def deriv(t, v):
            return -1j * (ham.evaluate(schedule.at(t)[0]) @ v)

        for j in range(steps):
            t = j * dt
            k1 = deriv(t, psi)
            k2 = deriv(t + dt / 2, psi + dt / 2 * k1)
            k3 = deriv(t + dt / 2, psi + dt / 2 * k2)
            k4 = deriv(t + dt, psi + dt * k3)
            psi = psi + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        drift = abs(np.linalg.norm(psi) - 1.0)
        if drift > 1e-8:
            raise StepCountTooSmall(f"RK4 norm drift {drift:.3e} with {steps} steps; increase steps")
        return psi

    raise ValueError(f"unknown method {method!r}")


def dynamical_phase(ham, schedule, steps=4096):
    """exp(-i int_0^T E(q_t) dt) by the midpoint rule."""
    if ham.energy is None or schedule.duration == 0:
        return 1.0 + 0j
    dt = schedule.duration / steps
    e = ham.energy_many(schedule.at((np.arange(steps) + 0.5) * dt))
    return np.exp(-1j * np.sum(e) * dt)


@dataclass(frozen=True)
class AdiabaticDiagnostics:
    duration: float
    steps: int
    infidelity: float
    leakage: float
    trace_distance: float
    state: np.ndarray = field(default=None, repr=False, compare=False)


def predicted_state(holonomy, frame, schedule, label):
    """Holonomy prediction ``sum_b transport[label, b] xi_b(q_0)``."""
    u = holonomy.transport if isinstance(holonomy, HolonomyResult) else np.asarray(holonomy)
    xi0 = frame.evaluate_many(schedule.chart_id, schedule.at(0.0), check=False)[0]
    return u[label] @ xi0


def adiabatic_report(ham, schedule, frame, label=0, steps=None, durations=None, holonomy=None,
                     segments=2000, gauges=None, steps_per_time=None):
    """Compare slow evolution against the holonomy prediction.

    Parameters
    ----------
    ham : HamiltonianFamily
    schedule : Schedule
    frame : FrameFamily or IsoEntangledFrame
        Frame spanning the degenerate subspace of ``ham``; an iso-entangled
        frame also yields reduced-state trace distances.
    label : int
        Initial state is frame vector ``label`` at the start of the path.
    steps : int, optional
        Time steps (default :func:`default_steps`); ignored for ladders when
        ``steps_per_time`` is given.
    durations : sequence of float, optional
        Ladder of durations; defaults to the schedule's own.
    holonomy : HolonomyResult or array, optional
        Prediction; computed by the exponential product along the schedule's
        loop with ``segments`` segments if omitted.

    Returns
    -------
    list of AdiabaticDiagnostics
    """
    if holonomy is None:
        holonomy = holonomy_exponential_product(frame, schedule.loop(segments), gauges=gauges)
    durations = [schedule.duration] if durations is None else list(durations)
    labelled = apply_gauge(frame, _gauge_for(gauges, schedule.chart_id))
    psi0 = labelled.evaluate_many(schedule.chart_id, schedule.at(0.0), check=False)[0][label]
    iso = isinstance(frame, IsoEntangledFrame)
    rows = []
    for duration in durations:
        sched = schedule.with_duration(duration)
        n_steps = steps
        if steps_per_time is not None:
            n_steps = max(1, math.ceil(steps_per_time * duration))
        if n_steps is None and duration > 0:
            n_steps = default_steps(ham, sched)
        psi = schrodinger_evolve(ham, sched, psi0, n_steps)
        pred = dynamical_phase(ham, sched) * predicted_state(holonomy, labelled, sched, label)
        fidelity = abs(np.vdot(pred, psi)) ** 2
        q_end = sched.at(duration)
        p_end = subspace_projector_many(frame, sched.chart_id, q_end)[0]
        leakage = max(0.0, 1.0 - float(np.real(np.vdot(psi, p_end @ psi))))
        if iso:
            dist = trace_distance(reduce(psi, frame.base.dim, frame.n), reduce(pred, frame.base.dim, frame.n))
        else:
            dist = math.sqrt(max(0.0, 1.0 - fidelity))
        rows.append(AdiabaticDiagnostics(float(duration), int(n_steps or 0),
                                         max(0.0, 1.0 - fidelity), leakage, dist, psi))
    return rows


def evolve_composite(iso_frame, schedule, label=0, gap=1.0, energy=0.0, steps=None):
    """Evolve ``Xi_label(q_0)`` under the composite Hamiltonian; returns the final vector."""
    ham = composite_hamiltonian(iso_frame, energy, gap, schedule.chart_id)
    xi0 = iso_frame.evaluate_many(schedule.chart_id, schedule.at(0.0), check=False)[0]
    return schrodinger_evolve(ham, schedule, xi0[label], steps)


__all__ = [
    "AdiabaticDiagnostics", "HamiltonianFamily", "Schedule", "adiabatic_report",
    "composite_hamiltonian", "default_steps", "dynamical_phase", "evolve_composite",
    "iontrap_family", "iontrap_hamiltonian", "iontrap_hamiltonian_many", "predicted_state",
    "schrodinger_evolve", "subspace_projector_many", "two_level_energy_term",
]
