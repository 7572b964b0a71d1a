"""Scenario file schema and the computation behind one result row.

A scenario is a single JSON document.  Unknown fields are rejected and
nothing is guessed: a scenario either validates completely or not at all.
"""

import json
import math
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .connection import iontrap_gauge
from .dynamics import Schedule, adiabatic_report, composite_hamiltonian, iontrap_family
from .errors import NumericalError, SchemaError
from .frames import ControlPoint, IsoEntangledFrame, custom_frame, iontrap_dark_frame
from .holonomy import (Loop, holonomy_exponential_product, holonomy_wilson_link, in_frame_basis,
                       scenario_composite_mixed, scenario_mixed_input, scenario_pure_to_mixed,
                       solid_angle)
from .statekit import SpectralWeights, bloch_vector, purity

SPHERE_CHARTS = ("equatorial", "north", "south")
OUTPUTS = ("holonomy", "bloch", "purity", "infidelity")
SWEEP_PARAMETERS = ("theta0", "r", "R", "T", "gap", "M")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class Latitude(_Strict):
    theta0: float


class Polygon(_Strict):
    vertices: list[tuple[float, float]] = Field(min_length=3)


class Samples(_Strict):
    points: list[list[float]] = Field(min_length=2)


class LoopSpec(_Strict):
    latitude: Optional[Latitude] = None
    polygon: Optional[Polygon] = None
    samples: Optional[Samples] = None

    @model_validator(mode="after")
    def _exactly_one(self):
        given = [k for k in ("latitude", "polygon", "samples") if getattr(self, k) is not None]
        if len(given) != 1:
            raise ValueError(f"exactly one of latitude, polygon, samples is required (got {given or 'none'})")
        return self


class Sweep(_Strict):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    parameter: Literal["theta0", "r", "R", "T", "gap", "M"]
    start: float = Field(alias="from")
    to: float
    count: int = Field(ge=1)

    def values(self):
        return np.linspace(self.start, self.to, self.count)


class Scenario(_Strict):
    """One computation (or a sweep of them).

    Angles are in radians.  ``weights`` overrides ``r`` and allows N > 2;
    ``R`` only enters the composite input.  ``T``, ``gap``, ``steps``,
    ``hamiltonian`` and ``ramp`` only matter for dynamics.
    """

    id: str = "scenario"
    model: Literal["iontrap", "custom"]
    mode: Literal["holonomy", "dynamics", "sweep"]
    loop: LoopSpec
    r: Optional[float] = Field(default=None, ge=-1.0, le=1.0)
    R: float = Field(default=1.0, ge=-1.0, le=1.0)
    weights: Optional[list[float]] = Field(default=None, min_length=1)
    M: int = Field(default=20000, ge=8)
    h: float = Field(default=1e-5, gt=0.0)
    T: Optional[float] = Field(default=None, ge=0.0)
    gap: float = Field(default=1.0, gt=0.0)
    steps: Optional[int] = Field(default=None, ge=1)
    sweep: Optional[Sweep] = None
    outputs: list[Literal["holonomy", "bloch", "purity", "infidelity"]] = list(OUTPUTS)
    chart: Optional[str] = None
    method: Literal["exponential-product", "wilson-link"] = "exponential-product"
    input: Literal["mixed", "pure", "composite"] = "mixed"
    frame: Optional[Union[str, dict]] = None
    hamiltonian: Literal["composite", "iontrap"] = "composite"
    ramp: Literal["uniform", "smooth"] = "uniform"

    @model_validator(mode="after")
    def _consistent(self):
        if self.r is None and self.weights is None:
            raise ValueError("one of r or weights is required")
        if self.model == "iontrap" and self.weights is not None and len(self.weights) != 2:
            raise ValueError("the iontrap model has two dark states, so weights needs two entries")
        if self.weights is not None:
            SpectralWeights(tuple(self.weights))
        if self.model == "custom" and self.frame is None:
            raise ValueError("frame is required for the custom model")
        if self.model == "iontrap" and self.frame is not None:
            raise ValueError("frame is only allowed for the custom model")
        if self.model == "iontrap" and self.chart is not None and self.chart not in SPHERE_CHARTS:
            raise ValueError(f"chart must be one of {SPHERE_CHARTS} for the iontrap model")
        if (self.mode == "sweep") != (self.sweep is not None):
            raise ValueError("a sweep block is required in sweep mode and only there")
        if self.sweep is not None and self.sweep.parameter == "theta0" and self.loop.latitude is None:
            raise ValueError("sweeping theta0 needs a latitude loop")
        if self.runs_dynamics:
            if self.model != "iontrap":
                raise ValueError("dynamics is only available for the iontrap model")
            if self.T is None:
                raise ValueError("T is required for dynamics")
            if self.loop.latitude is None:
                raise ValueError("dynamics needs a latitude loop")
        return self

    @property
    def runs_dynamics(self):
        """Dynamics mode, or a sweep of a scenario that sets ``T``."""
        return self.mode == "dynamics" or (self.mode == "sweep" and self.T is not None)

    def spectral_weights(self):
        if self.weights is not None:
            return SpectralWeights(tuple(self.weights))
        return SpectralWeights.from_r(self.r)

    def effective_r(self):
        if self.weights is None:
            return self.r
        lam = self.spectral_weights().lambdas
        return lam[0] - lam[1] if len(lam) == 2 else None

    def points(self):
        """Scenarios of the individual sweep points, in sweep order."""
        if self.sweep is None:
            return [self]
        out = []
        base = self.model_dump(by_alias=True, exclude={"sweep"})
        base["mode"] = "dynamics" if self.runs_dynamics else "holonomy"
        for i, value in enumerate(self.sweep.values()):
            data = json.loads(json.dumps(base))
            data["id"] = f"{self.id}#{i}"
            p = self.sweep.parameter
            if p == "theta0":
                data["loop"]["latitude"]["theta0"] = float(value)
            elif p == "M":
                data["M"] = int(round(value))
            elif p == "r":
                data["r"], data["weights"] = float(value), None
            else:
                data[p] = float(value)
            out.append(validate(data))
        return out


def _format_errors(exc):
    lines = []
    for err in exc.errors():
        where = ".".join(str(x) for x in err["loc"]) or "scenario"
        lines.append(f"{where}: {err['msg']}")
    return lines


def validate(data):
    """Validate a parsed scenario; raise :class:`SchemaError` naming each bad field."""
    if not isinstance(data, dict):
        raise SchemaError("scenario must be a JSON object")
    try:
        return Scenario.model_validate(data)
    except ValidationError as exc:
        raise SchemaError("\n".join(_format_errors(exc))) from None
    except ValueError as exc:
        raise SchemaError(str(exc)) from None


def load(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read scenario: {exc}") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"scenario is not valid JSON: {exc}") from None
    return validate(data)


# computation -------------------------------------------------------------------

def _frame(scn):
    return iontrap_dark_frame() if scn.model == "iontrap" else custom_frame(scn.frame)


def _chart(scn, frame):
    if scn.chart is not None:
        return scn.chart
    return "north" if scn.model == "iontrap" else next(iter(frame.charts))


def _loop(scn, chart):
    spec = scn.loop
    if spec.latitude is not None:
        return Loop.latitude(spec.latitude.theta0, scn.M, chart_id=chart)
    if spec.polygon is not None:
        return Loop.polygon(spec.polygon.vertices, scn.M, chart_id=chart)
    points = np.asarray(spec.samples.points, dtype=float)
    periods = (None, 2 * np.pi) if chart in SPHERE_CHARTS else tuple(c for c in _frame(scn).chart(chart).periods)
    return Loop.from_samples(points, chart, periods)


def _gauges(scn, chart):
    if scn.model != "iontrap":
        return None
    return {chart: iontrap_gauge(chart, scn.effective_r())}


def _omega(loop, chart):
    return solid_angle(loop) if chart in SPHERE_CHARTS and loop.samples.shape[1] == 2 else 0.0


def _label_state(scn, omega, u):
    r = scn.effective_r()
    if scn.input == "mixed":
        return scenario_mixed_input(r, omega, u)
    if scn.input == "pure":
        return scenario_pure_to_mixed(r, omega, u)
    return scenario_composite_mixed(r, scn.R, omega, u)


def compute_row(scn):
    """Evaluate one (non-sweep) scenario into a result row dict."""
    frame = _frame(scn)
    weights = scn.spectral_weights()
    chart = _chart(scn, frame)
    loop = _loop(scn, chart)
    omega = _omega(loop, chart)
    if scn.method == "exponential-product":
        result = holonomy_exponential_product(frame, loop, weights, _gauges(scn, chart), h=scn.h)
    else:
        result = holonomy_wilson_link(frame, loop, weights, _gauges(scn, chart))
    row = {"scenario_id": scn.id, "omega_solid": omega, "r": scn.effective_r(), "R": scn.R,
           "U": result.U, "bloch": None, "purity": None, "method": result.method,
           "unitarity_defect": result.unitarity_defect, "infidelity": None}
    two_level = len(weights) == 2

    if scn.mode == "dynamics":
        schedule = Schedule.latitude(scn.loop.latitude.theta0, scn.T, ramp=scn.ramp)
        if scn.hamiltonian == "iontrap":
            ham, target = iontrap_family(1.0), frame
        else:
            target = IsoEntangledFrame(frame, weights)
            ham = composite_hamiltonian(target, 0.0, scn.gap)
        report = adiabatic_report(ham, schedule, target, steps=scn.steps, segments=min(scn.M, 4000))[0]
        row["infidelity"] = report.infidelity
        if two_level:
            # system state restricted to the frame span at the start point and
            # renormalized, so leakage does not masquerade as mixing
            amps = report.state.reshape(frame.dim, -1)
            q0 = ControlPoint(schedule.chart_id, tuple(schedule.at(0.0)[0]))
            reduced = in_frame_basis(amps @ amps.conj().T, frame, q0)
            reduced = reduced / np.trace(reduced).real
            row["bloch"], row["purity"] = bloch_vector(reduced), purity(reduced)
    elif two_level:
        rho = _label_state(scn, omega, result.U)
        row["bloch"], row["purity"] = bloch_vector(rho), purity(rho)

    if "holonomy" not in scn.outputs:
        row["U"] = None
    if "bloch" not in scn.outputs:
        row["bloch"] = None
    if "purity" not in scn.outputs:
        row["purity"] = None
    if "infidelity" not in scn.outputs:
        row["infidelity"] = None
    for key in ("omega_solid", "unitarity_defect", "purity", "infidelity"):
        if row[key] is not None and not math.isfinite(row[key]):
            raise NumericalError(f"non-finite {key} in row {scn.id}")
    return row
