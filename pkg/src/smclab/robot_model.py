"""Kinematic and inertial description of a serial manipulator.

A robot is described by standard (distal) Denavit-Hartenberg rows, one rigid
link per joint with mass / center of mass / inertia tensor, and per-joint
limits.  Models are loaded from YAML files; three parameter sets ship with
the package:

    ur5e_like   6-DOF arm assembled from publicly available UR5e data
                sheets (approximate, every number is configurable)
    pendulum1   single-link pendulum swinging in the x-y plane
    planar2     two-link planar arm

All models are immutable after construction and safe to share between
threads or worker processes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

DEFAULT_GRAVITY = (0.0, 0.0, -9.81)

# Conservative torque caps used when a model file omits limits: 150 Nm for
# the first three (proximal) joints, 28 Nm for the rest.  Saturation in the
# harness keeps runaway switching torque from masking instability.
DEFAULT_TORQUE_PROXIMAL = 150.0
DEFAULT_TORQUE_DISTAL = 28.0
DEFAULT_VELOCITY_MAX = 2.0 * math.pi


class ModelError(ValueError):
    """Raised when a model document cannot be parsed or validated."""


def _as_array(value, shape, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape != shape:
        raise ModelError(f"{name}: expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ModelError(f"{name}: contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DHParameters:
    """Standard DH rows: link length a, offset d, twist alpha, theta offset.

    Joint k rotates about the z axis of frame k-1; the transform of one row
    is Rz(theta) Tz(d) Tx(a) Rx(alpha).
    """

    a: np.ndarray
    d: np.ndarray
    alpha: np.ndarray
    theta_offset: np.ndarray

    def __post_init__(self):
        n = len(self.a)
        for name in ("a", "d", "alpha", "theta_offset"):
            object.__setattr__(self, name, _as_array(getattr(self, name), (n,), f"dh.{name}"))

    @property
    def n(self) -> int:
        return len(self.a)

    def diagnostics(self) -> list[str]:
        out = []
        if self.n < 1:
            out.append("dh: at least one joint required")
        for name in ("alpha", "theta_offset"):
            ang = getattr(self, name)
            if np.any(ang <= -math.pi) or np.any(ang > math.pi):
                out.append(f"dh.{name}: angles must lie in (-pi, pi]")
        return out


@dataclass(frozen=True)
class LinkInertia:
    """Inertial data of one link, expressed in that link's DH frame."""

    mass: float
    center_of_mass: np.ndarray
    inertia_tensor: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mass", float(self.mass))
        object.__setattr__(self, "center_of_mass",
                           _as_array(self.center_of_mass, (3,), "center_of_mass"))
        object.__setattr__(self, "inertia_tensor",
                           _as_array(self.inertia_tensor, (3, 3), "inertia_tensor"))

    def diagnostics(self, label: str = "link") -> list[str]:
        out = []
        if not (self.mass > 0.0 and math.isfinite(self.mass)):
            out.append(f"{label}: mass must be positive, got {self.mass}")
        tensor = self.inertia_tensor
        if not np.allclose(tensor, tensor.T, atol=1e-12):
            out.append(f"{label}: inertia tensor is not symmetric")
        else:
            eigs = np.linalg.eigvalsh(tensor)
            if np.any(eigs <= 0.0):
                out.append(f"{label}: inertia tensor is not positive definite "
                           f"(eigenvalues {eigs})")
        return out


@dataclass(frozen=True)
class JointLimits:
    """Per-joint position range, velocity cap and torque cap."""

    position_min: np.ndarray
    position_max: np.ndarray
    velocity_max: np.ndarray
    torque_max: np.ndarray

    def __post_init__(self):
        n = len(self.position_min)
        for name in ("position_min", "position_max", "velocity_max", "torque_max"):
            object.__setattr__(self, name, _as_array(getattr(self, name), (n,), f"limits.{name}"))

    @property
    def n(self) -> int:
        return len(self.position_min)

    def diagnostics(self) -> list[str]:
        out = []
        if np.any(self.position_min >= self.position_max):
            out.append("limits: position_min must be < position_max for every joint")
        if np.any(self.velocity_max <= 0.0):
            out.append("limits: velocity_max must be positive")
        if np.any(self.torque_max <= 0.0):
            out.append("limits: torque_max must be positive")
        return out


@dataclass(frozen=True)
class RobotModel:
    """Immutable bundle of DH geometry, link inertias, limits and gravity."""

    dh: DHParameters
    inertia: tuple[LinkInertia, ...]
    limits: JointLimits
    gravity: np.ndarray = field(default_factory=lambda: np.array(DEFAULT_GRAVITY))
    name: str = "robot"

    def __post_init__(self):
        object.__setattr__(self, "inertia", tuple(self.inertia))
        object.__setattr__(self, "gravity", _as_array(self.gravity, (3,), "gravity"))

    @property
    def n(self) -> int:
        return self.dh.n

    @cached_property
    def packed(self):
        """Flat array views consumed by the compiled kernels."""
        masses = np.array([link.mass for link in self.inertia])
        coms = np.array([link.center_of_mass for link in self.inertia])
        tensors = np.array([link.inertia_tensor for link in self.inertia])
        for arr in (masses, coms, tensors):
            arr.setflags(write=False)
        return (self.dh.a, self.dh.d, self.dh.alpha, self.dh.theta_offset,
                masses, coms, tensors, self.gravity)

    def with_gravity(self, gravity) -> "RobotModel":
        return RobotModel(self.dh, self.inertia, self.limits,
                          np.asarray(gravity, dtype=float), self.name)

    def with_mass_scale(self, factor: float) -> "RobotModel":
        """Scale every link mass and inertia tensor by ``factor``.

        Used to build a perturbed plant for robustness studies; the center
        of mass is unchanged (denser links, same geometry).
        """
        if not factor > 0.0:
            raise ModelError(f"mass scale factor must be positive, got {factor}")
        scaled = tuple(LinkInertia(link.mass * factor, link.center_of_mass,
                                   link.inertia_tensor * factor)
                       for link in self.inertia)
        return RobotModel(self.dh, scaled, self.limits, self.gravity,
                          f"{self.name}*m{factor:g}")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "gravity": [float(v) for v in self.gravity],
            "dh": {
                "a": [float(v) for v in self.dh.a],
                "d": [float(v) for v in self.dh.d],
                "alpha": [float(v) for v in self.dh.alpha],
                "theta_offset": [float(v) for v in self.dh.theta_offset],
            },
            "links": [
                {
                    "mass": float(link.mass),
                    "com": [float(v) for v in link.center_of_mass],
                    "inertia": [[float(v) for v in row] for row in link.inertia_tensor],
                }
                for link in self.inertia
            ],
            "limits": {
                "position_min": [float(v) for v in self.limits.position_min],
                "position_max": [float(v) for v in self.limits.position_max],
                "velocity_max": [float(v) for v in self.limits.velocity_max],
                "torque_max": [float(v) for v in self.limits.torque_max],
            },
        }


def validate_model(model: RobotModel) -> list[str]:
    """Return one diagnostic string per violated invariant (empty if valid)."""
    out = model.dh.diagnostics()
    n = model.dh.n
    if len(model.inertia) != n:
        out.append(f"model: dh has {n} joints but {len(model.inertia)} links given")
    if model.limits.n != n:
        out.append(f"model: dh has {n} joints but limits cover {model.limits.n}")
    for i, link in enumerate(model.inertia):
        out.extend(link.diagnostics(label=f"link {i + 1}"))
    out.extend(model.limits.diagnostics())
    return out


def _default_limits(n: int) -> dict:
    torque = [DEFAULT_TORQUE_PROXIMAL if i < 3 else DEFAULT_TORQUE_DISTAL
              for i in range(n)]
    return {
        "position_min": [-2.0 * math.pi] * n,
        "position_max": [2.0 * math.pi] * n,
        "velocity_max": [DEFAULT_VELOCITY_MAX] * n,
        "torque_max": torque,
    }


def _model_from_dict(doc: dict) -> RobotModel:
    if not isinstance(doc, dict):
        raise ModelError("model document must be a mapping")
    try:
        dh_doc = doc["dh"]
        links_doc = doc["links"]
    except KeyError as exc:
        raise ModelError(f"missing required section {exc}") from exc

    for key in ("a", "d", "alpha"):
        if key not in dh_doc:
            raise ModelError(f"dh section is missing '{key}'")
    n = len(dh_doc["a"])
    dh = DHParameters(
        a=dh_doc["a"],
        d=dh_doc["d"],
        alpha=dh_doc["alpha"],
        theta_offset=dh_doc.get("theta_offset", [0.0] * n),
    )

    links = []
    for i, link_doc in enumerate(links_doc):
        try:
            links.append(LinkInertia(
                mass=link_doc["mass"],
                center_of_mass=link_doc["com"],
                inertia_tensor=link_doc["inertia"],
            ))
        except KeyError as exc:
            raise ModelError(f"link {i + 1}: missing field {exc}") from exc

    limits_doc = dict(_default_limits(n))
    limits_doc.update(doc.get("limits", {}))
    limits = JointLimits(**limits_doc)

    model = RobotModel(
        dh=dh,
        inertia=tuple(links),
        limits=limits,
        gravity=np.asarray(doc.get("gravity", DEFAULT_GRAVITY), dtype=float),
        name=str(doc.get("name", "robot")),
    )
    problems = validate_model(model)
    if problems:
        raise ModelError("invalid model: " + "; ".join(problems))
    return model


def bundled_model_path(name: str) -> Path:
    path = resources.files("smclab") / "models" / f"{name}.yaml"
    return Path(str(path))


def load_model(source) -> RobotModel:
    """Load and validate a robot model.

    ``source`` may be a bundled model name ("ur5e_like", "pendulum1",
    "planar2"), a path to a YAML file, a YAML string, or an already parsed
    mapping.  Raises :class:`ModelError` with the offending field named on
    parse or validation failure.
    """
    if isinstance(source, RobotModel):
        return source
    if isinstance(source, dict):
        return _model_from_dict(source)

    text = None
    if isinstance(source, Path):
        text = source.read_text()
    elif isinstance(source, str):
        if "\n" in source:
            text = source
        else:
            candidate = bundled_model_path(source)
            if candidate.exists():
                text = candidate.read_text()
            elif Path(source).exists():
                text = Path(source).read_text()
            elif ":" in source:
                text = source
            else:
                raise ModelError(f"no bundled model or file named {source!r}")
    else:
        raise ModelError(f"cannot load a model from {type(source).__name__}")

    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ModelError(f"model document does not parse: {exc}") from exc
    return _model_from_dict(doc)


def serialize_model(model: RobotModel) -> str:
    """YAML document that :func:`load_model` round-trips bit-exactly."""
    return yaml.safe_dump(model.to_dict(), sort_keys=False)
