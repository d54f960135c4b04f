"""JSON formats for networks, verification problems and reports."""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .geom import Hyperbox


class FormatError(ValueError):
    """Input file could not be parsed or failed validation."""


@dataclass(frozen=True)
class LayerSpec:
    weight: np.ndarray
    bias: np.ndarray
    feature_shape: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "weight", np.atleast_2d(np.asarray(self.weight, dtype=float)))
        object.__setattr__(self, "bias", np.asarray(self.bias, dtype=float).reshape(-1))

    @property
    def out_dim(self):
        return self.weight.shape[0]

    @property
    def in_dim(self):
        return self.weight.shape[1]


@dataclass(frozen=True)
class NetworkSpec:
    layers: tuple
    input_dim: int

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        validate_network(self)

    @property
    def n_relu(self):
        """Number of ReLU layers (one fewer than affine layers)."""
        return len(self.layers) - 1

    @property
    def widths(self):
        return [layer.out_dim for layer in self.layers]

    @property
    def output_dim(self):
        return self.layers[-1].out_dim

    def pre_activations(self, x):
        """All pre-activation vectors for a batch ``x`` of shape (..., input_dim)."""
        h = np.asarray(x, dtype=float)
        out = []
        for k, layer in enumerate(self.layers):
            z = h @ layer.weight.T + layer.bias
            out.append(z)
            h = np.maximum(z, 0.0)
        return out

    def __call__(self, x):
        return self.pre_activations(x)[-1]

    def truncate(self, depth):
        """Network made of the first ``depth + 1`` affine layers."""
        return NetworkSpec(self.layers[: depth + 1], self.input_dim)


@dataclass(frozen=True)
class ProblemSpec:
    input_center: np.ndarray
    epsilon: float
    objective: np.ndarray
    clip_lo: Optional[np.ndarray] = None
    clip_hi: Optional[np.ndarray] = None


@dataclass
class ReportSpec:
    bound_init: float
    bound_iter: float
    bound_eval: float
    phase_times_s: list
    config_echo: dict = field(default_factory=dict)
    valid: bool = True

    def to_dict(self):
        return {
            "bound_init": self.bound_init,
            "bound_iter": self.bound_iter,
            "bound_eval": self.bound_eval,
            "phase_times_s": list(self.phase_times_s),
            "config_echo": self.config_echo,
            "valid": self.valid,
        }


def validate_network(net):
    if not net.layers:
        raise FormatError("network has no layers")
    if int(net.input_dim) < 1:
        raise FormatError(f"input_dim must be positive, got {net.input_dim}")
    prev = net.input_dim
    for k, layer in enumerate(net.layers):
        W, b = layer.weight, layer.bias
        if W.ndim != 2:
            raise FormatError(f"layer {k}: weight must be a matrix")
        if W.shape[1] != prev:
            raise FormatError(f"layer {k}: weight has {W.shape[1]} columns but the previous width is {prev}")
        if b.shape != (W.shape[0],):
            raise FormatError(f"layer {k}: bias length {b.size} != weight rows {W.shape[0]}")
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
            raise FormatError(f"layer {k}: non-finite entries")
        if layer.feature_shape is not None:
            if len(layer.feature_shape) != 3 or math.prod(layer.feature_shape) != W.shape[0]:
                raise FormatError(f"layer {k}: feature_shape {layer.feature_shape} does not match {W.shape[0]} rows")
        prev = W.shape[0]


def _read_json(path):
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from e


def _matrix(value, what):
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as e:
        raise FormatError(f"{what}: not a numeric array") from e
    return arr


def network_from_dict(data):
    try:
        input_dim = int(data["input_dim"])
        raw_layers = data["layers"]
    except (KeyError, TypeError) as e:
        raise FormatError(f"network JSON missing field {e}") from e
    layers = []
    for k, raw in enumerate(raw_layers):
        if not isinstance(raw, dict) or "weight" not in raw or "bias" not in raw:
            raise FormatError(f"layer {k}: expected an object with 'weight' and 'bias'")
        W = _matrix(raw["weight"], f"layer {k} weight")
        if W.ndim == 1 and W.size == 0:
            W = W.reshape(0, 0)
        b = _matrix(raw["bias"], f"layer {k} bias").reshape(-1)
        shape = raw.get("feature_shape")
        layers.append(LayerSpec(W, b, tuple(int(s) for s in shape) if shape is not None else None))
    return NetworkSpec(tuple(layers), input_dim)


def network_to_dict(net):
    return {
        "input_dim": int(net.input_dim),
        "layers": [
            {
                "weight": layer.weight.tolist(),
                "bias": layer.bias.tolist(),
                "feature_shape": list(layer.feature_shape) if layer.feature_shape is not None else None,
            }
            for layer in net.layers
        ],
    }


def load_network(path):
    return network_from_dict(_read_json(path))


def save_network(net, path):
    Path(path).write_text(json.dumps(network_to_dict(net), allow_nan=False))


def problem_from_dict(data, input_dim=None, output_dim=None):
    try:
        center = np.array(data["input_center"], dtype=float).reshape(-1)
        eps = float(data["epsilon"])
        objective = np.array(data["objective"], dtype=float).reshape(-1)
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"problem JSON: bad or missing field ({e})") from e
    clip_lo = data.get("clip_lo")
    clip_hi = data.get("clip_hi")
    clip_lo = None if clip_lo is None else np.array(clip_lo, dtype=float).reshape(-1)
    clip_hi = None if clip_hi is None else np.array(clip_hi, dtype=float).reshape(-1)
    p = ProblemSpec(center, eps, objective, clip_lo, clip_hi)
    validate_problem(p, input_dim, output_dim)
    return p


def problem_to_dict(p):
    return {
        "input_center": p.input_center.tolist(),
        "epsilon": p.epsilon,
        "clip_lo": None if p.clip_lo is None else p.clip_lo.tolist(),
        "clip_hi": None if p.clip_hi is None else p.clip_hi.tolist(),
        "objective": p.objective.tolist(),
    }


def validate_problem(p, input_dim=None, output_dim=None):
    if not math.isfinite(p.epsilon) or p.epsilon < 0:
        raise FormatError(f"epsilon must be a nonnegative real, got {p.epsilon}")
    if input_dim is not None and p.input_center.size != input_dim:
        raise FormatError(f"input_center has length {p.input_center.size}, network expects {input_dim}")
    if output_dim is not None and p.objective.size != output_dim:
        raise FormatError(f"objective has length {p.objective.size}, network output width is {output_dim}")
    for name, clip in (("clip_lo", p.clip_lo), ("clip_hi", p.clip_hi)):
        if clip is not None and clip.size != p.input_center.size:
            raise FormatError(f"{name} has length {clip.size}, expected {p.input_center.size}")
    if p.clip_lo is not None and p.clip_hi is not None and np.any(p.clip_lo > p.clip_hi):
        raise FormatError("clip_lo exceeds clip_hi")
    make_input_box(p)


def load_problem(path, net=None):
    data = _read_json(path)
    if net is None:
        return problem_from_dict(data)
    return problem_from_dict(data, net.input_dim, net.output_dim)


def save_problem(p, path):
    Path(path).write_text(json.dumps(problem_to_dict(p), allow_nan=False))


def make_input_box(p):
    lo = p.input_center - p.epsilon
    hi = p.input_center + p.epsilon
    if p.clip_lo is not None:
        lo = np.maximum(lo, p.clip_lo)
    if p.clip_hi is not None:
        hi = np.minimum(hi, p.clip_hi)
    if np.any(lo > hi):
        bad = int(np.argmax(lo > hi))
        raise FormatError(f"input box is empty at coordinate {bad}: center lies outside the clip range by more than epsilon")
    return Hyperbox(lo, hi)


def fold_objective(net, objective):
    """Absorb a linear objective into the last layer, giving a scalar network."""
    objective = np.asarray(objective, dtype=float).reshape(-1)
    last = net.layers[-1]
    if objective.size != last.out_dim:
        raise FormatError(f"objective length {objective.size} != network output width {last.out_dim}")
    folded = LayerSpec((objective @ last.weight)[None, :], np.array([objective @ last.bias]), None)
    return NetworkSpec(net.layers[:-1] + (folded,), net.input_dim)


def write_report(report, path):
    data = report.to_dict() if isinstance(report, ReportSpec) else report
    # allow_nan=False: a NaN bound is never a valid certificate
    text = json.dumps(data, sort_keys=True, indent=2, allow_nan=False)
    with open(path, "w") as f:
        f.write(text + "\n")


def read_report(path):
    data = _read_json(path)
    return ReportSpec(
        data["bound_init"], data["bound_iter"], data["bound_eval"],
        data["phase_times_s"], data.get("config_echo", {}), data["valid"],
    )
