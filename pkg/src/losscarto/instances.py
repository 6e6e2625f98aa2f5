"""Problem instances: a shape, training samples, optional weights, a seed.

The JSON format is the interchange used by the CLI:

    {"widths": [3, 4, 2],
     "weights": [0.1, ...],          # optional, length N
     "samples": [{"input": [...], "output": [...]}, ...],
     "seed": 7}

Floats are ingested through Fraction(float), i.e. exactly as the dyadic
rational the file parser produced, so a round-tripped instance evaluates
identically.  When weights are omitted they are drawn uniformly from
[-1, 1) by the stdlib Mersenne twister seeded with `seed`, which is
reproducible byte-for-byte across platforms.
"""

from __future__ import annotations

import json
import math
import os
import random
import tempfile
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import InstanceError
from .network import NetworkShape, TrainingSample, as_fraction, check_samples, make_loss_fn


@dataclass(frozen=True)
class Instance:
    shape: NetworkShape
    samples: tuple[TrainingSample, ...]
    weights: tuple[Fraction, ...] | None
    seed: int | None

    def resolved_weights(self) -> tuple[Fraction, ...]:
        """Stored weights, or the seed-determined draw when absent."""
        if self.weights is not None:
            return self.weights
        if self.seed is None:
            raise InstanceError("instance has neither weights nor a seed")
        return _draw_weights(self.shape, self.seed)

    def to_json(self) -> dict:
        data: dict = {"widths": list(self.shape.widths)}
        if self.weights is not None:
            data["weights"] = [float(w) for w in self.weights]
        data["samples"] = [
            {"input": [float(v) for v in s.input], "output": [float(v) for v in s.output]}
            for s in self.samples
        ]
        if self.seed is not None:
            data["seed"] = self.seed
        return data


def _draw_weights(shape: NetworkShape, seed: int) -> tuple[Fraction, ...]:
    rng = random.Random(seed)
    return tuple(as_fraction(rng.uniform(-1.0, 1.0)) for _ in range(shape.weight_count))


def gen_instance(
    widths: Sequence[int],
    n_samples: int,
    seed: int,
    *,
    materialize_weights: bool = False,
) -> Instance:
    """Random instance: inputs/outputs uniform in [-1, 1), seeded weights."""
    shape = NetworkShape(widths)
    if n_samples < 1:
        raise InstanceError("need at least one training sample")
    rng = random.Random(seed)
    samples = []
    for _ in range(n_samples):
        x = tuple(as_fraction(rng.uniform(-1.0, 1.0)) for _ in range(shape.widths[0]))
        b = tuple(as_fraction(rng.uniform(-1.0, 1.0)) for _ in range(shape.widths[-1]))
        samples.append(TrainingSample(x, b))
    weights = _draw_weights(shape, seed) if materialize_weights else None
    return Instance(shape=shape, samples=tuple(samples), weights=weights, seed=seed)


def make_warmup_instance(pairs: Sequence[tuple[float, float]]) -> tuple[Instance, np.ndarray, np.ndarray]:
    """[2,1,1] instance whose loss on the line base + t*dir is the 1-D warm-up.

    Each data pair (x, y) becomes the sample ((x, y), (0,)); restricted to
    w = (-a, 1, 1) the network computes a*x - y through the hidden ReLU,
    so the loss is sum_i (1/2) max(0, y_i - a x_i)^2 at a = t.  Returns
    (instance, base, direction) with base = (0, 1, 1), direction = (-1, 0, 0).
    """
    samples = tuple(
        TrainingSample((as_fraction(x), as_fraction(y)), (as_fraction(0),)) for x, y in pairs
    )
    inst = Instance(
        shape=NetworkShape((2, 1, 1)),
        samples=samples,
        weights=(Fraction(0), Fraction(1), Fraction(1)),
        seed=None,
    )
    base = np.array([0.0, 1.0, 1.0])
    direction = np.array([-1.0, 0.0, 0.0])
    return inst, base, direction


def make_oracle(instance: Instance) -> Callable[[np.ndarray], float]:
    """Vectorized float loss for the instance (weights are not consulted)."""
    return make_loss_fn(instance.shape, instance.samples)


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise InstanceError(msg)


def _as_number_list(val, what: str) -> list[float]:
    _require(isinstance(val, list) and len(val) > 0, f"{what} must be a non-empty list")
    out = []
    for v in val:
        _require(isinstance(v, (int, float)) and not isinstance(v, bool), f"{what} entries must be numbers")
        _require(math.isfinite(float(v)), f"{what} entries must be finite")
        out.append(float(v))
    return out


def instance_from_json(data: dict) -> Instance:
    _require(isinstance(data, dict), "instance must be a JSON object")
    _require("widths" in data, "missing 'widths'")
    widths = data["widths"]
    _require(
        isinstance(widths, list)
        and len(widths) >= 2
        and all(isinstance(d, int) and not isinstance(d, bool) and d >= 1 for d in widths),
        "'widths' must be a list of >= 2 positive integers",
    )
    shape = NetworkShape(widths)

    _require("samples" in data, "missing 'samples'")
    raw_samples = data["samples"]
    _require(isinstance(raw_samples, list) and len(raw_samples) > 0, "'samples' must be a non-empty list")
    samples = []
    for idx, row in enumerate(raw_samples):
        _require(isinstance(row, dict) and set(row) >= {"input", "output"}, f"sample {idx} needs 'input' and 'output'")
        x = _as_number_list(row["input"], f"sample {idx} input")
        b = _as_number_list(row["output"], f"sample {idx} output")
        _require(len(x) == shape.widths[0], f"sample {idx} input arity {len(x)} != d_1 = {shape.widths[0]}")
        _require(len(b) == shape.widths[-1], f"sample {idx} output arity {len(b)} != d_L = {shape.widths[-1]}")
        samples.append(TrainingSample(tuple(map(as_fraction, x)), tuple(map(as_fraction, b))))
    check_samples(shape, samples)

    weights = None
    if data.get("weights") is not None:
        vals = _as_number_list(data["weights"], "weights")
        _require(len(vals) == shape.weight_count, f"weights length {len(vals)} != N = {shape.weight_count}")
        weights = tuple(as_fraction(v) for v in vals)

    seed = data.get("seed")
    if seed is not None:
        _require(isinstance(seed, int) and not isinstance(seed, bool), "'seed' must be an integer")
    _require(weights is not None or seed is not None, "instance needs 'weights' or 'seed'")
    return Instance(shape=shape, samples=tuple(samples), weights=weights, seed=seed)


def load_instance(path: str | os.PathLike) -> Instance:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: not valid JSON ({exc})") from exc
    return instance_from_json(data)


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write via a temp file in the target directory plus rename."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".losscarto-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def save_instance(instance: Instance, path: str | os.PathLike) -> None:
    atomic_write_text(path, json.dumps(instance.to_json(), indent=2) + "\n")
