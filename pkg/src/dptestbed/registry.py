"""Runtime parameter store with versioned snapshots and algorithm slots.

Parameters are flat string keys ("pid.kp.x", "ref.omega.psi", "alloc.rho",
...) declared in a manifest that carries defaults and validation bounds, so
the set of tunables and their limits are data, not code. The registry is the
hand-off point between the supervision service (writer) and the control loop
(reader): writes are serialized and atomic, reads always observe a complete
snapshot tagged with a monotonically increasing version.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from importlib import resources

import numpy as np


class UnknownParam(KeyError):
    """Parameter name not declared in the manifest."""


class InvalidValue(ValueError):
    """Parameter value outside its declared bounds."""


@dataclass(frozen=True)
class ParamSpec:
    default: float
    lo: float
    hi: float


DEFAULT_SLOTS = {
    "filter": "third-order",
    "controller": "pid",
    "allocator": "qp-sqp",
}


def load_param_manifest(path=None) -> dict[str, ParamSpec]:
    """Manifest from a JSON file; defaults to the packaged one."""
    if path is None:
        text = resources.files("dptestbed").joinpath("data/param_manifest.json").read_text()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    raw = json.loads(text)
    out = {}
    for name, entry in raw.items():
        spec = ParamSpec(float(entry["default"]), float(entry["lo"]), float(entry["hi"]))
        if not (spec.lo <= spec.default <= spec.hi):
            raise InvalidValue(f"manifest default for {name} outside its bounds")
        out[name] = spec
    return out


@dataclass(frozen=True)
class RegistrySnapshot:
    version: int
    values: dict
    slots: dict


class ParamRegistry:
    """Thread-safe versioned parameter map plus algorithm slot bindings."""

    def __init__(self, manifest: dict[str, ParamSpec] | None = None,
                 slots: dict[str, str] | None = None):
        self._specs = dict(manifest) if manifest is not None else load_param_manifest()
        self._values = {k: s.default for k, s in self._specs.items()}
        self._slots = dict(slots) if slots is not None else dict(DEFAULT_SLOTS)
        self._version = 0
        self._lock = threading.RLock()

    @property
    def version(self) -> int:
        with self._lock:
            return self._version

    def bounds(self, name: str) -> ParamSpec:
        try:
            return self._specs[name]
        except KeyError:
            raise UnknownParam(name) from None

    def get(self, name: str) -> float:
        with self._lock:
            try:
                return self._values[name]
            except KeyError:
                raise UnknownParam(name) from None

    def snapshot(self) -> RegistrySnapshot:
        with self._lock:
            return RegistrySnapshot(
                version=self._version,
                values=dict(self._values),
                slots=dict(self._slots),
            )

    def set_params(self, updates: dict) -> int:
        """Validate the whole batch, then apply it atomically. Returns the version."""
        with self._lock:
            staged = {}
            for name, value in updates.items():
                spec = self.bounds(name)
                try:
                    fval = float(value)
                except (TypeError, ValueError):
                    raise InvalidValue(f"{name}: {value!r} is not a number") from None
                if not np.isfinite(fval) or not (spec.lo <= fval <= spec.hi):
                    raise InvalidValue(
                        f"{name}: {fval!r} outside [{spec.lo:g}, {spec.hi:g}]"
                    )
                staged[name] = fval
            self._values.update(staged)
            self._version += 1
            return self._version

    def set_slot(self, slot: str, algorithm: str) -> int:
        with self._lock:
            if slot not in self._slots:
                raise UnknownParam(f"algorithm slot {slot!r}")
            self._slots[slot] = str(algorithm)
            self._version += 1
            return self._version
