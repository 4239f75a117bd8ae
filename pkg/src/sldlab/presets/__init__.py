"""Named, versioned experiment presets shipped as JSON data files.

Presets pin every knob of a sweep (dimensions, noise level, grid, seeds,
estimators) plus how to fit the resulting curves, so `sldlab reproduce
<name>` regenerates the same tables from nothing but a base seed.  Keeping
them as data rather than code means a preset revision is an explicit,
reviewable file change.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from ..errors import UsageError
from ..model import ModelParams
from ..sweep import ESTIMATOR_NAMES, SweepConfig, default_train_grid


@dataclass(frozen=True)
class FitSpec:
    """How reproduce should fit each curve: mode, floor policy, fit region."""

    mode: str  # "single" | "excess" | "segmented"
    floor: str  # "auto" | "none"
    min_train_size: int = 1


@dataclass(frozen=True)
class SweepSpec:
    """One sweep of a preset; converts to a SweepConfig given a base seed."""

    label: str
    d: int
    n: int
    sigma_z: float
    grid: tuple[int, int, int]
    n_seeds: int
    estimators: tuple[str, ...]

    def to_config(self, base_seed: int) -> SweepConfig:
        return SweepConfig(
            params=ModelParams(d=self.d, n=self.n, sigma_z=self.sigma_z),
            train_sizes=default_train_grid(*self.grid),
            n_seeds=self.n_seeds,
            estimators=self.estimators,
            base_seed=base_seed,
        )


@dataclass(frozen=True)
class Preset:
    name: str
    version: int
    description: str
    sweeps: tuple[SweepSpec, ...]
    fit: FitSpec | None


def list_presets() -> tuple[str, ...]:
    files = resources.files(__name__)
    return tuple(sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".json")))


def load_preset(name: str) -> Preset:
    available = list_presets()
    if name not in available:
        raise UsageError(f"unknown preset {name!r}; available: {', '.join(available)}")
    raw = json.loads(resources.files(__name__).joinpath(f"{name}.json").read_text("utf-8"))
    try:
        sweeps = tuple(
            SweepSpec(
                label=str(s["label"]),
                d=int(s["d"]),
                n=int(s["n"]),
                sigma_z=float(s["sigma_z"]),
                grid=tuple(int(g) for g in s["grid"]),
                n_seeds=int(s["n_seeds"]),
                estimators=tuple(str(e).upper() for e in s["estimators"]),
            )
            for s in raw["sweeps"]
        )
        fit = None
        if raw.get("fit") is not None:
            fit = FitSpec(
                mode=str(raw["fit"]["mode"]),
                floor=str(raw["fit"].get("floor", "none")),
                min_train_size=int(raw["fit"].get("min_train_size", 1)),
            )
        preset = Preset(
            name=str(raw["name"]),
            version=int(raw["version"]),
            description=str(raw.get("description", "")),
            sweeps=sweeps,
            fit=fit,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"preset {name!r} is malformed: {exc}") from exc
    if not preset.sweeps:
        raise UsageError(f"preset {name!r} declares no sweeps")
    if preset.fit is not None and preset.fit.mode not in ("single", "excess", "segmented"):
        raise UsageError(f"preset {name!r} has unknown fit mode {preset.fit.mode!r}")
    for s in preset.sweeps:
        for e in s.estimators:
            if e not in ESTIMATOR_NAMES:
                raise UsageError(f"preset {name!r} requests unknown estimator {e!r}")
    return preset
