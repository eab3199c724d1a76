"""JSON system configs: strict parsing, canonical serialization, bundled examples.

A config is a JSON object; generator coefficients are ``[re, im]`` pairs in
ascending degree.  Unknown keys are rejected at every level.

Defaults (applied when a key is absent; reports embed the resolved values):

    ==================  ==================================================
    depth               min(10, floor(log 2e6 / log(sum deg)) - 1)
    measure_depths      [6, 8]
    cloud_count         20000
    rng_seed            0
    output_dir          "."
    render_bounds       [-2, 2, -2, 2]
    render_resolution   [512, 512]
    tolerances          root_residual 1e-12, newton_max_iter 200,
                        deriv_floor 1e-14, overflow 1e150
    base_point          repelling fixed point of f_1 (or of a short word)
    open_set            none (open set condition left unchecked)
    ==================  ==================================================
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from .checks import OpenSet, open_set_from_json
from .semigroup import GeneratorSystem
from .sphere import NumericTolerances, RationalMap


class ConfigError(ValueError):
    pass


DEFAULTS = {
    "measure_depths": [6, 8],
    "cloud_count": 20000,
    "rng_seed": 0,
    "output_dir": ".",
    "render_bounds": [-2.0, 2.0, -2.0, 2.0],
    "render_resolution": [512, 512],
}

_KEYS = {
    "name",
    "generators",
    "open_set",
    "base_point",
    "tolerances",
    "depth",
    "measure_depths",
    "cloud_count",
    "rng_seed",
    "output_dir",
    "render_bounds",
    "render_resolution",
}

BUNDLED = ("z2", "gasket", "annulus", "square_affine", "cubic_quadratic", "cubic_square")


@dataclass(frozen=True)
class SystemConfig:
    generators: tuple
    name: str = ""
    open_set: Optional[OpenSet] = None
    base_point: Optional[complex] = None
    tolerances: NumericTolerances = field(default_factory=NumericTolerances)
    depth: Optional[int] = None
    measure_depths: tuple = tuple(DEFAULTS["measure_depths"])
    cloud_count: int = DEFAULTS["cloud_count"]
    rng_seed: int = DEFAULTS["rng_seed"]
    output_dir: str = DEFAULTS["output_dir"]
    render_bounds: tuple = tuple(DEFAULTS["render_bounds"])
    render_resolution: tuple = tuple(DEFAULTS["render_resolution"])

    def system(self) -> GeneratorSystem:
        return GeneratorSystem(self.generators, name=self.name, tol=self.tolerances)

    def to_json(self) -> dict:
        out = {"name": self.name, "generators": [g.to_json() for g in self.generators]}
        if self.open_set is not None:
            out["open_set"] = self.open_set.to_json()
        if self.base_point is not None:
            out["base_point"] = [self.base_point.real, self.base_point.imag]
        out["tolerances"] = dataclasses.asdict(self.tolerances)
        if self.depth is not None:
            out["depth"] = self.depth
        out["measure_depths"] = list(self.measure_depths)
        out["cloud_count"] = self.cloud_count
        out["rng_seed"] = self.rng_seed
        out["output_dir"] = self.output_dir
        out["render_bounds"] = list(self.render_bounds)
        out["render_resolution"] = list(self.render_resolution)
        return out

    def canonical(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    def sha256(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    @classmethod
    def from_json(cls, obj: dict) -> "SystemConfig":
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
        extra = set(obj) - _KEYS
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        if "generators" not in obj or not obj["generators"]:
            raise ConfigError("config needs a nonempty 'generators' list")
        try:
            gens = tuple(RationalMap.from_json(g) for g in obj["generators"])
            tol = obj.get("tolerances", {})
            bad = set(tol) - {f.name for f in dataclasses.fields(NumericTolerances)}
            if bad:
                raise ConfigError(f"unknown tolerance keys: {sorted(bad)}")
            tol = NumericTolerances(**tol)
            U = open_set_from_json(obj["open_set"]) if "open_set" in obj else None
            bp = obj.get("base_point")
            if bp is not None:
                if len(bp) != 2:
                    raise ConfigError("base_point must be [re, im]")
                bp = complex(float(bp[0]), float(bp[1]))
            depth = obj.get("depth")
            if depth is not None and (int(depth) != depth or depth < 2):
                raise ConfigError("depth must be an integer >= 2")
            md = tuple(int(v) for v in obj.get("measure_depths", DEFAULTS["measure_depths"]))
            if len(md) != 2 or not 1 <= md[0] <= md[1]:
                raise ConfigError("measure_depths must be [p_min, p_max] with 1 <= p_min <= p_max")
            rb = tuple(float(v) for v in obj.get("render_bounds", DEFAULTS["render_bounds"]))
            rr = tuple(int(v) for v in obj.get("render_resolution", DEFAULTS["render_resolution"]))
            if len(rb) != 4 or len(rr) != 2:
                raise ConfigError("render_bounds needs 4 numbers and render_resolution 2")
            cfg = cls(
                generators=gens,
                name=str(obj.get("name", "")),
                open_set=U,
                base_point=bp,
                tolerances=tol,
                depth=None if depth is None else int(depth),
                measure_depths=md,
                cloud_count=int(obj.get("cloud_count", DEFAULTS["cloud_count"])),
                rng_seed=int(obj.get("rng_seed", DEFAULTS["rng_seed"])),
                output_dir=str(obj.get("output_dir", DEFAULTS["output_dir"])),
                render_bounds=rb,
                render_resolution=rr,
            )
            cfg.system()
        except ConfigError:
            raise
        except (ValueError, TypeError, KeyError) as exc:
            raise ConfigError(str(exc)) from exc
        return cfg


def bundled_path(name: str):
    return resources.files("semigroup_dim").joinpath("configs", f"{name}.json")


def load_config(path_or_name) -> SystemConfig:
    """Load a config file; bundled names (``z2``, ``examples/z2.json``) resolve to packaged copies."""
    p = Path(path_or_name)
    if p.is_file():
        text = p.read_text()
    else:
        stem = p.stem if p.suffix == ".json" else p.name
        if stem not in BUNDLED:
            raise ConfigError(f"no config file {str(path_or_name)!r} and no bundled system of that name")
        text = bundled_path(stem).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    return SystemConfig.from_json(obj)
