"""Declarative experiment configuration for the command-line front end.

A config is a single YAML (or JSON) mapping.  Exactly one of ``layers`` /
``coefficients`` selects the beam; mesh sizes, schemes, and gains may be
scalars (``N``, ``scheme``, ``xi``) or lists (``N_list``, ``schemes``,
``xi_list``).  Parsing is strict: unknown keys are rejected so that typos
fail loudly instead of silently running defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import yaml

from .discretization import SCHEMES, BeamState
from .dynamics import make_box_initial, make_random_initial
from .errors import ValidationError
from .model import DEFAULT_TIME_SCALE, BeamCoefficients, LayerSpec, derive_coefficients

_LAYER_KEYS = ("top", "core", "bottom")
_LAYER_FIELDS = ("rho", "thickness", "youngs", "shear", "poisson")

_TOP_KEYS = {
    "layers", "coefficients", "N", "N_list", "scheme", "schemes", "xi",
    "xi_list", "T", "dt", "time_scale", "initial", "out_dir", "seed",
    "draws", "workers", "snapshot_stride",
}


@dataclass(frozen=True)
class InitialSpec:
    """How to build initial data: one of box / random / snapshot."""

    kind: str                      # "box" | "random" | "snapshot"
    amplitude: float = 1e-3
    support: tuple = (0.25, 0.75)
    path: Optional[str] = None

    def build(self, grid, rng=None):
        if self.kind == "box":
            return make_box_initial(grid, self.amplitude, self.support)
        if self.kind == "random":
            if rng is None:
                raise ValidationError("random initial data requires a seeded rng")
            return make_random_initial(grid, rng, amplitude=self.amplitude)
        return load_state_csv(self.path, grid)


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated, immutable experiment description (see module docstring)."""

    layers: Optional[tuple] = None            # (top, core, bottom) LayerSpec
    coefficients: Optional[tuple] = None      # (B, C, P)
    N_list: tuple = ()
    schemes: tuple = ("orfd",)
    xi_list: tuple = (0.0,)
    T: float = 10.0
    dt: Optional[float] = None                # None -> T/4096 at run time
    time_scale: Optional[float] = None        # None -> scheme default
    initial: InitialSpec = field(default_factory=lambda: InitialSpec(kind="box"))
    out_dir: str = "results"
    seed: int = 0
    draws: int = 1
    workers: int = 1
    snapshot_stride: int = 0

    def resolve_coefficients(self) -> BeamCoefficients:
        """Materialize BeamCoefficients, deriving from layers when given."""
        if self.layers is not None:
            scale = DEFAULT_TIME_SCALE if self.time_scale is None else self.time_scale
            return derive_coefficients(*self.layers, time_scale=scale)
        b, c, p = self.coefficients
        scale = 1.0 if self.time_scale is None else self.time_scale
        return BeamCoefficients(B=b, C=c, P=p, time_scale=scale)

    def resolve_dt(self) -> float:
        return self.T / 4096.0 if self.dt is None else self.dt

    def to_dict(self) -> dict:
        """Plain-scalar dict suitable for YAML round-tripping."""
        out = {
            "N_list": list(self.N_list),
            "schemes": list(self.schemes),
            "xi_list": list(self.xi_list),
            "T": self.T,
            "dt": self.dt,
            "time_scale": self.time_scale,
            "out_dir": self.out_dir,
            "seed": self.seed,
            "draws": self.draws,
            "workers": self.workers,
            "snapshot_stride": self.snapshot_stride,
        }
        if self.layers is not None:
            out["layers"] = {
                name: {f: getattr(layer, f) for f in _LAYER_FIELDS}
                for name, layer in zip(_LAYER_KEYS, self.layers)
            }
        if self.coefficients is not None:
            b, c, p = self.coefficients
            out["coefficients"] = {"B": b, "C": c, "P": p}
        if self.initial.kind == "snapshot":
            out["initial"] = {"snapshot": self.initial.path}
        elif self.initial.kind == "random":
            out["initial"] = {"random": {"amplitude": self.initial.amplitude}}
        else:
            out["initial"] = {
                "box": {
                    "amplitude": self.initial.amplitude,
                    "support": list(self.initial.support),
                }
            }
        return out


# ----------------------------------------------------------------------------
# parsing
# ----------------------------------------------------------------------------

def _require_number(raw, key, minimum=None, strict=False, integer=False):
    if isinstance(raw, str):
        # YAML 1.1 reads exponents without a sign ("72.0e9") as strings.
        try:
            raw = float(raw)
        except ValueError:
            pass
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ValidationError(f"config key '{key}' must be a number, got {raw!r}")
    if integer and int(raw) != raw:
        raise ValidationError(f"config key '{key}' must be an integer, got {raw!r}")
    value = int(raw) if integer else float(raw)
    if minimum is not None and (value <= minimum if strict else value < minimum):
        op = ">" if strict else ">="
        raise ValidationError(f"config key '{key}' must be {op} {minimum}, got {raw!r}")
    return value


def _as_list(data, scalar_key, list_key):
    """Accept scalar or list spelling of a swept config key, never both."""
    if scalar_key in data and list_key in data:
        raise ValidationError(
            f"config must not set both '{scalar_key}' and '{list_key}'"
        )
    if list_key in data:
        raw = data[list_key]
        if not isinstance(raw, (list, tuple)):
            raise ValidationError(f"config key '{list_key}' must be a list")
        return list(raw)
    if scalar_key in data:
        return [data[scalar_key]]
    return None


def _parse_layers(raw):
    if not isinstance(raw, dict) or set(raw) != set(_LAYER_KEYS):
        raise ValidationError(
            f"'layers' must be a mapping with exactly the keys {_LAYER_KEYS}"
        )
    layers = []
    for name in _LAYER_KEYS:
        entry = raw[name]
        if not isinstance(entry, dict) or set(entry) != set(_LAYER_FIELDS):
            raise ValidationError(
                f"layer '{name}' must be a mapping with exactly the fields "
                f"{_LAYER_FIELDS}"
            )
        kwargs = {
            f: _require_number(entry[f], f"layers.{name}.{f}") for f in _LAYER_FIELDS
        }
        layers.append(LayerSpec(**kwargs))
    return tuple(layers)


def _parse_initial(raw):
    if raw is None:
        return InitialSpec(kind="box")
    if not isinstance(raw, dict) or len(raw) != 1:
        raise ValidationError(
            "'initial' must be a one-key mapping: box / random / snapshot"
        )
    kind, body = next(iter(raw.items()))
    if kind == "box":
        body = {} if body is None else body
        if not isinstance(body, dict) or not set(body) <= {"amplitude", "support"}:
            raise ValidationError("'initial.box' accepts keys amplitude, support")
        amplitude = _require_number(body.get("amplitude", 1e-3), "initial.box.amplitude")
        support = body.get("support", [0.25, 0.75])
        if not isinstance(support, (list, tuple)) or len(support) != 2:
            raise ValidationError("'initial.box.support' must be a pair [a, b]")
        a = _require_number(support[0], "initial.box.support[0]")
        b = _require_number(support[1], "initial.box.support[1]")
        return InitialSpec(kind="box", amplitude=amplitude, support=(a, b))
    if kind == "random":
        body = {} if body is None else body
        if not isinstance(body, dict) or not set(body) <= {"amplitude"}:
            raise ValidationError("'initial.random' accepts the key amplitude")
        amplitude = _require_number(
            body.get("amplitude", 1.0), "initial.random.amplitude", minimum=0.0,
            strict=True,
        )
        return InitialSpec(kind="random", amplitude=amplitude)
    if kind == "snapshot":
        if not isinstance(body, str) or not body:
            raise ValidationError("'initial.snapshot' must be a file path")
        return InitialSpec(kind="snapshot", path=body)
    raise ValidationError(f"unknown initial kind '{kind}'")


def parse_config(data) -> ExperimentConfig:
    """Validate a raw mapping (already loaded from YAML) into a config."""
    if not isinstance(data, dict):
        raise ValidationError(f"config root must be a mapping, got {type(data).__name__}")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    data = {k: v for k, v in data.items() if v is not None}  # null means unset

    if ("layers" in data) == ("coefficients" in data):
        raise ValidationError(
            "config must set exactly one of 'layers' or 'coefficients'"
        )
    layers = _parse_layers(data["layers"]) if "layers" in data else None
    coefficients = None
    if "coefficients" in data:
        raw = data["coefficients"]
        if not isinstance(raw, dict) or set(raw) != {"B", "C", "P"}:
            raise ValidationError("'coefficients' must be a mapping with keys B, C, P")
        coefficients = tuple(
            _require_number(raw[k], f"coefficients.{k}", minimum=0.0, strict=True)
            for k in ("B", "C", "P")
        )

    n_raw = _as_list(data, "N", "N_list")
    n_list = ()
    if n_raw is not None:
        n_list = tuple(
            _require_number(v, "N", minimum=3, integer=True) for v in n_raw
        )

    scheme_raw = _as_list(data, "scheme", "schemes") or ["orfd"]
    schemes = []
    for s in scheme_raw:
        if not isinstance(s, str) or s.lower() not in SCHEMES:
            raise ValidationError(
                f"scheme must be one of {sorted(SCHEMES)}, got {s!r}"
            )
        schemes.append(s.lower())

    xi_raw = _as_list(data, "xi", "xi_list") or [0.0]
    xi_list = tuple(_require_number(v, "xi", minimum=0.0) for v in xi_raw)

    t_final = _require_number(data.get("T", 10.0), "T", minimum=0.0, strict=True)
    dt = data.get("dt")
    if dt is not None:
        dt = _require_number(dt, "dt", minimum=0.0, strict=True)
        if dt > t_final:
            raise ValidationError(f"dt = {dt} exceeds T = {t_final}")
    time_scale = data.get("time_scale")
    if time_scale is not None:
        time_scale = _require_number(time_scale, "time_scale", minimum=0.0, strict=True)

    out_dir = data.get("out_dir", "results")
    if not isinstance(out_dir, str) or not out_dir:
        raise ValidationError("'out_dir' must be a non-empty string")

    config = ExperimentConfig(
        layers=layers,
        coefficients=coefficients,
        N_list=n_list,
        schemes=tuple(schemes),
        xi_list=xi_list,
        T=t_final,
        dt=dt,
        time_scale=time_scale,
        initial=_parse_initial(data.get("initial")),
        out_dir=out_dir,
        seed=_require_number(data.get("seed", 0), "seed", minimum=0, integer=True),
        draws=_require_number(data.get("draws", 1), "draws", minimum=1, integer=True),
        workers=_require_number(data.get("workers", 1), "workers", minimum=1,
                                integer=True),
        snapshot_stride=_require_number(
            data.get("snapshot_stride", 0), "snapshot_stride", minimum=0, integer=True
        ),
    )
    if config.draws > 1 and config.initial.kind != "random":
        raise ValidationError("draws > 1 requires random initial data")
    return config


def load_config(path) -> ExperimentConfig:
    """Load and validate a YAML/JSON config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ValidationError(f"config {path} is not valid YAML: {exc}") from exc
    return parse_config(data)


def dump_config(config: ExperimentConfig) -> str:
    """Serialize back to YAML; parse(dump(c)) == c."""
    return yaml.safe_dump(config.to_dict(), sort_keys=True, default_flow_style=False)


def apply_overrides(data: dict, overrides) -> dict:
    """Apply ``key=value`` strings (dotted keys descend into mappings)."""
    for item in overrides:
        if "=" not in item:
            raise ValidationError(f"override '{item}' is not of the form key=value")
        key, _, raw = item.partition("=")
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError as exc:
            raise ValidationError(f"override value {raw!r} is not valid YAML: {exc}")
        node = data
        parts = key.split(".")
        for part in parts[:-1]:
            nxt = node.get(part)
            if not isinstance(nxt, dict):
                nxt = {}
                node[part] = nxt
            node = nxt
        node[parts[-1]] = value
    return data


# ----------------------------------------------------------------------------
# state files
# ----------------------------------------------------------------------------

def save_state_csv(path, state):
    """Write a full beam state as CSV with columns z,zdot (one row per node)."""
    lines = ["z,zdot"]
    for zj, vj in zip(state.z, state.zdot):
        lines.append(f"{float(zj)!r},{float(vj)!r}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_state_csv(path, grid):
    """Read initial data written by save_state_csv; validates length N+2."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise ValidationError(f"cannot read state file {path}: {exc}") from exc
    if not lines or lines[0].replace(" ", "") != "z,zdot":
        raise ValidationError(f"state file {path} must start with header 'z,zdot'")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 2:
            raise ValidationError(f"state file {path}: malformed row {ln!r}")
        try:
            rows.append((float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise ValidationError(f"state file {path}: non-numeric row {ln!r}") from exc
    if len(rows) != grid.N + 2:
        raise ValidationError(
            f"state file {path} has {len(rows)} rows, expected N + 2 = {grid.N + 2}"
        )
    z = np.array([r[0] for r in rows])
    zdot = np.array([r[1] for r in rows])
    return BeamState(z=z, zdot=zdot)


def make_draw_rng(seed, n, draw):
    """Deterministic per-(mesh, draw) generator for random initial data."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(n), int(draw)]))
