"""Parametric fault-snapshot fixtures (RMS voltages and currents).

The response model is a deliberately simple closed-form surrogate; its
coefficient table is reproduced in ``docs/response_model.md`` and versioned
by ``RESPONSE_MODEL_VERSION``. Every draw comes from one :class:`SeededRng`
in a fixed order (class shuffle, R_f, irradiance, load, noise), so a seed
fixes the dataset.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .data import Dataset, FeatureSchema
from .numerics import SeededRng

RESPONSE_MODEL_VERSION = 1

LINES = ("12", "23", "32")
PHASES = ("a", "b", "c")
FAULT_TYPES = ("LGa", "LGb", "LGc", "LLGab", "LLGbc", "LLGca", "LLab", "LLbc", "LLca", "LLL")
SWITCH_FAULTS = ("S1", "S2", "S3", "S4", "S5", "S6",
                 "S1S4", "S1S6", "S3S6", "S3S2", "S5S2", "S5S4")

# --- external response table -------------------------------------------------
V_BASE = 7967.0            # V, 13.8 kV line-to-line / sqrt(3)
I_BASE = 200.0             # A
Z_FAULT = 5.0              # ohm; severity q = Z / (R_f + Z)
LINE_DROP = {"12": 0.5, "23": 1.0, "32": 0.8}
LOAD_SHARE = {"12": 0.9, "23": 0.6, "32": 0.4}
PV_SHARE = {"12": 0.3, "23": 0.2, "32": 0.8}
PHASE_V = (1.0, 0.995, 1.005)
PHASE_I = (1.0, 0.97, 1.03)
SAG_GROUNDED = 0.95        # faulted-phase V factor 1 - 0.95 q (LG, LLG, LLL)
SAG_UNGROUNDED = 0.45      # faulted-phase V factor 1 - 0.45 q (LL)
SWELL_HEALTHY = 0.10       # healthy phase on a grounded-fault line: 1 + 0.10 q
I_SC = 1.8                 # inverter-limited fault current, per unit of I_BASE
I_TYPE = {"LG": 1.0, "LLG": 0.9, "LL": 0.8, "LLL": 0.85}
HEALTHY_I_DROP = 0.10      # healthy phase on faulted line: I factor 1 - 0.10 q
COUPLING = {               # (faulted line, observed line) -> share of the sag seen
    ("12", "23"): 0.45, ("12", "32"): 0.35,
    ("23", "12"): 0.40, ("23", "32"): 0.30,
    ("32", "12"): 0.35, ("32", "23"): 0.30,
}

# --- internal response table ---------------------------------------------------
V_INV = 277.0              # V, inverter terminal phase voltage
I_INV = 60.0               # A
LEG = {"S1": (0, "upper"), "S4": (0, "lower"), "S3": (1, "upper"),
       "S6": (1, "lower"), "S5": (2, "upper"), "S2": (2, "lower")}
OPEN_OWN_I = 0.58          # open leg keeps one half-cycle
OPEN_NEXT_I = {"upper": 1.18, "lower": 1.32}
OPEN_PREV_I = {"upper": 1.32, "lower": 1.18}
OPEN_OWN_V = {"upper": 0.90, "lower": 1.07}
THD_HEALTHY = 0.02
THD_OPEN_OWN = 0.48
THD_OPEN_OTHER = 0.06

NOISE_FLOOR = 0.05         # lower clip of the multiplicative noise factor


@dataclass(frozen=True)
class ImbalanceSpec:
    minority_classes: tuple
    ratio: float


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str = "external"
    samples_total: int | None = None
    imbalance: ImbalanceSpec | None = None
    fault_resistance_range: tuple = (0.1, 5.0)
    irradiance_range: tuple = (0.2, 1.0)
    load_range: tuple = (0.5, 1.0)
    noise_std: float = 0.02
    internal_features: int = 6
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("external", "internal"):
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        if self.samples_total is None:
            object.__setattr__(self, "samples_total", 6000 if self.kind == "external" else 2000)
        if self.samples_total < 1:
            raise ValueError("samples_total must be >= 1")
        for name in ("fault_resistance_range", "irradiance_range", "load_range"):
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi)) or hi < lo:
                raise ValueError(f"{name} must be a non-empty interval")
            object.__setattr__(self, name, (float(lo), float(hi)))
        if self.fault_resistance_range[0] < 0:
            raise ValueError("fault resistance must be non-negative")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        if self.internal_features not in (3, 6, 9):
            raise ValueError("internal_features must be 3, 6 or 9")
        if isinstance(self.imbalance, dict):
            object.__setattr__(self, "imbalance", ImbalanceSpec(
                tuple(self.imbalance["minority_classes"]), float(self.imbalance["ratio"])))

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("fault_resistance_range", "irradiance_range", "load_range"):
            d[k] = list(d[k])
        if self.imbalance is not None:
            d["imbalance"] = {"minority_classes": list(self.imbalance.minority_classes),
                              "ratio": self.imbalance.ratio}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ValueError(f"unknown scenario key(s): {', '.join(unknown)}")
        return cls(**d)


def external_classes() -> tuple:
    return tuple(f"L{line}_{ft}" for line in LINES for ft in FAULT_TYPES)


def internal_classes() -> tuple:
    return SWITCH_FAULTS


def external_schema() -> FeatureSchema:
    names = [f"{q}{line}{ph}" for q in "VI" for line in LINES for ph in PHASES]
    return FeatureSchema(tuple(names), "label")


def internal_schema(n_features: int = 6) -> FeatureSchema:
    names = [f"I{ph}" for ph in PHASES] + [f"V{ph}" for ph in PHASES] + [f"THD{ph}" for ph in PHASES]
    return FeatureSchema(tuple(names[:n_features]), "label")


def _fault_parts(fault_type):
    family = fault_type.rstrip("abc") if fault_type != "LLL" else "LLL"
    phases = "abc" if family == "LLL" else fault_type[len(family):]
    return family, [PHASES.index(p) for p in phases]


def external_response(class_name, r_f, irradiance, load):
    """Noiseless 18-feature row for one operating point (V block then I block)."""
    line, fault_type = class_name[1:].split("_")
    family, faulted = _fault_parts(fault_type)
    q = Z_FAULT / (r_f + Z_FAULT)
    sag = 1.0 - (SAG_UNGROUNDED if family == "LL" else SAG_GROUNDED) * q
    swell = 1.0 if family == "LL" else 1.0 + SWELL_HEALTHY * q
    i_fault = I_SC * I_BASE * q * (0.6 + 0.4 * irradiance) * I_TYPE[family]
    V = np.empty((3, 3))
    I = np.empty((3, 3))
    for li, ln in enumerate(LINES):
        v_pre = V_BASE * (1.0 - 0.04 * load * LINE_DROP[ln] + 0.015 * irradiance)
        i_pre = I_BASE * (LOAD_SHARE[ln] * load + PV_SHARE[ln] * irradiance)
        for p in range(3):
            v, i = v_pre * PHASE_V[p], i_pre * PHASE_I[p]
            if ln == line:
                if p in faulted:
                    v, i = v * sag, i + i_fault
                else:
                    v, i = v * swell, i * (1.0 - HEALTHY_I_DROP * q)
            elif p in faulted:
                c = COUPLING[(line, ln)]
                v, i = v * (1.0 - c * (1.0 - sag)), i * (1.0 + 0.5 * c * q)
            V[li, p], I[li, p] = v, i
    return np.concatenate([V.ravel(), I.ravel()])


def internal_response(class_name, irradiance, load, n_features=6):
    """Noiseless internal-fault row: phase currents, voltages, THD."""
    i_f, v_f = np.ones(3), np.ones(3)
    thd = np.full(3, THD_HEALTHY)
    switches = [class_name[k:k + 2] for k in range(0, len(class_name), 2)]
    for sw in switches:
        leg, side = LEG[sw]
        i_f[leg] *= OPEN_OWN_I
        i_f[(leg + 1) % 3] *= OPEN_NEXT_I[side]
        i_f[(leg + 2) % 3] *= OPEN_PREV_I[side]
        v_f[leg] *= OPEN_OWN_V[side]
        for p in range(3):
            add = THD_OPEN_OWN if p == leg else THD_OPEN_OTHER
            thd[p] = math.hypot(thd[p], add)
    i0 = I_INV * (0.35 + 0.65 * load) * (1.15 - 0.15 * irradiance)
    v0 = V_INV * (1.0 - 0.03 * load + 0.01 * irradiance)
    row = np.concatenate([i0 * np.array(PHASE_I) * i_f, v0 * np.array(PHASE_V) * v_f, thd])
    return row[:n_features]


def _draw(config: ScenarioConfig, n_classes: int):
    rng = SeededRng(config.seed)
    n = config.samples_total
    labels = (np.arange(n) % n_classes)[rng.permutation(n)]
    r_f = rng.uniform(n, *config.fault_resistance_range)
    irr = rng.uniform(n, *config.irradiance_range)
    load = rng.uniform(n, *config.load_range)
    return rng, labels, r_f, irr, load


def _noisy(rows, rng, noise_std):
    if noise_std == 0:
        return rows
    factor = 1.0 + noise_std * rng.normal(rows.shape)
    return rows * np.maximum(factor, NOISE_FLOOR)


def _finish(config, X, labels, schema, names):
    ds = Dataset(X, labels, schema, names)
    if config.imbalance is not None:
        ds = apply_imbalance(ds, config.imbalance.minority_classes, config.imbalance.ratio,
                             config.seed)
    return ds


def generate_external(config: ScenarioConfig) -> Dataset:
    """30 line-fault classes x 18 RMS features."""
    if config.kind != "external":
        raise ValueError("generate_external needs kind='external'")
    names = external_classes()
    rng, labels, r_f, irr, load = _draw(config, len(names))
    X = np.array([external_response(names[c], r, s, l)
                  for c, r, s, l in zip(labels, r_f, irr, load)])
    return _finish(config, _noisy(X, rng, config.noise_std), labels, external_schema(), names)


def generate_internal(config: ScenarioConfig) -> Dataset:
    """12 open-switch classes; 6 features by default."""
    if config.kind != "internal":
        raise ValueError("generate_internal needs kind='internal'")
    names = internal_classes()
    rng, labels, _, irr, load = _draw(config, len(names))
    X = np.array([internal_response(names[c], s, l, config.internal_features)
                  for c, s, l in zip(labels, irr, load)])
    schema = internal_schema(config.internal_features)
    return _finish(config, _noisy(X, rng, config.noise_std), labels, schema, names)


def generate(config: ScenarioConfig) -> Dataset:
    return generate_external(config) if config.kind == "external" else generate_internal(config)


def apply_imbalance(ds: Dataset, minority, ratio: float, seed: int) -> Dataset:
    """Keep ``ceil(ratio * N_c)`` rows (without replacement) of each minority class."""
    if not 0.0 < ratio <= 1.0:
        raise ValueError("ratio must lie in (0, 1]")
    unknown = [m for m in minority if m not in ds.class_names]
    if unknown:
        raise ValueError(f"unknown class name(s): {unknown}")
    rng = SeededRng(seed).spawn("imbalance")
    keep = np.ones(ds.n_samples, dtype=bool)
    for name in minority:
        idx = np.flatnonzero(ds.y == ds.class_names.index(name))
        k = math.ceil(ratio * idx.size - 1e-9)
        drop = idx[rng.permutation(idx.size)][k:]
        keep[drop] = False
    return ds.subset(np.flatnonzero(keep))
