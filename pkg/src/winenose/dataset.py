"""Measurement data model, on-disk format, and the synthetic response generator.

A measurement is 180 s of conductance from six gas sensors sampled at 18.5 Hz
(3330 points). The synthetic generator stands in for the acquisition hardware:
each trace is a baseline plus a saturating-exponential rise while gas is
absorbed and an exponential decay after desorption begins, with optional
gaussian noise and per-bottle amplitude jitter.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, InputError, IntegrityError, ParseError

CLASS_LABELS = ("HQ", "AQ", "LQ", "Ea")
WINE_LABELS = ("HQ", "AQ", "LQ")

DEFAULT_SAMPLE_RATE_HZ = 18.5
DEFAULT_N_POINTS = 3330
DEFAULT_INJECTION_INDEX = 185  # 10 s x 18.5 Hz
ABSORPTION_SECONDS = 80.0
CANONICAL_TRIM_START = 150
CANONICAL_TRIM_END = 3300

# Volatile-acidity ranges (g/l) per quality level, recorded in manifests as
# documentation only.
VA_RANGES_G_PER_L = {"HQ": [0.15, 0.3], "AQ": [0.31, 0.41], "LQ": [0.8, 3.0]}


@dataclass(frozen=True)
class SensorTrace:
    """One sensor's conductance samples (strictly positive values)."""

    sensor_index: int
    samples: np.ndarray
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))

    def __len__(self):
        return len(self.samples)


@dataclass(frozen=True)
class Measurement:
    """Six synchronized sensor traces plus identity and class metadata."""

    id: str
    bottle_id: str
    label: str
    traces: tuple[SensorTrace, ...]
    n_points: int
    injection_index: int

    @property
    def sample_rate_hz(self) -> float:
        return self.traces[0].sample_rate_hz


@dataclass
class Dataset:
    """A collection of measurements plus a manifest describing it."""

    measurements: list[Measurement]
    manifest: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.measurements)

    def class_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for m in self.measurements:
            counts[m.label] = counts.get(m.label, 0) + 1
        return counts

    def bottle_ids(self) -> list[str]:
        seen: dict[str, None] = {}
        for m in self.measurements:
            seen.setdefault(m.bottle_id)
        return list(seen)


@dataclass(frozen=True)
class SensorArchetype:
    """Per-sensor response parameters for one class (ranges are [low, high])."""

    amplitude: tuple[float, float]
    tau_absorb_s: tuple[float, float]
    tau_desorb_s: tuple[float, float]


@dataclass
class GeneratorConfig:
    """Everything the synthetic generator needs to be a pure function of."""

    seed: int
    archetypes: dict[str, tuple[SensorArchetype, ...]]  # label -> 6 sensors
    counts: dict[str, int]
    bottles_per_class: dict[str, int]
    baseline_level: float = 1.0
    drift_slope: float = 0.0  # relative baseline drift per second
    noise_std: float = 0.01  # relative to baseline level
    bottle_jitter: float = 0.03  # std of per-bottle amplitude factor
    n_points: int = DEFAULT_N_POINTS
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ
    injection_index: int = DEFAULT_INJECTION_INDEX
    absorption_seconds: float = ABSORPTION_SECONDS

    def validate(self) -> None:
        if self.noise_std < 0:
            raise ConfigError("noise_std must be >= 0")
        if self.bottle_jitter < 0:
            raise ConfigError("bottle_jitter must be >= 0")
        if self.baseline_level <= 0:
            raise ConfigError("baseline_level must be > 0")
        if self.n_points <= self.injection_index:
            raise ConfigError("injection_index must fall inside the trace")
        for label, count in self.counts.items():
            if label not in CLASS_LABELS:
                raise ConfigError(f"unknown class label {label!r}")
            if label not in self.archetypes:
                raise ConfigError(f"no archetype for class {label!r}")
            bottles = self.bottles_per_class.get(label, 0)
            if count > 0 and bottles < 1:
                raise ConfigError(f"class {label!r} needs at least one bottle")
            if 0 < count < bottles:
                raise ConfigError(
                    f"class {label!r}: counts ({count}) < bottles ({bottles})"
                )
        for label, sensors in self.archetypes.items():
            if len(sensors) != 6:
                raise ConfigError(f"class {label!r}: expected 6 sensor archetypes")
            for arch in sensors:
                for low, high in (arch.amplitude, arch.tau_absorb_s, arch.tau_desorb_s):
                    if low > high:
                        raise ConfigError(f"class {label!r}: range low > high")
                if arch.tau_absorb_s[0] <= 0 or arch.tau_desorb_s[0] <= 0:
                    raise ConfigError(f"class {label!r}: time constants must be > 0")


# Default archetypes chosen so classes differ already in the first seconds
# after injection (distinct amplitudes and absorption time constants).
_DEFAULT_AMPLITUDES = {
    "HQ": (0.8, 0.6, 0.9, 0.5, 0.7, 0.6),
    "AQ": (1.6, 1.2, 1.1, 1.4, 0.9, 1.3),
    "LQ": (2.8, 2.4, 1.9, 2.6, 2.2, 2.0),
    "Ea": (1.0, 2.6, 0.7, 1.8, 2.8, 0.9),
}
_DEFAULT_TAU_ABSORB = {"HQ": 6.0, "AQ": 5.0, "LQ": 4.0, "Ea": 3.0}
_DEFAULT_TAU_DESORB = {"HQ": 25.0, "AQ": 22.0, "LQ": 18.0, "Ea": 15.0}

# Paper-shaped class sizes and bottle rosters.
DEFAULT_COUNTS = {"HQ": 51, "AQ": 43, "LQ": 141, "Ea": 65}
DEFAULT_BOTTLES = {"HQ": 5, "AQ": 4, "LQ": 13, "Ea": 6}


def default_generator_config(
    seed: int = 7,
    counts: dict[str, int] | None = None,
    bottles_per_class: dict[str, int] | None = None,
    noise_std: float = 0.01,
    bottle_jitter: float = 0.03,
) -> GeneratorConfig:
    """Build the documented default config (separable classes by construction)."""
    archetypes = {}
    for label in CLASS_LABELS:
        sensors = []
        for amp in _DEFAULT_AMPLITUDES[label]:
            ta = _DEFAULT_TAU_ABSORB[label]
            td = _DEFAULT_TAU_DESORB[label]
            sensors.append(
                SensorArchetype(
                    amplitude=(amp * 0.95, amp * 1.05),
                    tau_absorb_s=(ta * 0.9, ta * 1.1),
                    tau_desorb_s=(td * 0.9, td * 1.1),
                )
            )
        archetypes[label] = tuple(sensors)
    return GeneratorConfig(
        seed=seed,
        archetypes=archetypes,
        counts=dict(counts if counts is not None else DEFAULT_COUNTS),
        bottles_per_class=dict(
            bottles_per_class if bottles_per_class is not None else DEFAULT_BOTTLES
        ),
        noise_std=noise_std,
        bottle_jitter=bottle_jitter,
    )


def validate_measurement(m: Measurement) -> list[str]:
    """Return a list of invariant violations (empty means valid)."""
    violations = []
    if len(m.traces) != 6:
        violations.append(f"traces: expected 6 sensors, got {len(m.traces)}")
    seen = sorted(t.sensor_index for t in m.traces)
    if seen != list(range(1, len(m.traces) + 1)):
        violations.append(f"traces: sensor indices {seen} != 1..{len(m.traces)}")
    for t in m.traces:
        if len(t.samples) != m.n_points:
            violations.append(
                f"trace {t.sensor_index}: length {len(t.samples)} != {m.n_points}"
            )
        nonpos = np.flatnonzero(~(t.samples > 0))
        if nonpos.size:
            violations.append(
                f"trace {t.sensor_index}: non-positive conductance at k={nonpos[0]}"
            )
        if t.sample_rate_hz <= 0:
            violations.append(f"trace {t.sensor_index}: sample_rate_hz <= 0")
    if not (0 <= m.injection_index < m.n_points):
        violations.append(
            f"injection_index: {m.injection_index} outside [0, {m.n_points})"
        )
    if m.label not in CLASS_LABELS:
        violations.append(f"label: unknown class {m.label!r}")
    return violations


def trim_to_interval(m: Measurement, start: int, end: int) -> Measurement:
    """Slice every trace to [start, end) and rebase the injection index."""
    if not (0 <= start < end <= m.n_points):
        raise InputError(
            f"trim interval [{start}, {end}) invalid for n_points={m.n_points}"
        )
    traces = tuple(
        replace(t, samples=t.samples[start:end]) for t in m.traces
    )
    return replace(
        m,
        traces=traces,
        n_points=end - start,
        injection_index=max(0, m.injection_index - start),
    )


def _archetype_curve(
    t: np.ndarray,
    baseline: float,
    drift: float,
    amplitude: float,
    tau_a: float,
    tau_d: float,
    t_inject: float,
    t_desorb: float,
) -> np.ndarray:
    g = baseline * (1.0 + drift * t)
    rising = (t >= t_inject) & (t < t_desorb)
    g = g + np.where(rising, amplitude * (1.0 - np.exp(-(t - t_inject) / tau_a)), 0.0)
    reached = amplitude * (1.0 - np.exp(-(t_desorb - t_inject) / tau_a))
    falling = t >= t_desorb
    g = g + np.where(falling, reached * np.exp(-(t - t_desorb) / tau_d), 0.0)
    return g


def generate_synthetic(config: GeneratorConfig) -> Dataset:
    """Generate a dataset deterministically from the config (seed included)."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    rate = config.sample_rate_hz
    t = np.arange(config.n_points) / rate
    t_inject = config.injection_index / rate
    t_desorb = t_inject + config.absorption_seconds

    measurements = []
    for label in CLASS_LABELS:
        count = config.counts.get(label, 0)
        if count == 0:
            continue
        n_bottles = config.bottles_per_class[label]
        per_bottle = np.full(n_bottles, count // n_bottles)
        per_bottle[: count % n_bottles] += 1
        idx = 0
        for b in range(n_bottles):
            bottle_id = f"{label}-B{b + 1:02d}"
            bottle_factor = float(rng.normal(1.0, config.bottle_jitter)) if config.bottle_jitter else 1.0
            for _ in range(int(per_bottle[b])):
                idx += 1
                traces = []
                for s, arch in enumerate(config.archetypes[label], start=1):
                    amp = float(rng.uniform(*arch.amplitude)) * bottle_factor
                    tau_a = float(rng.uniform(*arch.tau_absorb_s))
                    tau_d = float(rng.uniform(*arch.tau_desorb_s))
                    g = _archetype_curve(
                        t,
                        config.baseline_level,
                        config.drift_slope,
                        amp,
                        tau_a,
                        tau_d,
                        t_inject,
                        t_desorb,
                    )
                    if config.noise_std:
                        g = g + rng.normal(
                            0.0, config.noise_std * config.baseline_level, g.shape
                        )
                        g = np.maximum(g, 1e-6)  # conductance stays positive
                    traces.append(
                        SensorTrace(sensor_index=s, samples=g, sample_rate_hz=rate)
                    )
                measurements.append(
                    Measurement(
                        id=f"{label}-{idx:03d}",
                        bottle_id=bottle_id,
                        label=label,
                        traces=tuple(traces),
                        n_points=config.n_points,
                        injection_index=config.injection_index,
                    )
                )
    ds = Dataset(measurements=measurements)
    ds.manifest = _build_manifest(ds, provenance={"kind": "synthetic", "seed": config.seed})
    return ds


def _build_manifest(ds: Dataset, provenance: dict) -> dict:
    rate = ds.measurements[0].sample_rate_hz if ds.measurements else DEFAULT_SAMPLE_RATE_HZ
    n_points = ds.measurements[0].n_points if ds.measurements else DEFAULT_N_POINTS
    return {
        "sample_rate_hz": rate,
        "n_points": n_points,
        "provenance": provenance,
        "class_counts": ds.class_counts(),
        "bottles": ds.bottle_ids(),
        "va_g_per_l": VA_RANGES_G_PER_L,
        "measurements": [
            {
                "id": m.id,
                "bottle_id": m.bottle_id,
                "label": m.label,
                "injection_index": m.injection_index,
                "file": f"{m.id}.csv",
            }
            for m in ds.measurements
        ],
    }


def write_dataset(ds: Dataset, root: str | Path) -> None:
    """Write the manifest and one trace CSV per measurement."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    manifest = ds.manifest or _build_manifest(ds, provenance={"kind": "real"})
    with open(root / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    for m in ds.measurements:
        rate = m.sample_rate_hz
        with open(root / f"{m.id}.csv", "w", newline="") as fh:
            fh.write("t,s1,s2,s3,s4,s5,s6\n")
            cols = [t.samples for t in sorted(m.traces, key=lambda t: t.sensor_index)]
            for k in range(m.n_points):
                row = [repr(k / rate)] + [repr(float(c[k])) for c in cols]
                fh.write(",".join(row) + "\n")


def load_dataset(root: str | Path) -> Dataset:
    """Load and validate a dataset directory written by :func:`write_dataset`."""
    root = Path(root)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise ParseError(f"no manifest.json in {root}")
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    rate = float(manifest["sample_rate_hz"])
    n_points = int(manifest["n_points"])

    bottle_labels: dict[str, str] = {}
    measurements = []
    for rec in manifest["measurements"]:
        path = root / rec["file"]
        if not path.exists():
            raise ParseError(f"missing trace file {path}")
        samples = _read_trace_csv(path)
        if samples.shape[0] != n_points:
            raise IntegrityError(
                f"{path.name}: {samples.shape[0]} rows, manifest says {n_points}"
            )
        traces = tuple(
            SensorTrace(sensor_index=s + 1, samples=samples[:, s], sample_rate_hz=rate)
            for s in range(6)
        )
        m = Measurement(
            id=rec["id"],
            bottle_id=rec["bottle_id"],
            label=rec["label"],
            traces=traces,
            n_points=n_points,
            injection_index=int(rec["injection_index"]),
        )
        prior = bottle_labels.setdefault(m.bottle_id, m.label)
        if prior != m.label:
            raise IntegrityError(
                f"bottle {m.bottle_id} labeled both {prior} and {m.label}"
            )
        violations = validate_measurement(m)
        if violations:
            raise IntegrityError(f"{m.id}: " + "; ".join(violations))
        measurements.append(m)

    declared = manifest.get("class_counts")
    if declared is not None:
        actual: dict[str, int] = {}
        for m in measurements:
            actual[m.label] = actual.get(m.label, 0) + 1
        if {k: v for k, v in declared.items() if v} != actual:
            raise IntegrityError(
                f"manifest class counts {declared} != actual {actual}"
            )
    return Dataset(measurements=measurements, manifest=manifest)


def _read_trace_csv(path: Path) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["t", "s1", "s2", "s3", "s4", "s5", "s6"]:
            raise ParseError(f"{path.name}: expected 1 time + 6 sensor columns")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 7:
                raise ParseError(
                    f"{path.name}:{lineno}: expected 1 time + 6 sensor columns"
                )
            try:
                rows.append([float(v) for v in row[1:]])
            except ValueError as exc:
                raise ParseError(f"{path.name}:{lineno}: {exc}") from exc
    if not rows:
        raise ParseError(f"{path.name}: no samples")
    return np.asarray(rows, dtype=float)
