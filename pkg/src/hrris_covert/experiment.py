"""Monte-Carlo sweeps over surface size N, active count K and trial index.

Config documents are YAML with the sections ``system``, ``geometry``, ``arrays``,
``fading``, ``sweep`` and ``optimizer``.  Powers are given in dBm.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import yaml

from .channel import (ArraySpec, ChannelError, FadingSpec, SceneGeometry, build_channel_set,
                      watts_to_dbm)
from .optimizer import AoSettings, optimize
from .params import ParamsError, SystemParams

log = logging.getLogger(__name__)

CSV_HEADER = ("n", "k", "trial", "seed", "rate_bits", "pa_star_dbm", "d01_nats",
              "iterations", "converged")

SECTIONS = {
    "system": {"epsilon", "l", "pa_max_dbm", "pr_max_dbm", "noise_dbm",
               "active_count", "active_placement"},
    "geometry": {"alice_pos", "ris_pos", "bob_pos", "willie_pos",
                 "pathloss_exponents", "chi0_db"},
    "arrays": {"n_alice", "n_bob", "n_willie", "ris_rows", "ris_cols", "element_spacing"},
    "fading": {"rician_k_db", "seed"},
    "sweep": {"n_values", "k_values", "trials", "base_seed", "output", "workers"},
    "optimizer": {f.name for f in dataclasses.fields(AoSettings)},
}
REQUIRED = {
    "system": ("epsilon", "l", "pa_max_dbm", "pr_max_dbm", "noise_dbm"),
    "sweep": ("n_values", "k_values"),
}


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line
        self.field = field


@dataclass(frozen=True)
class SweepSpec:
    n_values: tuple[int, ...]
    k_values: tuple[int, ...]
    trials: int = 50
    base_seed: int = 0
    output: str | None = None
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "n_values", tuple(int(v) for v in self.n_values))
        object.__setattr__(self, "k_values", tuple(int(v) for v in self.k_values))
        if not self.n_values or not self.k_values:
            raise ParamsError("sweep", "n_values and k_values must be non-empty")
        if min(self.n_values) < 1:
            raise ParamsError("sweep.n_values", "surface sizes must be >= 1")
        if min(self.k_values) < 0:
            raise ParamsError("sweep.k_values", "active_count must be >= 0")
        if max(self.k_values) > min(self.n_values):
            raise ParamsError("sweep.k_values",
                              f"active_count K={max(self.k_values)} exceeds N={min(self.n_values)}")
        if self.trials < 1:
            raise ParamsError("sweep.trials", "must be >= 1")
        if not 0 <= self.base_seed < 2**64:
            raise ParamsError("sweep.base_seed", "must be a 64-bit unsigned integer")
        if self.workers < 1:
            raise ParamsError("sweep.workers", "must be >= 1")


@dataclass(frozen=True)
class SweepRow:
    n: int
    k: int
    trial: int
    seed: int
    rate_bits: float
    pa_star_dbm: float
    d01_nats: float
    iterations: int
    converged: bool


@dataclass
class SweepResult:
    rows: list[SweepRow] = field(default_factory=list)
    failures: list[tuple[int, int, int, str]] = field(default_factory=list)

    def mean_rate(self, n: int, k: int) -> float:
        vals = [r.rate_bits for r in self.rows if r.n == n and r.k == k]
        return float(np.mean(vals)) if vals else float("nan")


# -- config -------------------------------------------------------------------

def _key_lines(text: str) -> dict:
    """Line number of every `section.key` in the document."""
    lines = {}
    root = yaml.compose(text)
    if not isinstance(root, yaml.MappingNode):
        return lines
    for k_node, v_node in root.value:
        lines[k_node.value] = k_node.start_mark.line + 1
        if isinstance(v_node, yaml.MappingNode):
            for kk, _ in v_node.value:
                lines[f"{k_node.value}.{kk.value}"] = kk.start_mark.line + 1
    return lines


def parse_config(text: str) -> tuple[SystemParams, SweepSpec, AoSettings]:
    try:
        doc = yaml.safe_load(text)
        lines = _key_lines(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"malformed config: {getattr(exc, 'problem', exc)}",
                          mark.line + 1 if mark else None) from exc
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping of sections", 1)

    missing = [f"{s}.{k}" for s, keys in REQUIRED.items()
               for k in keys if k not in (doc.get(s) or {})]
    if missing:
        raise ConfigError("missing required keys: " + ", ".join(missing))
    unknown = [s for s in doc if s not in SECTIONS]
    for s, body in doc.items():
        if s in SECTIONS:
            if not isinstance(body, dict):
                raise ConfigError(f"section {s!r} must be a mapping", lines.get(s), s)
            unknown += [f"{s}.{k}" for k in body if k not in SECTIONS[s]]
    if unknown:
        raise ConfigError("unknown keys: " + ", ".join(unknown), lines.get(unknown[0]))

    def section(name):
        return dict(doc.get(name) or {})

    current = "config"
    try:
        current = "geometry"
        geo = section("geometry")
        for key in ("alice_pos", "ris_pos", "bob_pos", "willie_pos"):
            if key in geo:
                geo[key] = tuple(geo[key])
        geometry = SceneGeometry(**geo)
        current = "arrays"
        arrays = ArraySpec(**section("arrays"))
        current = "fading"
        fading = FadingSpec(**section("fading"))
        current = "system"
        params = SystemParams(geometry=geometry, arrays=arrays, fading=fading,
                              **section("system"))
        current = "sweep"
        spec = SweepSpec(**section("sweep"))
        current = "optimizer"
        settings = AoSettings(**section("optimizer"))
    except ParamsError as exc:
        name = exc.field if "." in exc.field else f"{current}.{exc.field}"
        raise ConfigError(str(exc), lines.get(name), exc.field) from exc
    except (ChannelError, ValueError, TypeError) as exc:
        raise ConfigError(f"{current}: {exc}", lines.get(current), current) from exc
    return params, spec, settings


def load_config(path) -> tuple[SystemParams, SweepSpec, AoSettings]:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


# -- sweep --------------------------------------------------------------------

def _derive(*entropy: int) -> int:
    return int(np.random.SeedSequence(list(entropy)).generate_state(1, np.uint64)[0])


def channel_seed(base_seed: int, n: int, trial: int) -> int:
    """Fading seed shared by every K at the same (N, trial)."""
    return _derive(base_seed, 0, n, trial)


def init_seed(base_seed: int, n: int, k: int, trial: int) -> int:
    return _derive(base_seed, 1, n, k, trial)


def params_for(params: SystemParams, n: int, k: int, seed: int) -> SystemParams:
    a = params.arrays
    arrays = ArraySpec.for_elements(n, n_alice=a.n_alice, n_bob=a.n_bob,
                                    n_willie=a.n_willie, element_spacing=a.element_spacing)
    fading = FadingSpec(rician_k_db=params.fading.rician_k_db, seed=seed)
    return dataclasses.replace(params, arrays=arrays, fading=fading, active_count=k)


def run_point(params: SystemParams, settings: AoSettings, base_seed: int,
              n: int, k: int, trial: int) -> SweepRow:
    seed = channel_seed(base_seed, n, trial)
    p = params_for(params, n, k, seed)
    channels = build_channel_set(p.geometry, p.arrays, p.fading, p.noise_dbm)
    s = dataclasses.replace(settings, init_seed=init_seed(base_seed, n, k, trial))
    res = optimize(channels, p, s)
    return SweepRow(n, k, trial, seed, res.rate_bits, float(watts_to_dbm(res.pa_star)),
                    res.d01_nats, res.iterations, res.converged)


def _safe_point(args):
    params, settings, base_seed, n, k, trial = args
    try:
        return run_point(params, settings, base_seed, n, k, trial)
    except Exception as exc:  # recorded per row; the sweep carries on
        return (n, k, trial, f"{type(exc).__name__}: {exc}")


def run_sweep(params: SystemParams, spec: SweepSpec, settings: AoSettings) -> SweepResult:
    jobs = [(params, settings, spec.base_seed, n, k, t)
            for n in sorted(set(spec.n_values))
            for k in sorted(set(spec.k_values))
            for t in range(spec.trials)]
    if spec.workers > 1:
        with ProcessPoolExecutor(spec.workers) as pool:
            outcomes = list(pool.map(_safe_point, jobs, chunksize=4))
    else:
        outcomes = [_safe_point(j) for j in jobs]
    result = SweepResult()
    for out in outcomes:
        if isinstance(out, SweepRow):
            result.rows.append(out)
        else:
            log.warning("N=%d K=%d trial=%d failed: %s", *out)
            result.failures.append(out)
    result.rows.sort(key=lambda r: (r.n, r.k, r.trial))
    return result


# -- CSV ----------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".12g")


def format_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in sorted(result.rows, key=lambda r: (r.n, r.k, r.trial)):
        writer.writerow([_fmt(getattr(row, name)) for name in CSV_HEADER])
    return buf.getvalue()


def emit_csv(result: SweepResult, path) -> None:
    text = format_csv(result)
    directory = os.path.dirname(os.fspath(path))
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def read_csv(path) -> list[SweepRow]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        return [SweepRow(int(r["n"]), int(r["k"]), int(r["trial"]), int(r["seed"]),
                         float(r["rate_bits"]), float(r["pa_star_dbm"]),
                         float(r["d01_nats"]), int(r["iterations"]),
                         r["converged"] == "true")
                for r in reader]
