"""Run configurations (YAML), trace CSV files and run manifests.

A config looks like::

    model: motif            # or orgate
    volume_uL: 80
    species:
      - {name: G, initial_nM: 100}
    events:
      - {time_s: 3600, species: I, stock_conc_nM: 10000, volume_uL: 0.8, cycle: 0}
    t_end_s: 25200
    output_dt_s: 10
    normalization: none     # minmax | fixed:<nM>
    params: {k_t: 2.743e6, k_rep: 1.3e6, k_leak: 0}
    per_cycle_efficiency: [1.0, 1.0, 1.0]
    seed: 0
"""
from __future__ import annotations

import csv
import json
import platform
import re
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .kinetics import DEFAULT_ATOL, DEFAULT_RTOL, NM, Trace, parse_normalization
from .motifs import Injection, InjectionSchedule, MotifParams, build_hairpin_motif, build_or_gate

MODELS = {"motif": build_hairpin_motif, "orgate": build_or_gate}
CONFIG_PACKAGE = "hairpin_seesaw.configs"


class ConfigError(ValueError):
    """Invalid or missing configuration input."""


@dataclass(frozen=True)
class RunSpec:
    model: str
    schedule: InjectionSchedule
    params: MotifParams = MotifParams()
    output_dt_s: float = 10.0
    normalization: str = "none"
    seed: int = 0
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL
    source: str = field(default="", compare=False)

    def network(self):
        return MODELS[self.model](self.params)


def shipped_configs() -> dict[str, Path]:
    root = resources.files(CONFIG_PACKAGE)
    return {Path(str(p)).stem: Path(str(p)) for p in root.iterdir()
            if str(p).endswith(".yaml")}


def _squash(name: str) -> str:
    return re.sub(r"[^a-z0-9]", "", name.lower())


def resolve_config(name_or_path: str) -> Path:
    """A path on disk, or the name of a shipped config (``motif3cycles``)."""
    p = Path(name_or_path)
    if p.is_file():
        return p
    for stem, path in shipped_configs().items():
        if _squash(stem) == _squash(p.stem if p.suffix in (".yaml", ".yml") else name_or_path):
            return path
    raise ConfigError(f"config not found: {name_or_path}")


def _require(d, key, where):
    if key not in d:
        raise ConfigError(f"{where}: missing field {key!r}")
    return d[key]


def parse_config(doc: dict, source: str = "") -> RunSpec:
    if not isinstance(doc, dict):
        raise ConfigError(f"{source}: config must be a mapping")
    model = doc.get("model", "motif")
    if model not in MODELS:
        raise ConfigError(f"{source}: unknown model {model!r}")
    try:
        initial = {}
        for sp in doc.get("species", []):
            initial[str(_require(sp, "name", source))] = float(_require(sp, "initial_nM", source))
        events = []
        for ev in doc.get("events", []):
            events.append(Injection(float(_require(ev, "time_s", source)),
                                    str(_require(ev, "species", source)),
                                    float(_require(ev, "stock_conc_nM", source)),
                                    float(_require(ev, "volume_uL", source)),
                                    int(ev.get("cycle", 0))))
        marks = tuple((float(m["time_s"]), str(m["label"])) for m in doc.get("marks", []))
        sched = InjectionSchedule(float(_require(doc, "volume_uL", source)), initial,
                                  tuple(events), tuple(doc.get("per_cycle_efficiency", [])),
                                  float(_require(doc, "t_end_s", source)), marks)
        params = MotifParams(**(doc.get("params") or {}))
        out_dt = float(doc.get("output_dt_s", 10.0))
        if out_dt <= 0:
            raise ConfigError(f"{source}: output_dt_s must be positive")
        norm = str(doc.get("normalization", "none"))
        parse_normalization(norm)
        return RunSpec(model, sched, params, out_dt, norm, int(doc.get("seed", 0)),
                       float(doc.get("rtol", DEFAULT_RTOL)), float(doc.get("atol", DEFAULT_ATOL)),
                       source)
    except ConfigError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{source}: {e}") from None


def load_config(name_or_path: str) -> RunSpec:
    path = resolve_config(name_or_path)
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: {e}") from None
    return parse_config(doc, str(path))


def config_document(rs: RunSpec) -> dict:
    s = rs.schedule
    return {
        "model": rs.model,
        "volume_uL": s.initial_volume_uL,
        "species": [{"name": k, "initial_nM": v} for k, v in s.initial.items()],
        "events": [{"time_s": e.time_s, "species": e.species, "stock_conc_nM": e.stock_nM,
                    "volume_uL": e.volume_uL, "cycle": e.cycle} for e in s.events],
        "per_cycle_efficiency": list(s.per_cycle_efficiency),
        "t_end_s": s.t_end_s,
        "output_dt_s": rs.output_dt_s,
        "normalization": rs.normalization,
        "params": asdict(rs.params),
        "seed": rs.seed,
        "rtol": rs.rtol,
        "atol": rs.atol,
        "marks": [{"time_s": t, "label": lab} for t, lab in s.marks],
    }


def dump_config(rs: RunSpec, path: str | Path) -> None:
    Path(path).write_text(yaml.safe_dump(config_document(rs), sort_keys=False))


def with_overrides(rs: RunSpec, **kw) -> RunSpec:
    """Apply CLI overrides; ``None`` values are ignored."""
    pmap = {"k_t": "k_t", "k_rep": "k_rep", "k_leak": "k_leak"}
    pkw = {pmap[k]: v for k, v in kw.items() if k in pmap and v is not None}
    skw = {k: v for k, v in kw.items() if k not in pmap and v is not None}
    if "normalization" in skw:
        parse_normalization(skw["normalization"])
    return replace(rs, params=replace(rs.params, **pkw), **skw)


# --------------------------------------------------------------------------
# CSV


def write_trace_csv(trace: Trace, path: str | Path) -> None:
    """``time_s,<species...>,fluorescence_norm``; concentrations in nM."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time_s", *trace.species, "fluorescence_norm"])
        conc = trace.conc / NM
        for k, t in enumerate(trace.times):
            w.writerow([f"{t:.12g}", *(f"{v:.12g}" for v in conc[k]),
                        f"{trace.observable[k]:.12g}"])


def read_csv_columns(path: str | Path) -> dict[str, np.ndarray]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"data file not found: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    try:
        data = np.array([[float(x) for x in r] for r in body if r], dtype=float)
    except ValueError as e:
        raise ConfigError(f"{path}: {e}") from None
    if data.size == 0:
        raise ConfigError(f"{path}: no data rows")
    return {h: data[:, i] for i, h in enumerate(header)}


def read_signal_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """``(time_s, signal)`` from a data file or a trace CSV."""
    cols = read_csv_columns(path)
    if "time_s" not in cols:
        raise ConfigError(f"{path}: missing time_s column")
    for name in ("signal", "fluorescence_norm"):
        if name in cols:
            return cols["time_s"], cols[name]
    raise ConfigError(f"{path}: need a 'signal' or 'fluorescence_norm' column")


# --------------------------------------------------------------------------
# manifests


def versions() -> dict[str, str]:
    import numba
    import scipy
    from . import __version__
    return {"python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "numba": numba.__version__,
            "pyyaml": yaml.__version__, "hairpin_seesaw": __version__}


def manifest_path(out: str | Path) -> Path:
    out = Path(out)
    return out.with_name(out.name + ".manifest.json")


def write_manifest(out: str | Path, command: str, argv, inputs: dict, parameters: dict,
                   seed: int | None = None, extra: dict | None = None) -> Path:
    doc = {"command": command, "argv": list(argv), "output": str(out), "inputs": inputs,
           "parameters": parameters, "seed": seed, "versions": versions()}
    if extra:
        doc.update(extra)
    path = manifest_path(out)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")
    return path
