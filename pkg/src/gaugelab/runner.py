"""Batch runner: run configs, JSON results and CSV convergence tables.

Config files use the stdlib ini grammar, one ``[run]`` section whose keys are
the long flag names (dashes or underscores)::

    [run]
    command = integrate
    example = growing_interval
    method = henstock
    tol = 1e-6
    seed = 42
    out = results/

Flags given on the command line win over the file.
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import math
import time
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from . import catalog as cat
from . import convex_sets as cs
from . import integrators as itg
from . import selections as sel

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_NONCONVERGED = 2
EXIT_INVALID = 3

COMMANDS = ("catalog", "integrate", "compare", "decompose", "varmeasure", "study")
METHODS = ("henstock", "henstock-step", "mcshane", "birkhoff", "pettis")
CSV_HEADER = ("level", "interval_count", "dH_to_prev", "support_defect_max", "variational_sum",
              "runtime_ms")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str = "integrate"
    example: str | None = None
    method: str = "henstock"
    tol: float | None = None
    max_levels: int | None = None
    directions: int = 64
    seed: int = 0
    selection: str = "steiner"
    mode: str = "h-to-ms"
    set: str = "0:1"
    samples: int = 10
    out: str | None = None

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.command == "catalog":
            return self
        if self.example is None:
            raise ConfigError("--example is required")
        if self.example not in cat.names():
            raise ConfigError(f"unknown example {self.example!r}; try `gaugelab catalog`")
        if self.command in ("integrate", "study") and self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}")
        if self.tol is not None and not (self.tol > 0 and math.isfinite(self.tol)):
            raise ConfigError("tol must be > 0")
        if self.max_levels is not None and self.max_levels < 0:
            raise ConfigError("max_levels must be >= 0")
        if self.command == "study" and self.max_levels is not None and self.max_levels < 2:
            raise ConfigError("a study needs at least 2 levels")
        dim = cat.get(self.example).dim
        if self.directions < (2 if dim == 1 else 32):
            raise ConfigError(f"directions must be >= {2 if dim == 1 else 32} in dimension {dim}")
        if self.samples < 1:
            raise ConfigError("samples must be >= 1")
        if self.command == "decompose" and self.mode not in sel.MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.command == "varmeasure":
            parse_set(self.set)
        return self

    @property
    def entry(self) -> cat.CatalogEntry:
        return cat.get(self.example)

    @property
    def effective_tol(self) -> float:
        return self.tol if self.tol is not None else self.entry.tol

    @property
    def effective_max_levels(self):
        return self.max_levels if self.max_levels is not None else self.entry.max_levels


_CASTS = {f.name: f.type for f in fields(RunConfig)}


def _cast(key: str, raw: str):
    kind = _CASTS[key]
    if "int" in kind:
        return int(raw)
    if "float" in kind:
        return float(raw)
    return raw


def load_config(path) -> dict:
    """Read the ``[run]`` section of an ini file into RunConfig keyword arguments."""
    cp = configparser.ConfigParser()
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not cp.has_section("run"):
        raise ConfigError(f"{path}: missing [run] section")
    out = {}
    for k, v in cp.items("run"):
        key = k.replace("-", "_")
        if key not in _CASTS:
            raise ConfigError(f"{path}: unknown key {k!r}")
        try:
            out[key] = _cast(key, v.strip())
        except ValueError as exc:
            raise ConfigError(f"{path}: bad value for {k}: {v!r}") from exc
    return out


def parse_set(text: str) -> list:
    """``"0:0.25,0.5:1"`` -> [(0, 0.25), (0.5, 1)]."""
    comps = []
    try:
        for part in text.split(","):
            a, b = part.split(":")
            comps.append((float(a), float(b)))
        itg._components(comps)
    except (ValueError, itg.IntegrationError) as exc:
        raise ConfigError(f"bad --set {text!r}: {exc}") from exc
    return comps


# ---------------------------------------------------------------------------
# serialization


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def polytope_json(P: cs.Polytope) -> dict:
    return {"vertices": P.tolist()}


def levels_json(levels: list) -> list:
    return [{"level": lv.level, "gauge": lv.gauge, "interval_count": lv.interval_count,
             "dH_to_prev": _num(lv.dH_to_prev), "tag_spread": _num(lv.tag_spread)}
            for lv in levels]


def result_json(example: str, res: itg.IntegralResult, dim: int, seed: int, runtime_ms: float,
                extra: dict | None = None) -> dict:
    doc = {
        "example": example,
        "method": res.method,
        "dim": dim,
        "value": polytope_json(res.value),
        "error_estimate": _num(res.error_estimate),
        "converged": bool(res.converged),
        "levels": levels_json(res.levels),
        "support_defect_max": _num(res.support_defect),
        "tag_spread": _num(res.tag_spread),
        "seed": seed,
        "tol": res.tol,
        "diverging_directions": res.diverging_directions,
        "notes": res.notes,
    }
    if res.permutation_defect is not None:
        doc["permutation_defect"] = _num(res.permutation_defect)
    doc.update(extra or {})
    doc["metadata"] = {"runtime_ms": round(runtime_ms, 3), "version": __version__}
    return doc


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def strip_metadata(text: str) -> dict:
    doc = json.loads(text)
    doc.pop("metadata", None)
    return doc


def _cell(x) -> str:
    if x is None:
        return ""
    return repr(float(x))


def convergence_csv(rows: list, converged: bool | None = None) -> str:
    """CSV convergence table; rows are dicts keyed by CSV_HEADER.

    A ``# converged=...`` footer line follows the rows when ``converged`` is given.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([r["level"], r["interval_count"]] + [_cell(r.get(k)) for k in CSV_HEADER[2:]])
    if converged is not None:
        buf.write(f"# converged={'true' if converged else 'false'}\n")
    return buf.getvalue()


def study_rows(G: itg.Multifunction, res: itg.IntegralResult, oracle, tol: float,
               with_variational: bool) -> list:
    """Per-level rows; ``oracle`` is (U, m) or None when the scalar oracle diverged.

    Variational sums need the primitive, so they are filled in only for
    converged Henstock runs.
    """
    var = {}
    if with_variational and res.converged:
        var = {k: v for k, _, v in itg.variational_sum_trail(G, [lv.level for lv in res.levels],
                                                             tol)}
    rows = []
    for lv, ms in zip(res.levels, res.runtimes_ms or [None] * len(res.levels)):
        r = {"level": lv.level, "interval_count": lv.interval_count,
             "dH_to_prev": lv.dH_to_prev, "runtime_ms": None if ms is None else round(ms, 3),
             "variational_sum": var.get(lv.level)}
        if oracle is not None and lv.value is not None:
            U, m = oracle
            r["support_defect_max"] = float(np.max(np.abs(cs.support_many(lv.value, U) - m)))
        rows.append(r)
    return rows


# ---------------------------------------------------------------------------
# commands


@dataclass
class Outcome:
    code: int
    doc: dict
    csv: str | None = None
    message: str = ""


def _oracle(G, U, tol, seed):
    m, ok, _ = itg.support_oracle(G, U, tol, seed)
    return (U, m) if np.all(ok) else None


def run_integrate(cfg: RunConfig) -> Outcome:
    e = cfg.entry
    G = e.multifunction
    tol = cfg.effective_tol
    t0 = time.perf_counter()
    res = itg.integrate(G, cfg.method, tol, cfg.effective_max_levels, cfg.seed)
    U = itg.default_grid(G.dim, cfg.directions)
    oracle = _oracle(G, U, tol, cfg.seed)
    if oracle is not None:
        res.support_defect = float(np.max(np.abs(cs.support_many(res.value, U) - oracle[1])))
    rows = study_rows(G, res, oracle, tol, cfg.method == "henstock")
    ms = (time.perf_counter() - t0) * 1e3
    doc = result_json(e.name, res, G.dim, cfg.seed, ms,
                      {"oracle_converged": oracle is not None})
    code = EXIT_OK if res.converged else EXIT_NONCONVERGED
    return Outcome(code, doc, convergence_csv(rows, res.converged),
                   f"{e.name}/{cfg.method}: converged={res.converged}")


def run_study(cfg: RunConfig) -> Outcome:
    """Fixed number of refinement levels (no early stop), one CSV row per level."""
    e = cfg.entry
    G = e.multifunction
    tol = cfg.effective_tol
    levels = cfg.max_levels if cfg.max_levels is not None else 8
    t0 = time.perf_counter()
    if cfg.method == "pettis":
        raise ConfigError("study runs gauge methods only")
    res = itg.integrate(G, cfg.method, tol, levels - 1, cfg.seed, early_stop=False)
    conv = res.converged
    U = itg.default_grid(G.dim, cfg.directions)
    oracle = _oracle(G, U, tol, cfg.seed)
    rows = study_rows(G, res, oracle, tol, cfg.method == "henstock")
    ms = (time.perf_counter() - t0) * 1e3
    doc = result_json(e.name, res, G.dim, cfg.seed, ms, {"oracle_converged": oracle is not None})
    return Outcome(EXIT_OK if conv else EXIT_NONCONVERGED, doc, convergence_csv(rows, conv),
                   f"{e.name}/{cfg.method}: {len(rows)} levels, converged={conv}")


def lattice_check(flags: dict, pettis_gap: float, tol: float) -> list:
    """Violations of: McShane => Henstock, Birkhoff => McShane, Henstock + Pettis agree.

    ``pettis_gap`` is the largest support-value gap between the Henstock and
    Pettis values on the Pettis direction grid (the only directions where the
    Pettis value is pinned down).
    """
    bad = []
    if flags.get("mcshane") and not flags.get("henstock"):
        bad.append("mcshane converged but henstock did not")
    if flags.get("birkhoff") and not flags.get("mcshane"):
        bad.append("birkhoff converged but mcshane did not")
    if flags.get("henstock") and flags.get("pettis"):
        if pettis_gap > 2 * tol:
            bad.append(f"henstock and pettis support values differ by {pettis_gap:.3g}")
    return bad


def compare(example: str, tol: float | None = None, seed: int = 0,
            max_levels: int | None = None) -> dict:
    """All four methods on one entry, pairwise Hausdorff distances and the lattice check."""
    e = cat.get(example)
    tol = e.tol if tol is None else tol
    max_levels = e.max_levels if max_levels is None else max_levels
    methods = ("henstock", "mcshane", "birkhoff", "pettis")
    res = {m: itg.integrate(e.multifunction, m, tol, max_levels, seed) for m in methods}
    dists = {(a, b): cs.hausdorff_distance(res[a].value, res[b].value)
             for a in methods for b in methods}
    flags = {m: bool(r.converged) for m, r in res.items()}
    errs = [r.error_estimate or 0.0 for r in res.values()]
    U = itg.default_grid(e.dim)
    gap = float(np.max(np.abs(cs.support_many(res["henstock"].value, U)
                              - cs.support_many(res["pettis"].value, U))))
    violations = lattice_check(flags, gap, tol + max(errs))
    return {
        "example": example,
        "tol": tol,
        "seed": seed,
        "methods": list(methods),
        "converged": flags,
        "values": {m: polytope_json(r.value) for m, r in res.items()},
        "dH": [[_num(dists[(a, b)]) for b in methods] for a in methods],
        "pettis_support_gap": _num(gap),
        "lattice_ok": not violations,
        "lattice_violations": violations,
        "vacuous": not any(flags.values()) or flags == {"henstock": True, "mcshane": False,
                                                        "birkhoff": False, "pettis": False},
    }


def run_compare(cfg: RunConfig) -> Outcome:
    t0 = time.perf_counter()
    doc = compare(cfg.example, cfg.tol, cfg.seed, cfg.max_levels)
    doc["metadata"] = {"runtime_ms": round((time.perf_counter() - t0) * 1e3, 3),
                       "version": __version__}
    if not doc["lattice_ok"]:
        code = EXIT_FAILED
    else:
        code = EXIT_OK if all(doc["converged"].values()) else EXIT_NONCONVERGED
    return Outcome(code, doc, None, f"{cfg.example}: converged={doc['converged']} "
                                    f"lattice_ok={doc['lattice_ok']}")


def run_decompose(cfg: RunConfig) -> Outcome:
    e = cfg.entry
    tol = cfg.tol if cfg.tol is not None else 1e-5
    t0 = time.perf_counter()
    try:
        rep = sel.decomposition_verify(e.multifunction, cfg.selection, cfg.mode, tol, cfg.seed,
                                       cfg.max_levels)
    except sel.SelectionError as exc:
        raise ConfigError(str(exc)) from exc
    doc = {
        "example": e.name,
        "selection": rep.selection,
        "mode": rep.mode,
        "tol": tol,
        "seed": cfg.seed,
        "closure_defect": _num(rep.closure_defect),
        "support_defect": _num(rep.support_defect),
        "contains_zero_profile": rep.zero_fraction,
        "converged": rep.converged,
        "passed": rep.passed,
        "integral_gamma": polytope_json(rep.integral_gamma.value),
        "integral_f": polytope_json(rep.integral_f.value),
        "integral_g": polytope_json(rep.integral_g.value),
    }
    if rep.variational:
        doc["variational"] = {
            "gamma": [list(t) for t in rep.variational["gamma"]],
            "g": [list(t) for t in rep.variational["g"]],
            "gamma_decreasing": rep.variational["gamma_decreasing"],
            "g_decreasing": rep.variational["g_decreasing"],
        }
    doc["metadata"] = {"runtime_ms": round((time.perf_counter() - t0) * 1e3, 3),
                       "version": __version__}
    code = EXIT_NONCONVERGED if rep.passed is None else (EXIT_OK if rep.passed else EXIT_FAILED)
    return Outcome(code, doc, None, f"{e.name}: closure defect {rep.closure_defect:.3g}, "
                                    f"passed={rep.passed}")


def run_varmeasure(cfg: RunConfig) -> Outcome:
    e = cfg.entry
    G = e.multifunction
    comps = parse_set(cfg.set)
    tol = cfg.effective_tol
    k = cfg.max_levels or 0
    t0 = time.perf_counter()
    delta = G.profile.gauge(k)
    trail = []
    for n in sorted({1, max(1, cfg.samples // 10), cfg.samples}):
        trail.append([n, itg.variational_measure_lower_bound(G, comps, delta, n, cfg.seed, tol)])
    doc = {
        "example": e.name,
        "set": [list(c) for c in comps],
        "gauge": delta.label,
        "samples": cfg.samples,
        "seed": cfg.seed,
        "lower_bound": trail[-1][1],
        "trail": trail,
        "kind": "lower bound of the variational measure",
        "metadata": {"runtime_ms": round((time.perf_counter() - t0) * 1e3, 3),
                     "version": __version__},
    }
    return Outcome(EXIT_OK, doc, None, f"{e.name}: variational lower bound {trail[-1][1]:.6g}")


def run_catalog(cfg: RunConfig) -> Outcome:
    entries = []
    for e in cat.catalog():
        entries.append({
            "name": e.name, "dim": e.dim, "classes": sorted(e.classes),
            "description": e.description, "tol": e.tol,
            "known_integral": None if e.known_integral is None
            else polytope_json(e.known_integral),
        })
    return Outcome(EXIT_OK, {"entries": entries}, None, "\n".join(
        f"{x['name']:<20} d={x['dim']}  {x['description']}" for x in entries))


_RUNNERS = {"catalog": run_catalog, "integrate": run_integrate, "compare": run_compare,
            "decompose": run_decompose, "varmeasure": run_varmeasure, "study": run_study}


def _paths(cfg: RunConfig):
    if cfg.out is None:
        return None, None
    out = Path(cfg.out)
    if out.suffix == ".json":
        return out, out.with_suffix(".csv")
    stem = "_".join(x for x in (cfg.command, cfg.example, cfg.method if cfg.command in
                                ("integrate", "study") else None) if x)
    return out / f"{stem}.json", out / f"{stem}.csv"


def run(cfg: RunConfig) -> Outcome:
    """Execute a config and write its outputs; invalid input becomes exit 3."""
    try:
        cfg = cfg.validate()
        outcome = _RUNNERS[cfg.command](cfg)
    except (ConfigError, KeyError) as exc:
        return Outcome(EXIT_INVALID, {"error": str(exc)}, None, f"invalid input: {exc}")
    jpath, cpath = _paths(cfg)
    if jpath is not None:
        jpath.parent.mkdir(parents=True, exist_ok=True)
        jpath.write_text(dumps(outcome.doc))
        if outcome.csv is not None:
            cpath.write_text(outcome.csv)
    return outcome


def merge(file_cfg: dict, flags: dict) -> RunConfig:
    """Flags (non-None) win over config-file values, which win over defaults."""
    kw = dict(file_cfg)
    kw.update({k: v for k, v in flags.items() if v is not None})
    return replace(RunConfig(), **kw)
