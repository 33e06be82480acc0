"""CSV trace emission and parsing.

Floats are written with 17 significant digits so parsing reproduces the
in-memory doubles exactly. Each CSV has a JSON sidecar (same stem) with the
parameters and the scalar oracle quantities an offline audit needs.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

SCGM_HEADER = ("k", "obj", "envelope", "radius", "residual", "step_norm", "time_s")
PAGM_HEADER = ("k", "obj", "fmu", "grad_norm", "delta_k", "Delta_k", "sub_exact", "time_s")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def scgm_rows(trace, record_time=False):
    st = trace.states
    rows = []
    for i, s in enumerate(st):
        step = float(np.linalg.norm(st[i + 1].x - s.x)) if i + 1 < len(st) else None
        rows.append(dict(
            k=s.k,
            obj=s.objective,
            envelope=s.envelope,
            radius=s.radius,
            residual=s.residual,
            step_norm=step,
            time_s=trace.times[i] if record_time else None,
        ))
    return rows


def pagm_rows(trace, record_time=False):
    prob, o = trace.problem, trace.oracle
    rows = []
    for i, s in enumerate(trace.states):
        k = s.k
        rows.append(dict(
            k=k,
            obj=prob.objective(s.x1),
            fmu=o.f_mu[k] if o else None,
            grad_norm=None if s.approx_grad is None else float(np.linalg.norm(s.approx_grad)),
            delta_k=o.delta[k] if o and k < len(o.delta) else None,
            Delta_k=o.Delta[k] if o else None,
            sub_exact=bool(s.sub_exact),
            time_s=s.time_s if record_time else None,
        ))
    return rows


def scgm_meta(trace, **extra):
    p = trace.params
    meta = dict(algorithm="scgm", params=asdict(p), tau=trace.tau, seed=trace.rng_seed,
                gamma_used=trace.gamma,
                v_norm_max=max(float(np.linalg.norm(s.v)) for s in trace.states))
    meta.update(extra)
    return meta


def pagm_meta(trace, **extra):
    p, o = trace.params, trace.oracle
    meta = dict(algorithm="pagm", params=asdict(p), tau=trace.tau, seed=trace.rng_seed,
                max_sub_gap=max(trace.sub_gap) if trace.sub_gap else 0.0, verified=o is not None)
    if o is not None:
        meta.update(delta0=o.delta[0], Delta0=o.Delta[0],
                    dist1=[list(d) for d in o.dist1], dist2=[list(d) for d in o.dist2])
    meta.update(extra)
    return meta


def write_trace(path, header, rows, meta):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(r[h]) for h in header])
    sidecar_path(path).write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")
    return path


def sidecar_path(path):
    return Path(path).with_suffix(".json")


def read_trace(path):
    """Parse a CSV trace back into ``(rows, meta)``; empty cells become None."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = []
        for r in reader:
            row = {}
            for key, val in r.items():
                if val == "":
                    row[key] = None
                elif key == "k":
                    row[key] = int(val)
                elif key == "sub_exact":
                    row[key] = val == "1"
                else:
                    row[key] = float(val)
            rows.append(row)
    side = sidecar_path(path)
    meta = json.loads(side.read_text()) if side.exists() else None
    return rows, meta
