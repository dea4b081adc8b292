"""Parameter sweeps over gaussian_bump(beta, width) x half-width."""
from __future__ import annotations

import csv
import io
import os
import time
from concurrent.futures import ProcessPoolExecutor

from .. import __version__
from ..errors import ConfigError, LayerSpectraError
from .config import ProfileSpec, RunConfig
from .records import RECORD_SCHEMA, digest, json_safe, read_record, write_json, write_text
from .runner import EXIT_NUMERICAL, EXIT_OK, run_pipeline

SUMMARY_COLUMNS = [
    "index",
    "beta",
    "width",
    "rho_fraction",
    "a",
    "rho_m",
    "status",
    "admissible",
    "K_total",
    "K_total_error",
    "parabolicity",
    "case",
    "verdict",
    "probe_verdict",
    "best_q3_upper",
    "best_probe_q3_upper",
    "lambda1",
    "lambda1_uncertainty",
    "lambda_inf",
    "threshold",
    "margin",
    "bound_states",
    "cross_check",
    "run_dir",
]


def point_configs(cfg):
    out = []
    for p in cfg.sweep.points():
        prof = ProfileSpec("gaussian_bump", {"beta": p["beta"], "width": p["width"]})
        out.append(RunConfig(prof, p["half_width"], cfg.numerics, None, None, cfg.seed, cfg.base_dir))
    return out


def _run_point(cfg_dict, run_dir, probe):
    cfg = RunConfig.from_dict(cfg_dict)
    try:
        record, code = run_pipeline("point", cfg, run_dir, probe=probe)
    except LayerSpectraError as exc:
        return {"status": "numerical-failure", "error": f"{type(exc).__name__}: {exc}", "run_dir": run_dir}
    return {"status": "ok" if code == EXIT_OK else "inadmissible", "run_dir": run_dir, "exit_code": code}


def _best(rows):
    vals = [r["q3"] + r["error"] for r in rows if r.get("q3") is not None and r.get("error") is not None]
    return min(vals) if vals else None


def summary_row(index, cfg, outcome):
    row = {k: None for k in SUMMARY_COLUMNS}
    row.update(index=index, beta=cfg.profile.params["beta"], width=cfg.profile.params["width"])
    hw = cfg.half_width
    row["rho_fraction"] = hw["rho_fraction"] if isinstance(hw, dict) else None
    row["status"] = outcome["status"]
    row["run_dir"] = os.path.basename(outcome["run_dir"])
    rec = read_record(outcome["run_dir"]) if outcome["status"] != "numerical-failure" else None
    if rec is None:
        row["cross_check"] = "n/a"
        return row
    res = rec["results"]
    row["a"] = res["layer"]["a"]
    row["rho_m"] = res["layer"]["rho_m"]
    row["admissible"] = res["validate"]["admissible"]
    row["threshold"] = res["validate"]["threshold"]
    inv = res.get("invariants")
    if inv:
        row["K_total"] = inv["K_total"]
        row["K_total_error"] = inv["tail_bound"]
        row["parabolicity"] = inv["parabolicity"]["verdict"]
    cert = res.get("certify")
    if cert:
        row["case"] = cert["case"]
        row["verdict"] = cert["verdict"]
        row["best_q3_upper"] = _best(cert["rows"] + cert["perturbed"])
        if cert.get("probe"):
            row["probe_verdict"] = cert["probe"]["verdict"]
            row["best_probe_q3_upper"] = _best(cert["probe"]["rows"])
    sol = res.get("solve")
    if sol:
        m0 = sol["modes"][0]
        row["lambda1"] = m0["lambda_upper"][0]
        row["lambda1_uncertainty"] = m0["uncertainty_h"][0]
        row["lambda_inf"] = m0["lambda_inf"][0]
        row["margin"] = m0["margin"]
        row["bound_states"] = m0["bound_states"] if isinstance(m0["bound_states"], int) else "inconclusive"
    row["cross_check"] = cross_check(row)
    return row


def cross_check(row):
    """A variational certificate must be matched by an eigenvalue below threshold - margin."""
    claimed = row.get("verdict") == "Certified" or row.get("probe_verdict") == "Certified"
    if not claimed:
        return "n/a"
    lam, thr, margin = row.get("lambda1"), row.get("threshold"), row.get("margin")
    if lam is None or thr is None:
        return "contradiction"
    ok = isinstance(row.get("bound_states"), int) and row["bound_states"] >= 1 and lam <= thr - margin
    return "ok" if ok else "contradiction"


def summary_csv(rows):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SUMMARY_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if r[k] is None else (f"{r[k]:.12g}" if isinstance(r[k], float) else r[k])) for k in SUMMARY_COLUMNS})
    return buf.getvalue()


def run_sweep(cfg, sweep_dir, workers=1):
    """Run every grid point (resuming finished ones) and write summary.csv + run.json."""
    if cfg.sweep is None:
        raise ConfigError("the sweep command needs a sweep block")
    if cfg.profile.family != "gaussian_bump":
        raise ConfigError("sweeps are defined over the gaussian_bump family")
    input_hash = cfg.content_hash("sweep")
    os.makedirs(sweep_dir, exist_ok=True)
    write_json(os.path.join(sweep_dir, "config.json"), cfg.to_dict())
    t0 = time.perf_counter()
    pcs = point_configs(cfg)
    dirs = [os.path.join(sweep_dir, "points", pc.content_hash("point")[:16]) for pc in pcs]
    jobs = [(pc.to_dict(), d, cfg.sweep.probe) for pc, d in zip(pcs, dirs)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            outcomes = list(ex.map(_run_point, *zip(*jobs)))
    else:
        outcomes = [_run_point(*j) for j in jobs]
    rows = [summary_row(i, pc, o) for i, (pc, o) in enumerate(zip(pcs, outcomes))]
    write_text(os.path.join(sweep_dir, "summary.csv"), summary_csv(rows))
    failures = [o.get("error") for o in outcomes if o["status"] == "numerical-failure"]
    contradictions = sum(r["cross_check"] == "contradiction" for r in rows)
    demo = _case_two_demo(rows)
    results = {
        "n_points": len(rows),
        "rows": rows,
        "certified": sum(r["verdict"] == "Certified" for r in rows),
        "probe_certified": sum(r["probe_verdict"] == "Certified" for r in rows),
        "contradictions": contradictions,
        "failures": failures,
        "inadmissible": sum(r["status"] == "inadmissible" for r in rows),
        "case_two_demo": demo,
    }
    code = EXIT_NUMERICAL if (failures or contradictions) else EXIT_OK
    verdict = (
        f"{len(rows)} points; certified={results['certified']}; probe_certified={results['probe_certified']}; "
        f"contradictions={contradictions}; failures={len(failures)}; inadmissible={results['inadmissible']}"
    )
    record = {
        "schema_version": RECORD_SCHEMA,
        "command": "sweep",
        "input_hash": input_hash,
        "config": cfg.to_dict(),
        "results": json_safe(results),
        "verdict": verdict,
    }
    record["digest"] = digest(record)
    record["exit_code"] = code
    record["version"] = __version__
    record["timing"] = {"total_seconds": time.perf_counter() - t0}
    write_json(os.path.join(sweep_dir, "run.json"), record)
    return record, code


def _case_two_demo(rows):
    """The admissible point whose K_total is closest to zero, with its perturbed-trial verdict."""
    cands = [r for r in rows if r["K_total"] is not None and r["status"] == "ok"]
    if not cands:
        return None
    r = min(cands, key=lambda r: abs(r["K_total"]))
    verdict = r["verdict"] if r["case"] == "zero-K2 perturbation" else r["probe_verdict"]
    return {
        "index": r["index"],
        "K_total": r["K_total"],
        "K_total_error": r["K_total_error"],
        "case": r["case"],
        "perturbation_verdict": verdict,
        "best_q3_upper": r["best_probe_q3_upper"] if r["case"] != "zero-K2 perturbation" else r["best_q3_upper"],
    }
