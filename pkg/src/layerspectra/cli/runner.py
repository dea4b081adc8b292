"""Single-run pipelines: validate -> invariants -> certify -> solve."""
from __future__ import annotations

import datetime as _dt
import math
import os
import time

import numpy as np

from .. import __version__
from ..certifier import TrialFamily, certify, default_family, write_certificate
from ..constants import threshold
from ..eigsolve import bound_state_count, convergence_study, default_ladder, write_spectrum_json
from ..errors import ConfigError, InconclusiveError
from ..invariants import K_total, invariants_record, write_invariants
from ..layer import default_window, layer_svg, make_layer, validate, write_layer_report
from ..meridian import CurvatureProfile, build_meridian, principal_curvatures, rho_m, write_meridian_csv
from .records import RECORD_SCHEMA, atomic_path, digest, json_safe, read_record, write_json, write_text

STAGES = {
    "validate": ("validate",),
    "invariants": ("validate", "invariants"),
    "certify": ("validate", "invariants", "certify"),
    "solve": ("validate", "solve"),
    "point": ("validate", "invariants", "certify", "solve"),
}

EXIT_OK, EXIT_SCHEMA, EXIT_INADMISSIBLE, EXIT_NUMERICAL = 0, 2, 3, 4


def output_root(cli_out=None):
    """--out wins, then LAYERSPECTRA_OUT, then ./runs."""
    if cli_out:
        return os.path.abspath(cli_out)
    env = os.environ.get("LAYERSPECTRA_OUT")
    return os.path.abspath(env) if env else os.path.abspath("runs")


def resolve_profile(spec, table_path=None):
    if spec.family == "flat":
        return CurvatureProfile.flat()
    if spec.family == "gaussian_bump":
        return CurvatureProfile.gaussian_bump(spec.params["beta"], spec.params["width"])
    try:
        return CurvatureProfile.from_csv(table_path)
    except (OSError, ValueError, IndexError) as exc:
        raise ConfigError(f"unreadable curvature table {table_path}: {exc}") from exc


def probe_rho(profile, h):
    """rho_m over the curvature support, from a window independent of a."""
    S = default_window(profile, 0.0)
    S = min(S, _table_limit(profile))
    curve = build_meridian(profile, S, h)
    return rho_m(principal_curvatures(curve))


def _table_limit(profile):
    return profile.params.get("s_max", math.inf) if profile.family == "table" else math.inf


def resolve_half_width(profile, half_width, h):
    if isinstance(half_width, dict):
        rho = probe_rho(profile, h)
        if not math.isfinite(rho):
            raise ConfigError("rho_fraction is undefined for a flat profile (rho_m is infinite)")
        return half_width["rho_fraction"] * rho
    return float(half_width)


def build_layer(cfg, profile=None, half_width=None):
    num = cfg.numerics
    profile = profile or resolve_profile(cfg.profile, cfg.table_path())
    a = resolve_half_width(profile, cfg.half_width if half_width is None else half_width, num.h)
    s_max = num.s_max if num.s_max is not None else default_window(profile, a)
    s_max = min(s_max, _table_limit(profile))
    return make_layer(profile, a, s_max=s_max, h=num.h)


# ------------------------------------------------------------------ stages


def stage_validate(layer, cfg, run_dir, ctx):
    num = cfg.numerics
    rep = validate(layer, flat_tol=num.flat_tol, resolution=num.a1_resolution)
    ctx["admissibility"] = rep
    with atomic_path(os.path.join(run_dir, "layer_report.json")) as tmp:
        write_layer_report(tmp, rep)
    with atomic_path(os.path.join(run_dir, "meridian.csv")) as tmp:
        write_meridian_csv(tmp, layer.curve, layer.pair)
    write_text(os.path.join(run_dir, "layer.svg"), layer_svg(layer))
    blob = rep.to_dict()
    blob["s_max"] = layer.curve.s_max
    blob["h"] = layer.curve.h
    blob["threshold"] = threshold(layer.a)
    return blob


def stage_invariants(layer, cfg, run_dir, ctx):
    rec = invariants_record(layer)
    ctx["K_total"] = K_total(layer)
    with atomic_path(os.path.join(run_dir, "invariants.json")) as tmp:
        write_invariants(tmp, rec)
    return rec


def stage_certify(layer, cfg, run_dir, ctx):
    num = cfg.numerics
    fam = default_family(layer, num.sigmas)
    probe = ctx.get("probe", False)
    cert = certify(layer, fam, admissibility=ctx.get("admissibility"), kt=ctx.get("K_total"), probe=probe, n_u=num.n_u_quad)
    ctx["certificate"] = cert
    with atomic_path(os.path.join(run_dir, "certificate.json")) as tmp:
        write_certificate(tmp, cert)
    return cert.to_dict()


def stage_solve(layer, cfg, run_dir, ctx):
    num = cfg.numerics
    ladder = default_ladder(layer, num.mesh_n_u0, num.mesh_levels)
    trunc = list(num.truncations) if num.truncations else None
    modes = []
    rows = []
    for l in num.angular_modes:
        st = convergence_study(layer, ladder, trunc, l=l, count=num.eig_count)
        margin = num.margin if num.margin is not None else 2.0 * float(np.max(st.uncertainty_h))
        try:
            count = bound_state_count(st, layer.a, margin)
        except InconclusiveError as exc:
            count = f"inconclusive: {exc}"
        d = st.to_dict()
        d["margin"] = margin
        d["bound_states"] = count
        modes.append(d)
        for lad in st.ladder:
            for k, (lam, res) in enumerate(zip(lad["lambda"], lad["residual"])):
                rows.append(f"{l},{k},{lam:.15e},{res:.3e},{lad['mesh_id']}")
    ctx["spectrum"] = modes
    write_text(os.path.join(run_dir, "eigs.csv"), "l,index,lambda,residual,mesh_id\n" + "\n".join(rows) + "\n")
    blob = {"threshold": threshold(layer.a), "modes": modes}
    write_json(os.path.join(run_dir, "spectrum.json"), blob)
    return blob


STAGE_FUNCS = {
    "validate": stage_validate,
    "invariants": stage_invariants,
    "certify": stage_certify,
    "solve": stage_solve,
}


def _verdict(results, stages):
    parts = []
    v = results.get("validate")
    if v is not None:
        parts.append("admissible" if v["admissible"] else "inadmissible")
    inv = results.get("invariants")
    if inv is not None:
        parts.append(f"K_total={_fmt(inv.get('K_total'))}")
        parts.append(f"parabolicity={inv['parabolicity']['verdict']}")
    c = results.get("certify")
    if c is not None:
        parts.append(f"certificate={c['verdict']}")
    s = results.get("solve")
    if s is not None:
        m0 = s["modes"][0]
        parts.append(f"lambda1={_fmt(m0['lambda_upper'][0])}/threshold={_fmt(s['threshold'])}")
        parts.append(f"bound_states={m0['bound_states'] if isinstance(m0['bound_states'], int) else 'inconclusive'}")
    return "; ".join(parts)


def _fmt(x):
    if x is None or isinstance(x, str):
        return str(x)
    return f"{x:.6g}"


def run_pipeline(command, cfg, run_dir, probe=False, layer=None):
    """Execute ``command``'s stages into ``run_dir``; returns (record, exit code).

    Resumes: an intact run.json with the same input hash is returned as is.
    """
    input_hash = cfg.content_hash(command)
    existing = read_record(run_dir)
    if existing is not None and existing.get("input_hash") == input_hash:
        return existing, existing.get("exit_code", EXIT_OK)
    os.makedirs(run_dir, exist_ok=True)
    write_json(os.path.join(run_dir, "config.json"), cfg.to_dict())
    started = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    timing = {}
    t0 = time.perf_counter()
    layer = layer or build_layer(cfg)
    timing["build"] = time.perf_counter() - t0
    ctx = {"probe": probe}
    results = {"layer": {"a": layer.a, "rho_m": layer.rho_m, "profile": layer.profile.to_dict()}}
    code = EXIT_OK
    stages = STAGES[command]
    for name in stages:
        t = time.perf_counter()
        results[name] = STAGE_FUNCS[name](layer, cfg, run_dir, ctx)
        timing[name] = time.perf_counter() - t
        if name == "validate" and command != "validate" and not ctx["admissibility"].admissible:
            code = EXIT_INADMISSIBLE
            break
    record = {
        "schema_version": RECORD_SCHEMA,
        "command": command,
        "input_hash": input_hash,
        "config": cfg.to_dict(),
        "results": json_safe(results),
        "verdict": _verdict(results, stages) if code == EXIT_OK else "inadmissible: " + _verdict(results, stages),
    }
    record["digest"] = digest(record)
    record["exit_code"] = code
    record["version"] = __version__
    record["timing"] = {"started_utc": started, "seconds": timing, "total_seconds": time.perf_counter() - t0}
    write_json(os.path.join(run_dir, "run.json"), record)
    return record, code


def run_dir_for(out_root, command, cfg):
    return os.path.join(out_root, f"{command}-{cfg.content_hash(command)[:16]}")
