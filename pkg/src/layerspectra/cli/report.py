"""Markdown + SVG reports rendered from stored run records.

Rendering is a pure function of the records (and the meridian CSV stored
next to them): no clocks, no host data, fixed number formats. Rendering
twice gives byte-identical output.
"""
from __future__ import annotations

import csv
import os

import numpy as np

from ..certifier import phi_sigma
from ..svg import decimate, line_plot

GAP = "_not available: no stored record_"
BLOBS = ("layer", "validate", "invariants", "certify", "solve")


def _f(x, spec=".6g"):
    if x is None:
        return "n/a"
    if isinstance(x, str):
        return x
    if isinstance(x, bool):
        return "yes" if x else "no"
    if isinstance(x, int):
        return str(x)
    return format(x, spec)


def merge_results(records):
    """First record providing each blob wins; records are never modified."""
    merged = {}
    for rec in records:
        for key in BLOBS:
            if key not in merged and key in rec.get("results", {}):
                merged[key] = rec["results"][key]
    return merged


def read_meridian(run_dir):
    path = os.path.join(run_dir, "meridian.csv")
    if not os.path.isfile(path):
        return None
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    head, body = rows[0], np.array(rows[1:], dtype=float)
    return {name: body[:, i] for i, name in enumerate(head)}


def _table(header, rows):
    out = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    out += ["| " + " | ".join(r) + " |" for r in rows]
    return out


def render_report(records, run_dirs=()):
    """Return (markdown, {filename: svg}) for one configuration's records."""
    res = merge_results(records)
    md = ["# Layer spectrum report", ""]
    svgs = {}
    cfg = records[0]["config"] if records else None
    layer = res.get("layer")
    if cfg:
        prof = cfg["profile"]
        params = ", ".join(f"{k}={_f(v)}" for k, v in sorted(prof.get("params", {}).items()))
        md.append(f"Profile: `{prof['family']}`" + (f" ({params})" if params else ""))
    if layer:
        md.append(f"Half-width a = {_f(layer['a'])}, rho_m = {_f(layer['rho_m'])}")
    val = res.get("validate")
    if val:
        md.append(f"Essential-spectrum threshold (pi/2a)^2 = {_f(val['threshold'])}")
    flat = bool(layer and layer["rho_m"] == "inf")
    if flat:
        md += ["", "Flat layer: the hypersurface is a hyperplane, so no discrete spectrum is expected below the threshold."]
    md.append("")

    md += ["## Admissibility", ""]
    if val:
        md += _table(
            ["check", "verdict", "detail"],
            [
                ["A1 injectivity", val["A1"]["verdict"], val["A1"].get("reason") or ""],
                ["A2 a < rho_m", val["A2"]["verdict"], f"a/rho_m = {_f(val['A2']['a_over_rho_m'])}"],
                ["A3 flatness", val["A3"]["verdict"], ""],
            ],
        )
        md.append(f"\nAdmissible: {_f(val['admissible'])}")
    else:
        md.append(GAP)
    md.append("")

    md += ["## Invariants", ""]
    inv = res.get("invariants")
    if inv:
        par, vol, diag = inv["parabolicity"], inv["volume_growth"], inv["diagnostics"]
        md += _table(
            ["quantity", "value"],
            [
                ["K_total", f"{_f(inv['K_total'], '.6e')} +- {_f(inv['tail_bound'], '.1e')}"],
                ["parabolicity", par["verdict"]],
                ["int_1^inf dt / (4 pi r^2)", f"{_f(par['value'])} (tail bound {_f(par['tail_bound'], '.1e')})"],
                ["explicit tail bound", _f(par.get("explicit_bound"))],
                ["r(S)/S", _f(diag["r_over_s"], ".10f")],
                ["int k_s k_theta r ds", f"{_f(diag['jacobi_moment'], '.3e')} (bound {_f(diag['jacobi_moment_bound'], '.1e')})"],
                ["volume growth alpha", _f(vol["alpha_extrapolated"], ".8f")],
                ["cubic envelope holds", _f(vol.get("envelope_ok"))],
            ],
        )
    else:
        md.append(GAP)
    md.append("")

    md += ["## Variational certificate", ""]
    cert = res.get("certify")
    if cert:
        md.append(f"Case: {cert['case']}; verdict: **{cert['verdict']}**; s0 = {_f(cert['s0'])}")
        for note in cert.get("notes", []):
            md.append(f"- {note}")
        if cert["rows"]:
            md.append("")
            md += _table(
                ["sigma", "tangential", "curvature", "Q3", "error", "direct vs split"],
                [
                    [_f(r["sigma"], ".0e"), _f(r["tangential"]), _f(r["curvature"], ".6e"), _f(r["q3"]), _f(r["error"], ".1e"), _f(r["direct_difference"], ".1e")]
                    for r in cert["rows"]
                ],
            )
        pert = cert["perturbed"] or (cert.get("probe") or {}).get("rows") or []
        if pert:
            label = "perturbed trials" if cert["perturbed"] else f"perturbation probe (verdict {cert['probe']['verdict']})"
            md += ["", f"{label.capitalize()}:", ""]
            md += _table(
                ["sigma", "epsilon", "Q3(0)", "Q3(epsilon)", "error"],
                [[_f(r["sigma"], ".0e"), _f(r["epsilon"]), _f(r["q3_base"]), _f(r["q3"]), _f(r["error"], ".1e")] for r in pert],
            )
        rows = [r for r in cert["rows"] if r.get("sigma") is not None]
        if rows:
            sig = [r["sigma"] for r in rows]
            svgs["q3_sigma.svg"] = line_plot(
                [("Q3", sig, [r["q3"] for r in rows]), ("tangential", sig, [r["tangential"] for r in rows])],
                title="Q3 along the cutoff sweep",
                xlabel="sigma",
                ylabel="energy",
                logx=True,
            )
            s0 = cert["s0"]
            grid = np.linspace(0.0, 12.0 * s0, 400)
            svgs["phi_sigma.svg"] = line_plot(
                [(f"sigma={r['sigma']:.0e}", grid, phi_sigma(grid, r["sigma"], s0)) for r in rows],
                title=f"cutoff family, s0 = {s0:.4g}",
                xlabel="s",
                ylabel="phi",
            )
    else:
        md.append(GAP)
    md.append("")

    md += ["## Eigensolver", ""]
    sol = res.get("solve")
    if sol:
        for m in sol["modes"]:
            md.append(
                f"Mode l = {m['l']}: lambda_1 <= {_f(m['lambda_upper'][0], '.8f')} +- {_f(m['uncertainty_h'][0], '.1e')}, "
                f"extrapolated {_f(m['lambda_inf'][0], '.8f')} +- {_f(m['uncertainty'][0], '.1e')}, "
                f"observed order {_f(m['order'], '.3f')}, bound states: {_f(m['bound_states'])}"
            )
        m0 = sol["modes"][0]
        md.append("")
        md += _table(
            ["S_max", "h_s", "n_u", "lambda_1", "residual"],
            [[_f(r["S"]), _f(r["h_s"], ".4g"), str(r["n_u"]), _f(r["lambda"][0], ".10f"), _f(r["residual"][0], ".1e")] for r in m0["ladder"]],
        )
        series = []
        for S in sorted({r["S"] for r in m0["ladder"]}):
            rr = [r for r in m0["ladder"] if r["S"] == S]
            series.append((f"S_max={S:.4g}", [r["h_s"] for r in rr], [r["lambda"][0] for r in rr]))
        hs = [r["h_s"] for r in m0["ladder"]]
        series.append(("threshold", [min(hs), max(hs)], [sol["threshold"]] * 2))
        svgs["lambda_mesh.svg"] = line_plot(series, title="lambda_1 against mesh size", xlabel="h_s", ylabel="lambda_1", logx=True)
    else:
        md.append(GAP)
    md.append("")

    md += ["## Side by side", ""]
    left = cert["verdict"] if cert else "n/a"
    if sol:
        m0 = sol["modes"][0]
        right = f"lambda_1 = {_f(m0['lambda_upper'][0], '.8f')} vs threshold {_f(sol['threshold'], '.8f')}, bound states {_f(m0['bound_states'])}"
    else:
        right = "n/a"
    md += _table(["variational certificate", "eigensolver"], [[left, right]])
    md.append("")

    for d in run_dirs:
        mer = read_meridian(d)
        if mer is not None:
            r, z = decimate(mer["r"], mer["z"])
            svgs["meridian.svg"] = line_plot([("meridian", r, z)], title="meridian", xlabel="r", ylabel="z", equal=True)
            break
    if svgs:
        md += ["## Figures", ""] + [f"![{name[:-4]}]({name})" for name in sorted(svgs)] + [""]
    return "\n".join(md), svgs


def render_sweep_report(record):
    """Markdown table and a gap-versus-curvature plot for a sweep record."""
    res = record["results"]
    rows = res["rows"]
    md = ["# Sweep report", "", record["verdict"], ""]
    md += _table(
        ["#", "beta", "width", "a", "K_total", "case", "verdict", "probe", "lambda_1", "threshold", "bound states", "cross-check"],
        [
            [
                str(r["index"]),
                _f(r["beta"]),
                _f(r["width"]),
                _f(r["a"], ".4g"),
                _f(r["K_total"], ".3e"),
                _f(r["case"]),
                _f(r["verdict"]),
                _f(r["probe_verdict"]),
                _f(r["lambda1"], ".6g"),
                _f(r["threshold"], ".6g"),
                _f(r["bound_states"]),
                _f(r["cross_check"]),
            ]
            for r in rows
        ],
    )
    demo = res.get("case_two_demo")
    md.append("")
    if demo:
        md.append(
            f"Perturbation demo at point {demo['index']} (K_total = {_f(demo['K_total'], '.3e')}): "
            f"verdict {_f(demo['perturbation_verdict'])}, best Q3 + error = {_f(demo['best_q3_upper'])}"
        )
    ok = sorted((r for r in rows if r["K_total"] is not None and r["lambda1"] is not None), key=lambda r: r["K_total"])
    svgs = {}
    if ok:
        svgs["sweep_gap.svg"] = line_plot(
            [("lambda_1 - threshold", [r["K_total"] for r in ok], [r["lambda1"] - r["threshold"] for r in ok])],
            title="eigenvalue gap against total curvature",
            xlabel="K_total",
            ylabel="lambda_1 - (pi/2a)^2",
            logx=all(r["K_total"] > 0 for r in ok),
        )
        md += ["", "![sweep_gap](sweep_gap.svg)"]
    md.append("")
    return "\n".join(md), svgs
