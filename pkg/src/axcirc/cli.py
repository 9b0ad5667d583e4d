"""Command-line interface.

Subcommands: fit, select, simulate, bootstrap, recovery. Options come
from flags or a flat key=value config file, flags winning. All numeric
artifacts are written with shortest round-trip float formatting so a
rerun with the same seed is byte-identical.
"""

import argparse
import csv
import json
import os
import sys
from types import SimpleNamespace

import numpy as np

from . import bootstrap as bt
from . import mixture as mx
from . import simstudy as ss
from ._backend import backend_name
from .circula import ComponentParams, joint_density
from .directional import Family, MarginalSpec, pdf
from ._errors import (
    AxcircError,
    DataError,
    DomainError,
    NumericalError,
    UsageError,
)

__all__ = ["main", "ingest", "export_plot_data", "model_from_result"]

_FAMILY_CODES = {"vm": 0, "wc": 1}
_CIRC_BY_CODE = {"vm": Family.VM_CIRC, "wc": Family.WC_CIRC}
_AXIAL_BY_CODE = {"vm": Family.VM_AXIAL, "wc": Family.WC_AXIAL}
_CODE_BY_FAMILY = {
    Family.VM_CIRC: "vm",
    Family.WC_CIRC: "wc",
    Family.VM_AXIAL: "vm",
    Family.WC_AXIAL: "wc",
}


def _parse_families(text):
    parts = text.strip().lower().split("-")
    if len(parts) != 2 or parts[0] not in _CIRC_BY_CODE or parts[1] not in _AXIAL_BY_CODE:
        raise UsageError(f"families must look like vm-wc, got {text!r}")
    return _CIRC_BY_CODE[parts[0]], _AXIAL_BY_CODE[parts[1]]


def _parse_j_range(text):
    text = text.strip()
    if "-" in text and "," not in text:
        lo, hi = text.split("-", 1)
        values = list(range(int(lo), int(hi) + 1))
    else:
        values = [int(tok) for tok in text.split(",") if tok.strip()]
    if not values or any(j < 1 for j in values):
        raise UsageError(f"invalid J range {text!r}")
    return tuple(values)


# ---------------------------------------------------------------------------
# Ingestion


def _parse_covariate_spec(text):
    """Split 'slope,aspect:NE' into ordered (column, reference|None) pairs."""
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if ":" in tok:
            col, ref = tok.split(":", 1)
            out.append((col.strip(), ref.strip()))
        else:
            out.append((tok, None))
    return out


def ingest(path, config):
    """Read a delimited text file with a header row into a Dataset.

    config needs: circular and axial column names, unit (degrees or
    radians), covariates spec string, delimiter. Degrees are converted
    to radians, then angles are reduced modulo their periods. Rows with
    an empty required field are dropped and counted; non-numeric text
    raises DataError with the file line number. Categorical covariates
    (spec 'column:reference') are expanded into one dummy column per
    non-reference level, levels sorted for determinism.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    with fh:
        reader = csv.reader(fh, delimiter=config.delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        cov_spec = _parse_covariate_spec(config.covariates)
        needed = [config.circular, config.axial] + [c for c, _ in cov_spec]
        missing = [c for c in needed if c not in header]
        if missing:
            raise DataError(f"{path}: missing column(s) {', '.join(missing)}")
        idx = {c: header.index(c) for c in needed}
        rows = []
        dropped = 0
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            cells = [row[idx[c]].strip() if idx[c] < len(row) else "" for c in needed]
            if any(cell == "" for cell in cells):
                dropped += 1
                continue
            rows.append((lineno, cells))
        if not rows:
            raise DataError(f"{path}: no usable data rows")

    def number(cell, lineno, col):
        try:
            return float(cell)
        except ValueError:
            raise DataError(
                f"{path}:{lineno}: cannot parse {cell!r} in column {col}"
            ) from None

    scale = np.pi / 180.0 if config.unit == "degrees" else 1.0
    x = np.array([number(c[0], ln, config.circular) for ln, c in rows]) * scale
    y = np.array([number(c[1], ln, config.axial) for ln, c in rows]) * scale
    columns = [np.ones(len(rows))]
    for k, (col, ref) in enumerate(cov_spec, start=2):
        cells = [(ln, c[k]) for ln, c in rows]
        if ref is None:
            columns.append(np.array([number(cell, ln, col) for ln, cell in cells]))
        else:
            levels = sorted({cell for _, cell in cells})
            if ref not in levels:
                raise DataError(
                    f"{path}: reference level {ref!r} absent from column {col}"
                )
            for level in levels:
                if level == ref:
                    continue
                columns.append(
                    np.array([1.0 if cell == level else 0.0 for _, cell in cells])
                )
    data = mx.Dataset(x, y, np.column_stack(columns))
    print(f"ingested {data.n} rows from {path} ({dropped} dropped)")
    return data


def _covariate_names(config):
    names = []
    for col, ref in _parse_covariate_spec(config.covariates):
        if ref is None:
            names.append(col)
        else:
            names.append(f"{col}:*")
    return names


# ---------------------------------------------------------------------------
# Serialization


def _center(value, period):
    half = 0.5 * period
    return half - ((half - value) % period)


def _spec_dict(spec):
    return {"family": spec.family.value, "mu": float(spec.mu), "kappa": float(spec.kappa)}


def _model_dict(model):
    comps = []
    comps_centered = []
    for c in model.components:
        comps.append(
            {
                "circ": _spec_dict(c.circ),
                "axial": _spec_dict(c.axial),
                "rho": float(c.rho),
            }
        )
        comps_centered.append(
            {
                "mu_circ": _center(float(c.circ.mu), 2.0 * np.pi),
                "mu_axial": _center(float(c.axial.mu), np.pi),
            }
        )
    return {
        "components": comps,
        "components_centered": comps_centered,
        "beta": [[float(v) for v in row] for row in model.beta],
    }


def model_from_result(payload):
    """Rebuild a MixtureModel from a result.json payload."""
    comps = []
    for c in payload["model"]["components"]:
        comps.append(
            ComponentParams(
                MarginalSpec(Family(c["circ"]["family"]), c["circ"]["mu"], c["circ"]["kappa"]),
                MarginalSpec(Family(c["axial"]["family"]), c["axial"]["mu"], c["axial"]["kappa"]),
                c["rho"],
            )
        )
    beta = np.asarray(payload["model"]["beta"], dtype=np.float64)
    if len(comps) == 1:
        beta = beta.reshape(0, 1)
    return mx.MixtureModel(tuple(comps), beta)


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _result_payload(res, seed, data):
    return {
        "model": _model_dict(res.model),
        "families": "-".join(
            _CODE_BY_FAMILY[f] for f in res.model.families
        ),
        "J": res.model.J,
        "loglik": float(res.loglik),
        "bic": float(res.bic),
        "n_params": int(res.n_params),
        "converged": bool(res.converged),
        "restarts_used": int(res.restarts_used),
        "loglik_decreases": int(res.loglik_decreases),
        "collapsed_restarts": int(res.collapsed_restarts),
        "beta_ridge_flag": bool(res.beta_ridge_flag),
        "n": int(data.n),
        "q": int(data.q),
        "seed": seed,
        "backend": backend_name(),
    }


def _write_fit_outputs(res, data, seed, out):
    _write_json(os.path.join(out, "result.json"), _result_payload(res, seed, data))
    resp = res.responsibilities
    header = ["row"] + [f"resp_{j + 1}" for j in range(resp.shape[1])] + ["label"]
    rows = [
        [i + 1] + [resp[i, j] for j in range(resp.shape[1])] + [int(res.classification[i]) + 1]
        for i in range(data.n)
    ]
    _write_csv(os.path.join(out, "classification.csv"), header, rows)


# ---------------------------------------------------------------------------
# Plot-data export


def export_plot_data(fit_result, data, grid_res=200, out_dir="."):
    """Write contours.csv, marginals.csv, and rose.csv for a fit.

    The mixture surface uses estimated class shares p_j (responsibility
    column means), so the weighted density integrates to 1 over
    [0,2pi) x [0,pi). Rose bins: 16 circular, 8 axial.
    """
    model = fit_result.model
    J = model.J
    p = fit_result.responsibilities.mean(axis=0)
    gx = np.linspace(0.0, 2.0 * np.pi, int(grid_res), endpoint=False)
    gy = np.linspace(0.0, np.pi, int(grid_res), endpoint=False)
    xx, yy = np.meshgrid(gx, gy, indexing="ij")
    xf, yf = xx.ravel(), yy.ravel()
    comp_vals = np.column_stack(
        [joint_density(model.components[j], xf, yf) for j in range(J)]
    )
    mixture = comp_vals @ p
    header = ["x", "y"] + [f"component_{j + 1}" for j in range(J)] + ["mixture", "log_mixture"]
    rows = [
        [xf[i], yf[i]] + [comp_vals[i, j] for j in range(J)]
        + [mixture[i], np.log(mixture[i])]
        for i in range(xf.size)
    ]
    _write_csv(os.path.join(out_dir, "contours.csv"), header, rows)

    tc = np.linspace(0.0, 2.0 * np.pi, 4 * int(grid_res), endpoint=False)
    ta = np.linspace(0.0, np.pi, 4 * int(grid_res), endpoint=False)
    mheader = ["kind", "t"] + [f"class_{j + 1}" for j in range(J)]
    mrows = []
    for t in tc:
        mrows.append(["circular", t] + [pdf(model.components[j].circ, t) for j in range(J)])
    for t in ta:
        mrows.append(["axial", t] + [pdf(model.components[j].axial, t) for j in range(J)])
    _write_csv(os.path.join(out_dir, "marginals.csv"), mheader, mrows)

    rrows = []
    for kind, angles, period, nbins in (
        ("circular", data.x, 2.0 * np.pi, 16),
        ("axial", data.y, np.pi, 8),
    ):
        edges = np.linspace(0.0, period, nbins + 1)
        counts, _ = np.histogram(angles, bins=edges)
        for b in range(nbins):
            rrows.append([kind, b + 1, edges[b], edges[b + 1], int(counts[b])])
    _write_csv(
        os.path.join(out_dir, "rose.csv"),
        ["kind", "bin", "lower", "upper", "count"],
        rrows,
    )


# ---------------------------------------------------------------------------
# Commands


def _fit_config(ns, seed):
    return mx.FitConfig(
        restarts=ns.restarts, tol=ns.tol, max_iter=ns.max_iter, seed=seed
    )


def _cmd_fit(ns):
    data = ingest(ns.input, ns)
    families = _parse_families(ns.families)
    res = mx.fit(data, families, ns.j, _fit_config(ns, ns.seed))
    os.makedirs(ns.out, exist_ok=True)
    _write_fit_outputs(res, data, ns.seed, ns.out)
    if ns.plots:
        export_plot_data(res, data, ns.grid_res, ns.out)
    print(f"fit: J={ns.j} loglik={res.loglik!r} bic={res.bic!r} converged={res.converged}")
    return 0


def _cmd_select(ns):
    data = ingest(ns.input, ns)
    if ns.families_grid.strip().lower() == "all":
        grid = mx.ALL_FAMILY_PAIRS
    else:
        grid = tuple(
            _parse_families(tok) for tok in ns.families_grid.split(";") if tok.strip()
        )
    j_range = _parse_j_range(ns.j_range)
    sel = mx.select_model(data, grid, j_range, _fit_config(ns, ns.seed))
    os.makedirs(ns.out, exist_ok=True)
    rows = [
        [
            _CODE_BY_FAMILY[r.circ_family],
            _CODE_BY_FAMILY[r.axial_family],
            r.J,
            r.loglik,
            r.n_params,
            r.bic,
            r.converged,
            r.error,
        ]
        for r in sel.rows
    ]
    _write_csv(
        os.path.join(ns.out, "selection.csv"),
        ["circ_family", "axial_family", "J", "loglik", "n_params", "bic", "converged", "error"],
        rows,
    )
    _write_fit_outputs(sel.best, data, ns.seed, ns.out)
    best = sel.best_row
    print(
        f"select: best {_CODE_BY_FAMILY[best.circ_family]}-"
        f"{_CODE_BY_FAMILY[best.axial_family]} J={best.J} bic={best.bic!r}"
    )
    return 0


def _cmd_simulate(ns):
    scenario = ss.builtin_scenario(ns.scenario, n=ns.n)
    rng = np.random.default_rng(ns.seed)
    z = ss.make_covariates(scenario.covariates, scenario.n, rng)
    data, labels = ss.simulate_dataset(scenario.truth, z, rng)
    os.makedirs(ns.out, exist_ok=True)
    q = data.q
    header = ["x", "y"] + [f"z{k + 1}" for k in range(q)] + ["label"]
    rows = [
        [data.x[i], data.y[i]] + [data.z[i, k + 1] for k in range(q)] + [int(labels[i]) + 1]
        for i in range(data.n)
    ]
    _write_csv(os.path.join(ns.out, "simulated.csv"), header, rows)
    _write_json(
        os.path.join(ns.out, "truth.json"),
        {
            "scenario": scenario.name,
            "model": _model_dict(scenario.truth),
            "n": scenario.n,
            "seed": ns.seed,
        },
    )
    print(f"simulate: {data.n} rows from scenario {scenario.name}")
    return 0


def _cmd_bootstrap(ns):
    data = ingest(ns.input, ns)
    families = _parse_families(ns.families)
    master = np.random.SeedSequence(ns.seed)
    fit_seed, boot_seed = master.spawn(2)
    res = mx.fit(data, families, ns.j, _fit_config(ns, fit_seed))
    boot = bt.parametric_bootstrap(
        res,
        data,
        ns.b,
        level=ns.level,
        rng=np.random.default_rng(boot_seed),
        workers=ns.threads,
    )
    os.makedirs(ns.out, exist_ok=True)
    _write_fit_outputs(res, data, ns.seed, ns.out)
    rows = [
        [name, boot.point[k], boot.intervals[name][0], boot.intervals[name][1]]
        for k, name in enumerate(boot.names)
    ]
    _write_csv(
        os.path.join(ns.out, "intervals.csv"),
        ["parameter", "estimate", "lower", "upper"],
        rows,
    )
    for w in boot.warnings:
        print(f"warning: {w}")
    print(
        f"bootstrap: {boot.effective}/{boot.replicates} replicates, "
        f"level={boot.level}"
    )
    return 0


def _cmd_recovery(ns):
    replicas = ns.replicas
    if ns.full and replicas == ss.DEFAULT_REPLICAS:
        replicas = ss.FULL_REPLICAS
    scenario = ss.builtin_scenario(ns.scenario, n=ns.n, replicas=replicas)
    config = mx.FitConfig(restarts=ns.restarts, tol=ns.tol, max_iter=ns.max_iter)
    report = ss.run_recovery_study(
        scenario,
        config,
        replicas=replicas,
        rng=np.random.default_rng(ns.seed),
        workers=ns.threads,
    )
    os.makedirs(ns.out, exist_ok=True)
    rows = [
        [name, report.truth[k], report.means[k], report.bands[k][0], report.bands[k][1]]
        for k, name in enumerate(report.names)
    ]
    _write_csv(
        os.path.join(ns.out, "recovery.csv"),
        ["parameter", "truth", "mean", "lower", "upper"],
        rows,
    )
    _write_csv(
        os.path.join(ns.out, "accuracy.csv"),
        ["replica", "accuracy"],
        [[i + 1, a] for i, a in enumerate(report.accuracies)],
    )
    _write_json(
        os.path.join(ns.out, "recovery.json"),
        {
            "scenario": report.scenario,
            "replicas_requested": report.replicas_requested,
            "replicas_done": report.replicas_done,
            "failures": report.failures,
            "monotone_replicas": int(np.sum(report.decreases == 0)),
            "median_accuracy": report.median_accuracy,
            "warnings": list(report.warnings),
            "seed": ns.seed,
        },
    )
    for w in report.warnings:
        print(f"warning: {w}")
    print(
        f"recovery: {report.replicas_done} replicas, "
        f"median accuracy {report.median_accuracy!r}"
    )
    return 0


# ---------------------------------------------------------------------------
# Argument handling: defaults < config file < explicit flags


_INGEST_OPTS = {
    "input": (str, None),
    "circular": (str, "x"),
    "axial": (str, "y"),
    "unit": (str, "degrees"),
    "covariates": (str, ""),
    "delimiter": (str, ","),
}

_COMMON_OPTS = {
    "config": (str, None),
    "out": (str, "."),
    "seed": (int, None),
    "threads": (int, max(1, os.cpu_count() or 1)),
}

_EM_OPTS = {
    "restarts": (int, 20),
    "tol": (float, 1e-8),
    "max_iter": (int, 500),
}

_COMMANDS = {
    "fit": (
        _cmd_fit,
        {
            **_COMMON_OPTS,
            **_INGEST_OPTS,
            **_EM_OPTS,
            "families": (str, "vm-vm"),
            "j": (int, 2),
            "plots": (bool, False),
            "grid_res": (int, 200),
        },
        ("input",),
    ),
    "select": (
        _cmd_select,
        {
            **_COMMON_OPTS,
            **_INGEST_OPTS,
            **_EM_OPTS,
            "families_grid": (str, "all"),
            "j_range": (str, "1,2,3"),
        },
        ("input",),
    ),
    "simulate": (
        _cmd_simulate,
        {**_COMMON_OPTS, "scenario": (str, None), "n": (int, 600)},
        ("scenario",),
    ),
    "bootstrap": (
        _cmd_bootstrap,
        {
            **_COMMON_OPTS,
            **_INGEST_OPTS,
            **_EM_OPTS,
            "families": (str, "vm-vm"),
            "j": (int, 2),
            "b": (int, 200),
            "level": (float, 0.95),
        },
        ("input",),
    ),
    "recovery": (
        _cmd_recovery,
        {
            **_COMMON_OPTS,
            **_EM_OPTS,
            "scenario": (str, None),
            "n": (int, 600),
            "replicas": (int, ss.DEFAULT_REPLICAS),
            "full": (bool, False),
        },
        ("scenario",),
    ),
}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="axcirc",
        description="Mixtures of copula-linked circular-axial densities",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, opts, _required) in _COMMANDS.items():
        p = sub.add_parser(name)
        for key, (typ, _default) in opts.items():
            flag = "--" + key.replace("_", "-")
            if typ is bool:
                p.add_argument(flag, action="store_true", default=argparse.SUPPRESS)
            else:
                p.add_argument(flag, type=typ, default=argparse.SUPPRESS)
    return parser


def _load_config_file(path, opts):
    values = {}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            value = value.strip()
            if key not in opts:
                raise UsageError(f"{path}:{lineno}: unknown option {key!r}")
            typ = opts[key][0]
            try:
                if typ is bool:
                    values[key] = value.lower() in ("1", "true", "yes", "on")
                else:
                    values[key] = typ(value)
            except ValueError:
                raise UsageError(f"{path}:{lineno}: bad value for {key}") from None
    return values


def _resolve(ns):
    handler, opts, required = _COMMANDS[ns.command]
    explicit = {k: v for k, v in vars(ns).items() if k not in ("command",)}
    merged = {k: default for k, (_, default) in opts.items()}
    if "config" in explicit:
        merged.update(_load_config_file(explicit["config"], opts))
    merged.update(explicit)
    for key in required:
        if merged.get(key) is None:
            raise UsageError(f"{ns.command}: --{key.replace('_', '-')} is required")
    merged["command"] = ns.command
    return handler, SimpleNamespace(**merged)


def _emit_error(exc):
    payload = {"error": type(exc).__name__, "message": str(exc)}
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)


def main(argv=None):
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        handler, resolved = _resolve(ns)
        return handler(resolved)
    except UsageError as exc:
        _emit_error(exc)
        return 1
    except DataError as exc:
        _emit_error(exc)
        return 2
    except DomainError as exc:
        _emit_error(exc)
        return 1
    except (NumericalError, AxcircError) as exc:
        _emit_error(exc)
        return 3


if __name__ == "__main__":
    sys.exit(main())
