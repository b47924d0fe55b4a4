"""Command-line front end.

Every option may also come from a JSON file given with ``--config``; explicit
flags win over file values, which win over built-in defaults. Output files
start with ``#`` metadata lines (version, config hash, column schema) for CSV,
or carry a ``meta`` object for JSON. Files are written atomically.

Exit codes: 0 success, 1 numerical failure, 2 usage error. Errors are printed
to stderr as ``ptdtc: error: <kind>: <message>``.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from . import liouville as lv
from . import meanfield as mf
from . import spinops as so
from . import stability as st

DEFAULT_PARAMS = {
    "ddm": {"g": 2.0, "omega": 1.0, "kappa": 1.0},
    "lmg": {"g": 1.0, "kappa": 0.8},
    "waveguide": {"g": 1.0, "omega": 0.3, "gamma": 0.5},
    "lattice": {"g": 2.0, "omega": 1.0, "kappa": 1.5, "d": 1},
}

DEFAULTS = {
    "model": "ddm",
    "format": None,
    "output": "-",
    "threads": 1,
    "seed": 0,
    "spin": None,
    "t_end": 50.0,
    "stride": None,
    "initial": [1.0, 0.0, 0.0],
    "sweep": [],
    "spins": [10, 20],
    "n_states": 1000,
    "break_symmetry": 0.0,
    "extra_jumps": {},
    "gamma_sweep": None,
}

# flags that change where or how fast output is produced, not what it contains
_NOT_HASHED = ("output", "threads", "config")


class UsageError(Exception):
    pass


# --- parsing ----------------------------------------------------------------

def _sweep(text):
    try:
        name, rng = text.split("=", 1)
        lo, hi, steps = rng.split(":")
        out = {"param": name.strip(), "from": float(lo), "to": float(hi), "steps": int(steps)}
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected PARAM=FROM:TO:STEPS, got {text!r}") from None
    return out


def _triple(text):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected three comma-separated numbers, got {text!r}") from None
    if len(vals) != 3:
        raise argparse.ArgumentTypeError(f"expected three comma-separated numbers, got {text!r}")
    return vals


def _int_list(text):
    try:
        return [int(v) if float(v).is_integer() else float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated spins, got {text!r}") from None


def _jump(text):
    try:
        name, rate = text.split("=", 1)
        return name.strip(), float(rate)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected NAME=RATE, got {text!r}") from None


def _global_options(parser):
    s = argparse.SUPPRESS
    parser.add_argument("--output", "-o", default=s, help="output path, '-' for stdout")
    parser.add_argument("--format", choices=("csv", "json"), default=s)
    parser.add_argument("--threads", type=int, default=s, help="worker threads for sweeps")
    parser.add_argument("--seed", type=int, default=s, help="seed for random states")
    parser.add_argument("--config", default=s, help="JSON file with option values")


def _model_options(parser):
    s = argparse.SUPPRESS
    parser.add_argument("--model", choices=sorted(DEFAULT_PARAMS), default=s)
    for name in ("g", "omega", "kappa", "gamma"):
        parser.add_argument(f"--{name}", type=float, default=s)
    parser.add_argument("--d", type=int, default=s, help="lattice dimension")


def build_parser():
    s = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False)
    _global_options(common)
    model = argparse.ArgumentParser(add_help=False)
    _model_options(model)

    parser = argparse.ArgumentParser(
        prog="ptdtc",
        description="PT-symmetric dissipative time crystals: mean-field and finite-size tools.")
    parser.add_argument("--version", action="version", version=f"ptdtc {__version__}")
    _global_options(parser)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", parents=[common, model], help="integrate one trajectory")
    p.add_argument("--spin", type=float, default=s, help="finite spin S; omit for mean field")
    p.add_argument("--t-end", type=float, default=s)
    p.add_argument("--stride", type=float, default=s, help="sampling interval")
    p.add_argument("--initial", type=_triple, default=s, help="initial Bloch vector mx,my,mz")
    p.add_argument("--break-symmetry", type=float, default=s)
    p.add_argument("--extra-jump", dest="extra_jumps", type=_jump, action="append", default=s,
                   help="extra jump NAME=RATE (m_x, m_y, m_z, m_plus, m_minus)")

    p = sub.add_parser("phase-diagram", parents=[common, model], help="phase labels on a grid")
    p.add_argument("--sweep", type=_sweep, action="append", default=s,
                   help="PARAM=FROM:TO:STEPS in units of g; one or two axes")

    p = sub.add_parser("gap-sweep", parents=[common, model], help="finite-S vs mean-field gap")
    p.add_argument("--spins", type=_int_list, default=s, help="comma-separated S values")
    p.add_argument("--sweep", type=_sweep, action="append", default=s,
                   help="PARAM=FROM:TO:STEPS in units of g")

    p = sub.add_parser("symmetry-check", parents=[common, model], help="L-PT and n-PT residuals")
    p.add_argument("--spin", type=float, default=s)
    p.add_argument("--n-states", type=int, default=s)
    p.add_argument("--break-symmetry", type=float, default=s)
    p.add_argument("--extra-jump", dest="extra_jumps", type=_jump, action="append", default=s)

    sub.add_parser("stability-report", parents=[common, model], help="fixed points and stability")

    p = sub.add_parser("pt-demo", parents=[common], help="2x2 gain/loss Hamiltonian")
    p.add_argument("--g", type=float, default=s)
    p.add_argument("--gamma", type=float, default=s)
    p.add_argument("--gamma-sweep", type=_sweep, default=s, help="gamma=FROM:TO:STEPS (absolute)")
    return parser


def resolve_config(args) -> dict:
    given = vars(args).copy()
    command = given.pop("command")
    cfg = dict(DEFAULTS)
    if "config" in given:
        try:
            with open(given["config"]) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config file: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise UsageError("config file must hold a JSON object")
        params = file_cfg.pop("params", {})
        cfg.update(file_cfg)
        cfg.update(params)
    if "extra_jumps" in given and isinstance(given["extra_jumps"], list):
        given["extra_jumps"] = dict(given["extra_jumps"])
    cfg.update(given)
    cfg["command"] = command
    if cfg["format"] is None:
        cfg["format"] = "json" if command in ("symmetry-check", "stability-report") else "csv"
    name = cfg["model"]
    if name not in DEFAULT_PARAMS:
        raise UsageError(f"unknown model {name!r}")
    cfg["params"] = {k: v if cfg.get(k) is None else cfg[k] for k, v in DEFAULT_PARAMS[name].items()}
    if command == "pt-demo":
        cfg["params"] = {"g": cfg.get("g", 1.0), "gamma": cfg.get("gamma", 0.0)}
    for key in ("g", "omega", "kappa", "gamma", "d"):
        cfg.pop(key, None)
    for sw in cfg["sweep"] or []:
        if sw["steps"] < 2 or not sw["from"] < sw["to"]:
            raise UsageError(f"sweep {sw['param']}: need steps >= 2 and from < to")
    if cfg["threads"] < 1:
        raise UsageError("--threads must be >= 1")
    return cfg


def config_hash(cfg: dict) -> str:
    payload = {k: v for k, v in cfg.items() if k not in _NOT_HASHED}
    text = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


# --- output -----------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "nan" if math.isnan(v) else f"{v:.16e}"
    if isinstance(v, dict):
        return json.dumps(_json_safe(v), sort_keys=True)
    if v is None:
        return ""
    return str(v)


def _json_safe(v):
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return None if not math.isfinite(v) else v
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def render(cfg, columns, rows, extra=None) -> str:
    meta = {"version": __version__, "config_hash": config_hash(cfg), "command": cfg["command"],
            "columns": columns}
    if cfg["format"] == "json":
        body = {"meta": meta, "rows": [dict(zip(columns, r)) for r in rows]}
        if extra is not None:
            body = {"meta": meta, **extra}
        return json.dumps(_json_safe(body), indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    buf.write(f"# ptdtc {__version__}\n")
    buf.write(f"# command: {cfg['command']}\n")
    buf.write(f"# config_hash: {meta['config_hash']}\n")
    buf.write(f"# columns: {','.join(columns)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def write_output(path: str, text: str):
    if path == "-":
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".ptdtc-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _pool_map(fn, items, threads):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# --- commands ---------------------------------------------------------------

def _meanfield_model(cfg, **override):
    return mf.make_model(cfg["model"], **{**cfg["params"], **override})


def _spin_model(cfg, spin, **override):
    if cfg["model"] == "lattice":
        raise UsageError("the lattice model has no finite-size card")
    params = {**cfg["params"], **override}
    extra = {}
    if cfg.get("extra_jumps"):
        extra["extra_jumps"] = cfg["extra_jumps"]
    if cfg.get("break_symmetry"):
        if cfg["model"] != "ddm":
            raise UsageError("--break-symmetry is only available for the ddm model")
        extra["break_symmetry"] = cfg["break_symmetry"]
    basis = so.SpinBasis.from_spin(spin)
    if basis.dim ** 2 > lv.DENSE_LIMIT:
        raise UsageError(f"spin {spin} exceeds the dense limit ((2S+1)^2 <= {lv.DENSE_LIMIT})")
    return so.build_spin_model(cfg["model"], basis, params, **extra)


def cmd_evolve(cfg):
    q0 = np.asarray(cfg["initial"], dtype=float)
    if np.linalg.norm(q0) == 0:
        raise UsageError("initial Bloch vector must be nonzero")
    q0 = q0 / np.linalg.norm(q0)
    if cfg["spin"] is not None:
        model = _spin_model(cfg, cfg["spin"])
        stride = cfg["stride"] or 0.1
        rho0 = lv.coherent_state(model.basis, q0)
        traj = lv.evolve_density(model, rho0, cfg["t_end"], stride=stride)
        ops = so.build_spin_operators(model.basis)
        cols = ["t", "m_x", "m_y", "m_z", "trace_residual"]
        data = np.column_stack([traj.t] + [traj.expect(o).real for o in ops[:3]] + [traj.trace_residual()])
        return cols, data.tolist()
    model = _meanfield_model(cfg)
    stride = cfg["stride"] or 0.01
    if model.name == "lattice":
        ps = mf.schwinger_map(q0)
        if ps.degenerate:
            raise UsageError("lattice initial state cannot sit at a pole")
        q0 = np.array([ps.r_a, ps.r_b, ps.dtheta], dtype=float)
        cols = ["t", "r_a", "r_b", "dtheta", "amplitude_norm_residual"]
    else:
        cols = ["t", "m_x", "m_y", "m_z", "norm_residual"]
    traj = mf.integrate(model, q0, cfg["t_end"], stride=stride)
    resid = next(iter(traj.conserved_residuals().values()))
    data = np.column_stack([traj.t, traj.q, resid])
    return cols, data.tolist()


def _grid(cfg, max_axes):
    sweeps = cfg["sweep"] or []
    if not 1 <= len(sweeps) <= max_axes:
        raise UsageError(f"need 1 to {max_axes} --sweep axes")
    names = [sw["param"] for sw in sweeps]
    for n in names:
        if n not in cfg["params"] or n in ("g", "d"):
            raise UsageError(f"cannot sweep {n!r} for model {cfg['model']!r}")
    g = cfg["params"]["g"]
    axes = [np.linspace(sw["from"], sw["to"], sw["steps"]) * g for sw in sweeps]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = [dict(zip(names, vals)) for vals in zip(*(m.ravel() for m in mesh))]
    return names, points


def cmd_phase_diagram(cfg):
    names, points = _grid(cfg, 2)

    def one(pt):
        try:
            model = _meanfield_model(cfg, **pt)
            pp = st.phase_classify(model)
            rep = st.max_symmetric_cep(model, pp.fixed_points)
            metric = float("nan") if rep is None else rep.cep_metric
            return [pt[n] for n in names] + [pp.phase, pp.n_symmetric, pp.n_broken, metric]
        except (st.ClassificationError, st.ChartError, RuntimeError, ValueError) as exc:
            return [pt[n] for n in names] + [f"error:{type(exc).__name__}", -1, -1, float("nan")]

    rows = _pool_map(one, points, cfg["threads"])
    return names + ["phase", "n_fp_symmetric", "n_fp_broken", "cep_metric_at_boundary"], rows


def cmd_gap_sweep(cfg):
    names, points = _grid(cfg, 1)
    name = names[0]
    jobs = [(S, pt) for S in cfg["spins"] for pt in points]

    def one(job):
        S, pt = job
        model = _spin_model(cfg, S, **pt)
        try:
            gap_mf = st.meanfield_gap(_meanfield_model(cfg, **pt))
        except (st.ClassificationError, st.ChartError, RuntimeError):
            gap_mf = float("nan")
        try:
            gap = lv.lindblad_gap(model)
            status = "ok"
        except (lv.SpectrumError, np.linalg.LinAlgError) as exc:
            gap, status = float("nan"), f"error:{type(exc).__name__}"
        return [S, pt[name], gap, gap_mf, status]

    rows = _pool_map(one, jobs, cfg["threads"])
    return ["S", name, "gap_finite", "gap_meanfield", "status"], rows


def cmd_symmetry_check(cfg):
    rng = np.random.default_rng(cfg["seed"])
    model = _meanfield_model(cfg)
    n = cfg["n_states"]
    pts = rng.normal(size=(n, 3))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    if model.name == "lattice":
        ps = mf.schwinger_map(pts)
        pts = np.column_stack([ps.r_a, ps.r_b, ps.dtheta])
        pts = pts[(pts[:, 0] > 1e-6) & (pts[:, 1] > 1e-6)]
    eps = cfg["break_symmetry"] or 0.0
    extra = None
    if eps:
        def extra(q):
            return eps * np.stack([np.zeros_like(q[..., 2]), np.zeros_like(q[..., 2]), q[..., 2]], axis=-1)
    npt = float(np.max(mf.npt_residual(model, pts, extra=extra)))
    report = {"model": model.name, "params": dict(model.params), "n_states": int(len(pts)),
              "seed": cfg["seed"], "npt_max_residual": npt, "npt_pass": npt < 1e-12}
    if model.name != "lattice":
        spin = cfg["spin"] if cfg["spin"] is not None else 5
        check = so.check_lpt_symmetry(_spin_model(cfg, spin))
        report.update({"spin": spin, "lpt_residual": check.residual, "lpt_pass": bool(check.symmetric)})
    else:
        report.update({"spin": None, "lpt_residual": None, "lpt_pass": None})
    report["pass"] = bool(report["npt_pass"] and report["lpt_pass"] in (True, None))
    cols = list(report)
    return cols, [[report[c] for c in cols]], report


def cmd_stability_report(cfg):
    model = _meanfield_model(cfg)
    pp = st.phase_classify(model, with_reports=True)
    cols = ["label", "source", "q0", "q1", "q2", "residual", "pt_symmetric", "chart", "class",
            "re_lambda1", "im_lambda1", "re_lambda2", "im_lambda2", "alpha", "beta", "cep_metric",
            "cep_flag"]
    rows = []
    for r in pp.reports:
        fp = r.fixed_point
        lam = np.asarray(r.eigenvalues, dtype=complex)
        rows.append([fp.label, fp.source, *fp.coords, fp.residual, fp.pt_symmetric, r.chart,
                     r.classification, lam[0].real, lam[0].imag, lam[1].real, lam[1].imag,
                     float("nan") if r.alpha is None else r.alpha,
                     float("nan") if r.beta is None else r.beta, r.cep_metric, r.cep_flag])
    return cols, rows, pp.to_dict()


def cmd_pt_demo(cfg):
    g = cfg["params"]["g"]
    sw = cfg.get("gamma_sweep")
    gammas = [cfg["params"]["gamma"]] if sw is None else np.linspace(sw["from"], sw["to"], sw["steps"])
    rows = []
    for gam in gammas:
        res = st.nonhermitian_pt_demo(g, float(gam))
        rows.append([g, float(gam), res.eigenvalues[0].real, res.eigenvalues[0].imag,
                     res.eigenvalues[1].real, res.eigenvalues[1].imag, res.regime])
    return ["g", "gamma", "re_lambda1", "im_lambda1", "re_lambda2", "im_lambda2", "regime"], rows


COMMANDS = {
    "evolve": cmd_evolve,
    "phase-diagram": cmd_phase_diagram,
    "gap-sweep": cmd_gap_sweep,
    "symmetry-check": cmd_symmetry_check,
    "stability-report": cmd_stability_report,
    "pt-demo": cmd_pt_demo,
}


def _fail(kind, msg, code):
    sys.stderr.write(f"ptdtc: error: {kind}: {msg}\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        cfg = resolve_config(args)
        out = COMMANDS[cfg["command"]](cfg)
        cols, rows = out[0], out[1]
        extra = out[2] if len(out) > 2 else None
        text = render(cfg, cols, rows, extra)
        write_output(cfg["output"], text)
    except UsageError as exc:
        return _fail("usage", str(exc), 2)
    except (mf.IntegrationError, lv.SpectrumError, st.ClassificationError, st.ChartError,
            RuntimeError, np.linalg.LinAlgError, ArithmeticError) as exc:
        return _fail("numerical", f"{type(exc).__name__}: {exc}", 1)
    except (ValueError, TypeError) as exc:
        return _fail("usage", str(exc), 2)
    except OSError as exc:
        return _fail("io", str(exc), 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
