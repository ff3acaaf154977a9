"""Command-line interface: ``warpcurv <command> [options]``.

Every option can also come from a JSON document passed with ``--config``;
explicit flags win. Inputs are validated before any computation, and output
files are written atomically, so a failed run leaves nothing behind.

Exit codes: 0 success, 1 invalid input, 2 a check or experiment failed.
"""

import argparse
import io
import json
import math
import os
import re
import sys
import tempfile

import numpy as np

from . import __version__
from .construction import build_metric, classify, harmonic_residual, oracle_agreement, sample_moduli
from .core import PhaseState, ricci_eigenvalues
from .errors import WarpcurvError
from .flow import DEFAULT_TOL, attainable_drift, integrate
from .phase import basin_experiment, blowup_experiment, linearize_zero
from .warped import (
    appendix_nabla_ricci,
    appendix_ricci,
    assemble_metric_difference,
    construction_as_warped,
    random_desk_point,
    spec_from_dict,
    warhc_check,
)
from .tensor import DIFFERENCE_TOL, curvature_at

SCHEMA_VERSION = "1"
CSV_SAMPLES = 512
VERIFY_DRIFT_TOL = 1e-8
VERIFY_HARMONIC_TOL = 1e-8
VERIFY_ORACLE_TOL = 1e-7
VERIFY_STATE_CAP = 100.0


class UsageError(Exception):
    pass


# Serialization ------------------------------------------------------------------------


def _fmt(x):
    x = float(x)
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def canonical_json(obj):
    """JSON with sorted keys and 17-significant-digit floats; the same object always gives the same bytes."""
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        items = sorted((str(k), v) for k, v in obj.items())
        return "{" + ",".join(json.dumps(k) + ":" + canonical_json(v) for k, v in items) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ",".join(canonical_json(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def report(body):
    return canonical_json({"schema_version": SCHEMA_VERSION, **body}) + "\n"


def csv_text(header, rows):
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def write_output(text, path):
    """Write ``text`` to ``path`` atomically, or to stdout when ``path`` is None or ``-``."""
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".warpcurv-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# Parameters ---------------------------------------------------------------------------


def _floats(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        return [float(v) for v in str(text).split(",") if v.strip() != ""]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _float(v):
    try:
        return float(v)
    except (TypeError, ValueError):
        raise UsageError(f"expected a number, got {v!r}") from None


def _int(v):
    try:
        f = float(v)
    except (TypeError, ValueError):
        raise UsageError(f"expected an integer, got {v!r}") from None
    if not f.is_integer():
        raise UsageError(f"expected an integer, got {v!r}")
    return int(f)


def _str(v):
    return str(v)


INITIAL = {
    "n": (_int, None),
    "y0": (_floats, None),
    "p0": (_floats, None),
    "t0": (_float, 0.0),
    "span": (_floats, [-10.0, 10.0]),
    "tol": (_float, DEFAULT_TOL),
}

PARAMS = {
    "integrate": {**INITIAL, "samples": (_int, CSV_SAMPLES)},
    "verify": {**INITIAL, "samples": (_int, 64), "probes": (_int, 5)},
    "classify": {**INITIAL, "t_probe": (_float, None)},
    "metric": {**INITIAL, "g0": (_floats, None), "samples": (_int, CSV_SAMPLES)},
    "lin": {"n": (_int, None), "q": (_float, None)},
    "basin": {
        "n": (_int, 3),
        "xi": (_float, 0.0),
        "zeta": (_float, 6.0),
        "epsilon": (_float, 1e-2),
        "count": (_int, 20),
        "seed": (_int, 0),
        "horizon": (_float, 20.0),
        "require_all": (bool, False),
        "workers": (_int, 1),
    },
    "blowup": {"n": (_int, 3), "count": (_int, 20), "seed": (_int, 0), "horizon": (_float, 50.0), "workers": (_int, 1)},
    "moduli": {
        "n": (_int, 3),
        "count": (_int, 100),
        "box": (_floats, [-3.0, 3.0]),
        "seed": (_int, 0),
        "horizon": (_float, 20.0),
        "workers": (_int, 1),
    },
    "appendix": {"spec": (_str, None), "points": (_int, 5), "seed": (_int, 0), **{k: INITIAL[k] for k in INITIAL}},
}

HELP = {
    "n": "manifold dimension",
    "y0": "initial y diagonal, comma separated (n-1 entries)",
    "p0": "initial p diagonal, comma separated (n-1 entries)",
    "t0": "initial time",
    "span": "integration interval lo,hi containing t0",
    "tol": "integrator tolerance",
    "samples": "number of uniform output samples",
    "probes": "number of probe times for engine comparisons",
    "t_probe": "probe time (defaults to t0)",
    "g0": "values of g_jj at t0 (defaults to all ones)",
    "q": "identity multiple q of the zero q(1,0)",
    "xi": "basin center y value",
    "zeta": "basin center is p = -zeta",
    "epsilon": "sup-norm radius of the sample ball",
    "count": "number of samples",
    "seed": "random seed",
    "horizon": "integrate to |t| = horizon",
    "require_all": "exit 2 unless every sample passes",
    "workers": "worker processes (capped by WARPCURV_THREADS)",
    "box": "uniform sampling box lo,hi for every coordinate",
    "spec": "warped-product spec JSON file (omit to use the construction metric of the initial data)",
    "points": "number of random sample points",
}


def _add_params(parser, name):
    for key, (conv, default) in PARAMS[name].items():
        flag = "--" + key.replace("_", "-")
        if conv is bool:
            parser.add_argument(flag, dest=key, action="store_const", const=True, default=None, help=HELP.get(key))
        else:
            parser.add_argument(flag, dest=key, default=None, metavar=key.upper(), help=HELP.get(key))
    parser.add_argument("--config", default=None, help="JSON file with option values; flags override")
    parser.add_argument("--out", default=None, help="output path (default: stdout)")


def resolve(name, args):
    """Merge defaults, the config document and flags, and convert every value."""
    config = {}
    if args.config:
        try:
            with open(args.config) as fh:
                config = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config!r}: {exc}") from None
        if not isinstance(config, dict):
            raise UsageError("config document must be a JSON object")
        unknown = set(config) - set(PARAMS[name]) - {"out"}
        if unknown:
            raise UsageError(f"unknown config keys for {name}: {sorted(unknown)}")
    values = {}
    for key, (conv, default) in PARAMS[name].items():
        raw = getattr(args, key)
        if raw is None:
            raw = config.get(key, default)
        values[key] = raw if raw is None or conv is bool else conv(raw)
    values["out"] = args.out if args.out is not None else config.get("out")
    return values


def _initial(v, required=True):
    n, y0, p0 = v["n"], v["y0"], v["p0"]
    if n is None or y0 is None or p0 is None:
        if required:
            raise UsageError("--n, --y0 and --p0 are required")
        return None
    if n < 2:
        raise UsageError("n must be at least 2")
    if len(y0) != n - 1 or len(p0) != n - 1:
        raise UsageError(f"--y0 and --p0 need n-1 = {n - 1} entries each")
    if len(v["span"]) != 2:
        raise UsageError("--span needs two numbers lo,hi")
    lo, hi = v["span"]
    if not lo < v["t0"] < hi:
        raise UsageError("span must strictly contain t0")
    if not 0 < v["tol"] <= 1e-4:
        raise UsageError("tol must lie in (0, 1e-4]")
    return PhaseState(y0, p0)


def _trajectory(v):
    state = _initial(v)
    return integrate(state, v["t0"], tuple(v["span"]), v["tol"])


def _positive(v, *keys):
    for key in keys:
        if v[key] is None or v[key] < 1:
            raise UsageError(f"--{key.replace('_', '-')} must be a positive integer")


# Commands -----------------------------------------------------------------------------


def cmd_integrate(v):
    _positive(v, "samples")
    _initial(v)
    traj = _trajectory(v)
    n, k = traj.n, traj.k
    header = (
        ["t"]
        + [f"y_{j}" for j in range(2, n + 1)]
        + [f"p_{j}" for j in range(2, n + 1)]
        + ["s"]
        + [f"mu_{j}" for j in range(1, n + 1)]
    )
    ts = np.linspace(traj.t_minus, traj.t_plus, max(2, v["samples"]))
    states = traj.evaluate(ts)
    rows = []
    for t, x in zip(ts, states):
        y, p = x[:k], x[k:]
        s = 2.0 * p.sum() - (y * y).sum() - y.sum() ** 2
        mu = ricci_eigenvalues(PhaseState(y, p))
        rows.append([t, *y, *p, s, *mu])
    return csv_text(header, rows), True


def cmd_metric(v):
    _positive(v, "samples")
    _initial(v)
    traj = _trajectory(v)
    chart = build_metric(traj, v["g0"])
    header = ["t"] + [f"g_{j}{j}" for j in range(2, traj.n + 1)]
    ts = np.linspace(traj.t_minus, traj.t_plus, max(2, v["samples"]))
    rows = [[t, *chart.g(t)] for t in ts]
    return csv_text(header, rows), True


def _probe_times(traj, count, cap=VERIFY_STATE_CAP):
    lo, hi = traj.window()
    ts = np.linspace(lo, hi, 4 * count + 2)[1:-1]
    ts = ts[np.max(np.abs(traj.evaluate(ts)), axis=1) <= cap]
    if ts.size == 0:
        return np.array([traj.t0])
    return ts[np.linspace(0, ts.size - 1, min(count, ts.size)).round().astype(int)]


def cmd_verify(v):
    _positive(v, "samples", "probes")
    _initial(v)
    traj = _trajectory(v)
    chart = build_metric(traj)
    drift = attainable_drift(traj)
    ts = _probe_times(traj, v["samples"])
    harmonic = max(float(np.max(np.abs(harmonic_residual(chart, t)))) for t in ts)
    probes = _probe_times(traj, v["probes"])
    agreement = [oracle_agreement(chart, t) for t in probes]
    oracle = {key: max(a[key] for a in agreement) for key in agreement[0]}
    checks = {
        "conservation": drift < VERIFY_DRIFT_TOL,
        "harmonic_residual": harmonic < VERIFY_HARMONIC_TOL,
        "oracle_ricci": oracle["ricci"] < VERIFY_ORACLE_TOL,
        "oracle_scalar": oracle["scalar"] < VERIFY_ORACLE_TOL,
        "codazzi": oracle["codazzi"] < 1e-6,
    }
    body = {
        "command": "verify",
        "n": traj.n,
        "initial": {"y": traj.initial.y.tolist(), "p": traj.initial.p.tolist()},
        "s": traj.s0,
        "domain": [traj.t_minus, traj.t_plus],
        "status": [traj.status_minus.value, traj.status_plus.value],
        "relative_s_drift": drift,
        "max_harmonic_residual": harmonic,
        "oracle": oracle,
        "probe_times": probes.tolist(),
        "checks": checks,
        "passed": all(checks.values()),
    }
    return report(body), body["passed"]


def cmd_classify(v):
    _initial(v)
    traj = _trajectory(v)
    rep = classify(traj, v["t_probe"])
    body = {"command": "classify", "domain": [traj.t_minus, traj.t_plus], **rep.to_dict()}
    return report(body), True


def cmd_lin(v):
    if v["n"] is None or v["q"] is None:
        raise UsageError("--n and --q are required")
    rep = linearize_zero(v["q"], v["n"])
    return report({"command": "phase lin", **rep.to_dict()}), rep.ok


def cmd_basin(v):
    _positive(v, "count", "workers")
    if not v["zeta"] > 0 or v["epsilon"] < 0 or not v["horizon"] > 0:
        raise UsageError("need zeta > 0, epsilon >= 0 and horizon > 0")
    rep = basin_experiment(
        v["n"], v["xi"], v["zeta"], v["epsilon"], v["count"], v["seed"], horizon=v["horizon"], workers=v["workers"]
    )
    ok = rep["passed"] == rep["count"] or not v["require_all"]
    return report({"command": "phase basin", **rep}), ok


def cmd_blowup(v):
    _positive(v, "count", "workers")
    if v["n"] < 2 or not v["horizon"] > 0:
        raise UsageError("need n >= 2 and horizon > 0")
    rep = blowup_experiment(v["n"], v["count"], v["seed"], horizon=v["horizon"], workers=v["workers"])
    return report({"command": "phase blowup", **rep}), rep["finite"] == rep["count"]


def cmd_moduli(v):
    _positive(v, "count", "workers")
    if len(v["box"]) != 2:
        raise UsageError("--box needs two numbers lo,hi")
    records = sample_moduli(v["n"], v["count"], tuple(v["box"]), v["seed"], workers=v["workers"], horizon=v["horizon"])
    text = "".join(canonical_json({"schema_version": SCHEMA_VERSION, **r}) + "\n" for r in records)
    return text, True


def cmd_appendix(v):
    _positive(v, "points")
    rng = np.random.default_rng(v["seed"])
    if v["spec"] is not None:
        try:
            with open(v["spec"]) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read spec {v['spec']!r}: {exc}") from None
        spec = spec_from_dict(doc)
        if "points" in doc:
            points = np.asarray(doc["points"], dtype=float)
        else:
            points = np.array([random_desk_point(spec, rng) for _ in range(v["points"])])
        source = doc.get("name", "spec")
    else:
        _initial(v)
        traj = _trajectory(v)
        chart = build_metric(traj)
        spec = construction_as_warped(chart)
        points = np.array([np.concatenate([[t], np.zeros(spec.n - 1)]) for t in _probe_times(traj, v["points"])])
        source = "construction"
    cond = warhc_check(spec, points)
    diff = assemble_metric_difference(spec)
    ricci_gap = nabla_gap = 0.0
    for x in points:
        rep = curvature_at(diff, x)
        ricci_gap = max(ricci_gap, float(np.max(np.abs(appendix_ricci(spec, x) - rep.ricci))))
        nabla_gap = max(nabla_gap, float(np.max(np.abs(appendix_nabla_ricci(spec, x) - rep.nabla_ricci))))
    body = {
        "command": "appendix",
        "source": source,
        "m": spec.m,
        "p": spec.p,
        "kappa": spec.kappa,
        "conditions": cond.to_dict(),
        "engine_agreement": {"ricci": ricci_gap, "nabla_ricci": nabla_gap, "tolerance": DIFFERENCE_TOL},
    }
    ok = cond.consistent and ricci_gap <= DIFFERENCE_TOL and nabla_gap <= DIFFERENCE_TOL
    body["passed"] = ok
    return report(body), ok


COMMANDS = {
    "integrate": (cmd_integrate, "integrate a trajectory and write CSV samples"),
    "verify": (cmd_verify, "conservation, harmonic residual and engine agreement report"),
    "classify": (cmd_classify, "genericity and obstruction flags"),
    "metric": (cmd_metric, "table of the metric coefficients g_jj"),
    "moduli": (cmd_moduli, "sample initial data and write one JSON record per line"),
    "appendix": (cmd_appendix, "warped-product condition checks"),
}
PHASE = {
    "lin": (cmd_lin, "linearization at q(1,0)"),
    "basin": (cmd_basin, "completeness basin experiment"),
    "blowup": (cmd_blowup, "finite-time blow-up experiment"),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="warpcurv", description="Harmonic-curvature metrics from a phase ODE.")
    parser.add_argument("--version", action="version", version=f"warpcurv {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True
    for name, (_, text) in COMMANDS.items():
        _add_params(sub.add_parser(name, help=text, description=text), name)
    phase = sub.add_parser("phase", help="phase-space analyses", description="phase-space analyses")
    psub = phase.add_subparsers(dest="analysis", metavar="analysis", parser_class=_Parser)
    psub.required = True
    for name, (_, text) in PHASE.items():
        _add_params(psub.add_parser(name, help=text, description=text), name)
    return parser


_NEGATIVE = re.compile(r"^-(\d|\.\d)")


def _join_negative_values(argv):
    """Attach values such as ``-6,-6`` to the preceding long option so they are not read as flags."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok.startswith("--") and "=" not in tok and i + 1 < len(argv) and _NEGATIVE.match(argv[i + 1]):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(_join_negative_values(argv))
    if args.command == "phase":
        name, (fn, _) = args.analysis, PHASE[args.analysis]
    else:
        name, (fn, _) = args.command, COMMANDS[args.command]
    try:
        values = resolve(name, args)
        text, ok = fn(values)
    except (UsageError, WarpcurvError) as exc:
        print(f"warpcurv {name}: error: {exc}", file=sys.stderr)
        return 1
    write_output(text, values["out"])
    return 0 if ok else 2


if __name__ == "__main__":
    sys.exit(main())
