"""Command-line front end.

Every subcommand resolves its configuration from defaults, then an optional
``--config`` file, then explicit flags.  Config files are INI-style with one
section per subcommand::

    [convergence]
    dist = family=exponential rate=1.0
    p = 0.3
    q = 4
    sizes = 50,100,200,400,800,1600

An output file written earlier can also be passed to ``--config``; its header
block holds the resolved configuration, so re-running reproduces it byte for
byte apart from the single ``generated_at`` line.

Exit codes:
    0  success
    2  configuration error (bad flag, unknown key, unparsable value)
    3  I/O error (output path not writable, config file unreadable)
    4  domain error raised by the library (illegal parameter, no oracle, ...)
    5  an invariant or acceptance check failed; a diagnostic line is printed

``BWM_OUTPUT_DIR`` prefixes relative ``--out`` paths.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import binomial as bn
from . import cramer as cr
from .bwm import (
    EDGEWORTH,
    ORACLE,
    SCHEMA_VERSION,
    BwmProblem,
    atom_mass,
    bwm_edgeworth_cdf,
    default_grid,
    fit_loglog_slope,
    mixture_cdf,
    star_polynomials,
    sweep_sup_error,
)
from .distributions import make_distribution, parse_distribution
from .edgeworth import normal_cdf
from .errors import BwmError, ConfigError, NoClosedFormOracle
from .montecarlo import SimConfig, compare_with_cdf, empirical_cdf, sample_z

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_DOMAIN, EXIT_CHECK = 0, 2, 3, 4, 5
HEADER_TAG = "bwm-edgeworth"


# ---------------------------------------------------------------------------
# value parsers
# ---------------------------------------------------------------------------


def _int(s):
    return int(s)


def _float(s):
    return float(s)


def _float_list(s):
    return [float(v) for v in s.split(",") if v.strip()]


def _int_list(s):
    """``"50,100,200"`` or the doubling shorthand ``"50..1600"``."""
    if ".." in s:
        lo, hi = (int(v) for v in s.split(".."))
        out = [lo]
        while out[-1] * 2 <= hi:
            out.append(out[-1] * 2)
        return out
    return [int(v) for v in s.split(",") if v.strip()]


def _grid(s):
    lo, hi, step = (float(v) for v in s.split(":"))
    return default_grid(lo, hi, step)


def _choice(*options):
    def parse(s):
        if s not in options:
            raise ValueError(f"expected one of {options}")
        return s
    return parse


@dataclass(frozen=True)
class Opt:
    name: str
    parse: object
    default: str
    help: str


COMMON = [
    Opt("format", _choice("csv", "json"), "csv", "output format"),
    Opt("seed", _int, "0", "random seed (64-bit unsigned)"),
]
PROBLEM = [
    Opt("dist", parse_distribution, "family=exponential rate=1.0", "law of Y as key=value text"),
    Opt("p", _float, "0.3", "Bernoulli success probability"),
    Opt("q", _int, "4", "expansion order (3 or 4)"),
]
GRID = [Opt("grid", _grid, "-8:8:0.01", "evaluation grid lo:hi:step")]

COMMANDS = {
    "expand": PROBLEM + [Opt("n", _int, "100", "number of Bernoulli trials")] + GRID,
    "mixture": PROBLEM + [Opt("n", _int, "100", "number of Bernoulli trials")] + GRID,
    "convergence": PROBLEM + GRID + [
        Opt("sizes", _int_list, "50..1600", "sample sizes (comma list or lo..hi doubling)"),
        Opt("reference", _choice(EDGEWORTH, ORACLE), EDGEWORTH, "per-k CDF inside the mixture"),
        Opt("slope_tol", _float, "0.2", "allowed |fitted slope + (q-1)/2|"),
        Opt("workers", _int, "1", "threads for the size sweep"),
    ],
    "inverse-moment": [
        Opt("alpha", _float_list, "0.5,1,1.5,2", "inverse-moment orders"),
        Opt("p", _float, "0.3", "Bernoulli success probability"),
        Opt("K", _int, "3", "number of expansion coefficients"),
        Opt("sizes", _int_list, "256..16384", "values of n"),
    ],
    "lattice-check": [
        Opt("kind", _choice("examples", "atoms", "vectors", "linear", "gated"), "examples", "support kind (examples = built-in set of five)"),
        Opt("atoms", str, "", "1-D atoms, e.g. 0,1 or e,3,pi or 0,1/3,2/3"),
        Opt("vectors", str, "", "N-D atoms separated by ';', coordinates by ','"),
        Opt("probs", str, "", "atom probabilities (default uniform)"),
        Opt("coeffs", str, "1,4", "linear image coefficients"),
        Opt("base", str, "", "continuous law of Y / W (blank = standard normal for linear)"),
        Opt("gate_p", _float, "0.3", "Bernoulli gate probability"),
        Opt("r_max", _float, "200", "scan radius"),
        Opt("step", _float, "0.01", "scan step"),
    ],
    "mc": PROBLEM + GRID + [
        Opt("n", _int, "200", "number of Bernoulli trials"),
        Opt("reps", _int, "1000000", "replications"),
        Opt("streams", _int, "1", "worker threads (never changes the output)"),
        Opt("confidence", _float, "0.999", "DKW band confidence"),
        Opt("samples_out", str, "", "optional path for raw Z samples (.npy or .csv)"),
    ],
    "identities": [
        Opt("n_list", _int_list, "1,2,5,10,50,200", "n grid for the Bernoulli-sum identity"),
        Opt("p_list", _float_list, "0.1,0.3,0.5,0.9", "p grid for the identity"),
        Opt("alpha_list", _float_list, "-2,-1,-0.5,0,0.5,1,2", "alpha grid for the identity"),
        Opt("kl_n_list", _int_list, "10,50,200", "n grid for the KL tail bound"),
        Opt("kl_p_list", _float_list, "0.3,0.5", "p grid for the KL tail bound"),
    ],
}
for _opts in COMMANDS.values():
    _opts[:0] = COMMON


# ---------------------------------------------------------------------------
# config resolution
# ---------------------------------------------------------------------------


def _read_config_text(path: str) -> str:
    text = Path(path).read_text()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        doc = json.loads(text)
        lines = [f"[{doc['command']}]"] + [f"{k} = {v}" for k, v in doc["config"].items()]
        return "\n".join(lines) + "\n"
    if stripped.startswith("#"):
        lines = []
        for line in text.splitlines():
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            if body.startswith(HEADER_TAG) or body.startswith("generated_at"):
                continue
            lines.append(body)
        return "\n".join(lines) + "\n"
    return text


def load_config_file(path: str, command: str) -> dict:
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    parser.optionxform = str
    try:
        parser.read_string(_read_config_text(path))
    except (configparser.Error, json.JSONDecodeError, KeyError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    if not parser.has_section(command):
        raise ConfigError(f"config {path} has no [{command}] section")
    return dict(parser.items(command))


def resolve_config(command: str, file_values: dict, flag_values: dict) -> tuple[dict, dict]:
    """Return ``(raw strings, parsed values)`` after validation."""
    opts = {o.name: o for o in COMMANDS[command]}
    unknown = set(file_values) - set(opts)
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
    raw = {name: o.default for name, o in opts.items()}
    raw.update(file_values)
    raw.update({k: v for k, v in flag_values.items() if v is not None})
    parsed = {}
    for name, o in opts.items():
        try:
            parsed[name] = o.parse(str(raw[name]))
        except (ValueError, BwmError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad value for {name}={raw[name]!r}: {exc}") from None
    # canonical spellings keep re-ingested configs identical
    if "dist" in parsed:
        raw["dist"] = parsed["dist"].to_text()
    return {k: str(raw[k]) for k in opts}, parsed


def config_block(command: str, raw: dict) -> list[str]:
    return [f"[{command}]"] + [f"{k} = {v}" for k, v in raw.items()]


# ---------------------------------------------------------------------------
# results
# ---------------------------------------------------------------------------


@dataclass
class Result:
    columns: list
    rows: list
    doc: dict
    ok: bool = True
    message: str = ""
    notes: str = ""


def _problem(cfg, n) -> BwmProblem:
    return BwmProblem(cfg["dist"], bn.BinomialParams(n, cfg["p"]), cfg["q"])


def cmd_expand(cfg) -> Result:
    prob = _problem(cfg, cfg["n"])
    grid = cfg["grid"]
    cdf = bwm_edgeworth_cdf(prob, grid)
    phi = normal_cdf(grid)
    rows = [[x, c, f] for x, c, f in zip(grid, cdf, phi)]
    polys = star_polynomials(prob.cumulants, prob.q, prob.p).describe()
    return Result(["x", "bwm_edgeworth_cdf", "normal_cdf"], rows, {"star_polynomials": polys, "rows": rows})


def cmd_mixture(cfg) -> Result:
    prob = _problem(cfg, cfg["n"])
    grid = cfg["grid"]
    edg = mixture_cdf(prob, grid, EDGEWORTH)
    try:
        orc = mixture_cdf(prob, grid, ORACLE)
    except NoClosedFormOracle:
        orc = np.full(grid.shape, np.nan)
    closed = bwm_edgeworth_cdf(prob, grid)
    rows = [[x, a, b, c] for x, a, b, c in zip(grid, edg, orc, closed)]
    cols = ["x", "mixture_edgeworth", "mixture_oracle", "bwm_edgeworth_cdf"]
    return Result(cols, rows, {"atom": atom_mass(prob.b), "columns": cols, "rows": rows})


def cmd_convergence(cfg) -> Result:
    prob = _problem(cfg, cfg["sizes"][0])
    rep = sweep_sup_error(prob, cfg["sizes"], cfg["reference"], cfg["grid"], cfg["workers"])
    target = -(prob.q - 1) / 2.0
    cols = ["n", "p", "q", "family", "supError", "scaledError", "fittedSlope"]
    rows = [[r[c] for c in cols[:-1]] + [rep.fitted_slope] for r in rep.table]
    ok, msg = True, ""
    if rep.fitted_slope is not None and abs(rep.fitted_slope - target) > cfg["slope_tol"]:
        ok = False
        msg = f"fitted slope {rep.fitted_slope:.4f} outside {target} +/- {cfg['slope_tol']}"
    return Result(cols, rows, json.loads(rep.to_json()), ok, msg)


def cmd_inverse_moment(cfg) -> Result:
    p, K, sizes = cfg["p"], cfg["K"], cfg["sizes"]
    cols = ["alpha", "p", "K", "n", "f_alpha", "truncation", "residual", "scaled_residual", "fitted_slope"]
    rows, tables, failures = [], [], []
    for alpha in cfg["alpha"]:
        table = bn.inverse_moment_coefficients(alpha, K, p)
        tables.append({"alpha": alpha, "p": p, "C": list(table.C)})
        block = []
        for n in sizes:
            f = bn.inverse_moment(bn.BinomialParams(n, p), alpha)
            tr = table.truncation(n)
            res = f - tr
            block.append([alpha, p, K, n, f, tr, res, abs(res) * (n * p) ** (alpha + K)])
        resid = [abs(r[6]) for r in block]
        slope = fit_loglog_slope(sizes, resid) if len(sizes) >= 2 and min(resid) > 0 else float("nan")
        scaled = [r[7] for r in block]
        if not (abs(slope + alpha + K) <= 0.2 and max(scaled) <= 2.0 * min(scaled)):
            failures.append(f"alpha={alpha}: slope {slope:.3f} (target {-(alpha + K)}), "
                            f"scaled residual ratio {max(scaled) / min(scaled):.3f}")
        rows += [r + [slope] for r in block]
    doc = {"coefficients": tables, "columns": cols, "rows": rows}
    return Result(cols, rows, doc, not failures, "; ".join(failures))


def _atoms_list(text):
    return [cr.parse_atom(t) for t in text.split(",") if t.strip()]


def _probs(text):
    return [float(Fraction(t)) for t in text.split(",")] if text.strip() else None


def _lattice_targets(cfg):
    kind = cfg["kind"]
    if kind == "examples":
        expo = make_distribution("exponential", rate=1.0)
        return [
            ("bernoulli {0,1}", cr.Atoms1D((0, 1))),
            ("uniform {e,3,pi}", cr.Atoms1D((cr.E, 3, cr.PI))),
            ("boolean hypercube {0,1}^2", cr.AtomsND(((0, 0), (0, 1), (1, 0), (1, 1)))),
            ("(W, 4W), W standard normal", cr.LinearImage((1, 4), None)),
            ("(YT, T), Y exponential, T Bernoulli(0.3)", cr.BernoulliGated(expo, 0.3)),
        ]
    probs = _probs(cfg["probs"])
    if kind == "atoms":
        return [(f"atoms {cfg['atoms']}", cr.Atoms1D(tuple(_atoms_list(cfg["atoms"])), probs))]
    if kind == "vectors":
        vecs = tuple(tuple(_atoms_list(v)) for v in cfg["vectors"].split(";") if v.strip())
        return [(f"vectors {cfg['vectors']}", cr.AtomsND(vecs, probs))]
    base = parse_distribution(cfg["base"]) if cfg["base"] else None
    if kind == "linear":
        coeffs = tuple(Fraction(c) for c in cfg["coeffs"].split(","))
        return [(f"linear image {cfg['coeffs']}", cr.LinearImage(coeffs, base))]
    if base is None:
        raise ConfigError("gated support needs base=<distribution>")
    return [(f"(YT, T) gate p={cfg['gate_p']}", cr.BernoulliGated(base, cfg["gate_p"]))]


def cmd_lattice_check(cfg) -> Result:
    cols = ["name", "verdict", "direction", "offset", "span", "max_tail_modulus",
            "period_confirmed", "semilattice_certified"]
    rows, entries, certs, ok, msgs = [], [], [], True, []
    for name, spec in _lattice_targets(cfg):
        v = cr.semilattice_search(spec)
        entry = {"name": name, **v.to_dict()}
        scan = None
        direction = v.direction if v.direction is not None else (1,)
        if v.verdict in (cr.LATTICE, cr.SEMI_LATTICE):
            try:
                scan = cr.cramer_scan(spec, direction, cfg["r_max"], cfg["step"], v.span or None)
            except cr.UnsupportedFamily as exc:
                entry["scan_skipped"] = str(exc)
        if scan is not None:
            entry["scan"] = scan.to_dict()
            if scan.period_confirmed is False:
                ok = False
                msgs.append(f"{name}: period 2pi/delta not confirmed")
        rows.append([
            name, v.verdict, " ".join(f"{float(c):g}" for c in v.direction) if v.direction else "",
            v.offset, v.span,
            scan.max_tail_modulus if scan else "", scan.period_confirmed if scan else "",
            scan.semilattice_certified if scan else "",
        ])
        entries.append(entry)
        certs.append(f"== {name}\n{v.certificate()}")
    return Result(cols, rows, {"verdicts": entries}, ok, "; ".join(msgs), "\n".join(certs))


def cmd_mc(cfg) -> Result:
    prob = _problem(cfg, cfg["n"])
    sim = SimConfig(prob, cfg["reps"], cfg["seed"], cfg["streams"])
    z = sample_z(sim)
    if cfg["samples_out"]:
        _write_samples(cfg["samples_out"], z)
    grid = cfg["grid"]
    try:
        ref, ref_kind = mixture_cdf(prob, grid, ORACLE), "mixture_oracle"
    except NoClosedFormOracle:
        ref, ref_kind = mixture_cdf(prob, grid, EDGEWORTH), "mixture_edgeworth"
    cmp = compare_with_cdf(z, grid, ref, atom_mass(prob.b), cfg["confidence"])
    ecdf = empirical_cdf(z)(grid)
    eps = cmp.epsilon
    rows = [[x, e, r, e - eps, e + eps, abs(e - r) <= eps] for x, e, r in zip(grid, ecdf, ref)]
    cols = ["x", "ecdf", ref_kind, "lower", "upper", "inside"]
    doc = {
        "reference": ref_kind,
        "epsilon": eps,
        "max_deviation": cmp.max_deviation,
        "argmax": cmp.argmax,
        "inside_band": cmp.inside,
        "zero_fraction": cmp.zero_fraction,
        "zero_expected": cmp.zero_expected,
        "zero_z_score": cmp.zero_z_score,
        "columns": cols,
        "rows": rows,
    }
    ok = cmp.inside and abs(cmp.zero_z_score) <= 5.0
    msg = "" if ok else (
        f"max |ecdf - reference| = {cmp.max_deviation:.3g} vs band {eps:.3g}; "
        f"zero-atom z = {cmp.zero_z_score:.3g}"
    )
    return Result(cols, rows, doc, ok, msg)


def cmd_identities(cfg) -> Result:
    cols = ["check", "n", "p", "param", "lhs", "rhs", "ok"]
    rows = []
    for n in cfg["n_list"]:
        for p in cfg["p_list"]:
            b = bn.BinomialParams(n, p)
            for a in cfg["alpha_list"]:
                lhs, rhs = bn.bernoulli_sum(b, a), bn.bound_o_rhs(b, a)
                rows.append(["bernoulli_sum_identity", n, p, a, lhs, rhs,
                             abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))])
    for n in cfg["kl_n_list"]:
        for p in cfg["kl_p_list"]:
            for frac in (0.25, 0.5, 0.75):
                tail, bound = bn.kl_tail_bound(bn.BinomialParams(n, p), frac * p)
                rows.append(["kl_tail_bound", n, p, frac * p, tail, bound, tail <= bound])
    bad = [r for r in rows if not r[-1]]
    msg = f"{len(bad)} identity/bound checks failed, first: {bad[0]}" if bad else ""
    return Result(cols, rows, {"columns": cols, "rows": rows}, not bad, msg)


HANDLERS = {
    "expand": cmd_expand,
    "mixture": cmd_mixture,
    "convergence": cmd_convergence,
    "inverse-moment": cmd_inverse_moment,
    "lattice-check": cmd_lattice_check,
    "mc": cmd_mc,
    "identities": cmd_identities,
}


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return v


def render(command: str, raw: dict, result: Result, fmt: str, timestamp: str) -> str:
    if fmt == "json":
        doc = {
            "schema_version": SCHEMA_VERSION,
            "generated_at": timestamp,
            "command": command,
            "config": raw,
            "result": _jsonable(result.doc),
        }
        return json.dumps(doc, indent=1) + "\n"
    buf = io.StringIO()
    buf.write(f"# {HEADER_TAG} schema_version={SCHEMA_VERSION}\n")
    buf.write(f"# generated_at={timestamp}\n")
    for line in config_block(command, raw):
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(result.columns)
    for row in result.rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _out_path(path: str) -> Path:
    p = Path(path)
    base = os.environ.get("BWM_OUTPUT_DIR")
    return Path(base) / p if base and not p.is_absolute() else p


def _write_samples(path: str, z: np.ndarray):
    p = _out_path(path)
    if p.suffix == ".npy":
        np.save(p, z)
    else:
        p.write_text("z\n" + "\n".join(repr(float(v)) for v in z) + "\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bwm-edgeworth",
        description="Edgeworth expansions for the Bernoulli weighted mean.",
        epilog="exit codes: 0 ok, 2 config error, 3 I/O error, 4 domain error, 5 check failed",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, opts in COMMANDS.items():
        sp = sub.add_parser(name, help=HANDLERS[name].__name__.replace("cmd_", ""))
        sp.add_argument("--config", help="INI config file or a previous output file")
        sp.add_argument("--out", help="output path (default stdout)")
        sp.add_argument("--emit-config", help="write the resolved config to this path")
        for o in opts:
            sp.add_argument(f"--{o.name.replace('_', '-')}", dest=o.name, default=None,
                            help=f"{o.help} (default: {o.default})")
    return parser


def _glue_negative_values(argv):
    # argparse reads "--grid -1:1:0.5" as two flags; rewrite it as "--grid=-1:1:0.5"
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if (tok.startswith("--") and "=" not in tok and nxt is not None
                and len(nxt) > 1 and nxt[0] == "-" and (nxt[1].isdigit() or nxt[1] == ".")):
            out.append(f"{tok}={nxt}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    argv = _glue_negative_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    command = args.command
    flags = {o.name: getattr(args, o.name) for o in COMMANDS[command]}
    try:
        file_values = load_config_file(args.config, command) if args.config else {}
        raw, cfg = resolve_config(command, file_values, flags)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        if args.emit_config:
            _out_path(args.emit_config).write_text("\n".join(config_block(command, raw)) + "\n")
        result = HANDLERS[command](cfg)
        timestamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
        text = render(command, raw, result, cfg["format"], timestamp)
        if args.out:
            _out_path(args.out).write_text(text)
            if result.notes:
                print(result.notes, file=stdout)
        else:
            stdout.write(text)
            if result.notes:
                print(result.notes, file=sys.stderr)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except BwmError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    if not result.ok:
        print(f"check failed: {result.message}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
