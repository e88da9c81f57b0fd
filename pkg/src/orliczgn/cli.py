"""Command-line campaign runner.

Every subcommand writes ``<out>/<name>.csv`` (one row per checked item, with a
``# generated`` timestamp line above the header) and ``<out>/<name>.json`` (a
deterministic summary carrying ``"schema": 1``).  Exit status is 0 when all
assertions pass, 1 when a row fails (the row is printed to stderr) and 2 for
configuration errors.
"""

import argparse
import csv
import datetime as _dt
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, is_dataclass

import numpy as np

from . import config as cfgmod
from . import corpus as corpusmod
from . import gn, hardy, measure, nfunc, triple
from .errors import (AssertionFailure, BadParams, ConfigError, NotEligible, NotNFunctions,
                     OrliczError)

SCHEMA_VERSION = 1
SUBCOMMANDS = ("conjugate", "indices", "triple", "muckenhoupt", "hardy", "gn", "sweep")
DISTANCE_NOTE = ("distance weight: the campaign runs with a < q-1, the range in which the "
                 "one-dimensional weighted Hardy inequality for delta^a holds; the stated "
                 "theorem hypothesis reads a > q-1 and the two conditions disagree")


class Report:
    """Rows plus a JSON summary for one subcommand."""

    def __init__(self, name, cfg):
        self.name = name
        self.cfg = cfg
        self.tables = {}        # file stem -> (header, rows)
        self.summary = {}
        self.notes = []
        self.failures = []

    def table(self, stem, header, rows):
        self.tables[stem] = (list(header), [list(r) for r in rows])

    def fail(self, message, row):
        self.failures.append({"message": message, "row": row})

    @property
    def passed(self):
        return not self.failures

    def payload(self):
        conf = self.cfg.to_dict()
        conf.pop("output", None)
        rows = []
        if self.name in self.tables:
            header, body = self.tables[self.name]
            rows = [dict(zip(header, r)) for r in body]
        return _clean({
            "schema": SCHEMA_VERSION,
            "subcommand": self.name,
            "config": conf,
            "summary": self.summary,
            "rows": rows,
            "notes": list(self.notes),
            "failures": self.failures,
            "passed": self.passed,
        })


def _clean(obj):
    """JSON-safe copy: tuples become lists, non-finite floats become strings."""
    if is_dataclass(obj):
        obj = asdict(obj)
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def _cell(v):
    v = _clean(v)
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def csv_text(header, rows, timestamp):
    buf = io.StringIO()
    buf.write(f"# generated {timestamp}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def json_text(payload):
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def write_report(rep, out_dir, timestamp=None):
    os.makedirs(out_dir, exist_ok=True)
    stamp = timestamp or _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    paths = []
    for stem, (header, rows) in rep.tables.items():
        path = os.path.join(out_dir, f"{stem}.csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(csv_text(header, rows, stamp))
        paths.append(path)
    path = os.path.join(out_dir, f"{rep.name}.json")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json_text(rep.payload()))
    paths.append(path)
    return paths


def schema():
    here = os.path.dirname(os.path.abspath(__file__))
    with open(os.path.join(here, "report_schema.json"), encoding="utf-8") as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# Builders from configuration
# ---------------------------------------------------------------------------

def build_nfunction(cfg):
    return nfunc.from_spec(cfg.nfunction)


def build_measure(cfg):
    return measure.from_spec(cfg.measure)


def build_triple(cfg):
    m = build_nfunction(cfg)
    if cfg.triple == "identity":
        return triple.identity_triple(m)
    if cfg.triple == "mf":
        f = nfunc.from_spec(cfg.triple_f)
        c = None if cfg.triple_c in ("", "auto") else _positive(cfg.triple_c, "triple.c")
        return triple.build_mf_triple(m, f, c, seed=cfg.seed)
    return triple.explicit_triple(m, nfunc.from_spec(cfg.triple_p), nfunc.from_spec(cfg.triple_q))


def _positive(text, key):
    try:
        v = float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number or 'auto', got {text!r}") from None
    if not v > 0:
        raise ConfigError(f"{key} must be positive")
    return v


def build_corpus(cfg, mu):
    return corpusmod.default_corpus(mu.domain, strict=(cfg.corpus == "strict"))


def _notes_for(mu):
    return [DISTANCE_NOTE] if mu.family == "distance" else []


def _check_distance(mu, hardy_fn):
    """Distance weights are only run with ``a < q - 1``, ``q`` the lower index of the Hardy function."""
    if mu.family != "distance":
        return
    q = nfunc.simonenko_indices(hardy_fn).lower
    if not mu.params["a"] < q - 1.0:
        raise ConfigError(f"distance weight needs a < q-1 = {q - 1.0:.6g}, got a={mu.params['a']:.6g}")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_conjugate(cfg, jobs):
    """Tabulate ``M*`` numerically and compare with the closed form when there is one."""
    rep = Report("conjugate", cfg)
    m = build_nfunction(cfg)
    y = np.logspace(-2, 2, 41)
    numeric = nfunc.conjugate(m, use_analytic=False)
    num = np.asarray(numeric.value(y), dtype=float)
    exact = None
    if m.analytic_conjugate is not None:
        exact = np.asarray(m.analytic_conjugate.value(y), dtype=float)
    x = np.logspace(-2, 2, 41)
    gap = nfunc.young_gap(m, x, y, numeric)
    rows = []
    tol = 1e-6
    for i in range(y.shape[0]):
        e = float(exact[i]) if exact is not None else math.nan
        rel = abs(num[i] - e) / e if exact is not None and e > 0 else math.nan
        row = [float(y[i]), float(num[i]), e, rel, float(gap[i])]
        rows.append(row)
        if exact is not None and rel > tol:
            rep.fail(f"numeric conjugate off by {rel:.3g} at y={y[i]:.6g}", row)
        if gap[i] < -1e-9 * max(1.0, float(x[i] * y[i])):
            rep.fail(f"Young inequality fails at x=y={y[i]:.6g}", row)
    rep.table("conjugate", ["y", "conjugate_numeric", "conjugate_exact", "rel_error", "young_gap"],
              rows)
    rep.summary = {"nfunction": m.label, "has_closed_form": exact is not None,
                   "max_rel_error": float(np.nanmax([r[3] for r in rows])) if exact is not None
                   else None}
    return rep


def cmd_indices(cfg, jobs):
    """Simonenko indices and the Delta_2 constant."""
    rep = Report("indices", cfg)
    m = build_nfunction(cfg)
    idx = nfunc.simonenko_indices(m)
    d2 = nfunc.delta2_constant(m)
    cond = nfunc.check_conditions(m)
    row = [m.label, idx.lower, idx.upper, d2.constant, d2.holds, idx.lower_gt_one,
           idx.upper_unbounded, cond.ratio_over_square_nondecreasing]
    rep.table("indices", ["nfunction", "d", "D", "delta2_constant", "delta2_holds",
                          "d_gt_one", "D_unbounded", "ratio_over_square_nondecreasing"], [row])
    rep.summary = {"d": idx.lower, "D": idx.upper, "delta2_constant": d2.constant,
                   "condition_m": cond.condition_m}
    if not idx.lower <= idx.upper * (1 + 1e-12):
        rep.fail("lower index exceeds upper index", row)
    return rep


def cmd_triple(cfg, jobs):
    """Build the configured Young triple and check it on random samples."""
    rep = Report("triple", cfg)
    t = build_triple(cfg)
    v = triple.validate_Y(t, samples=cfg.samples, seed=cfg.seed)
    pq = triple.pq_are_nfunctions(t)
    row = [t.label, t.provenance, t.c, v.samples, v.violations, v.max_violation,
           v.worst[0], v.worst[1], v.worst[2], pq]
    rep.table("triple", ["triple", "provenance", "c", "samples", "violations", "max_violation",
                         "u", "v", "w", "pq_nfunctions"], [row])
    rep.summary = {"triple": t.to_dict(), "violations": v.violations,
                   "max_violation": v.max_violation}
    if not v.ok:
        rep.fail(f"Young condition violated at {v.violations} of {v.samples} samples", row)
    return rep


def _rule_for(mu, p):
    if mu.family == "power_exponential":
        return hardy.muckenhoupt_rule(mu.params["alpha"], p)
    if mu.family == "power":
        return mu.params["alpha"] < p - 1.0
    return None


def _nu_for(mu):
    # power weights have phi' = -alpha/x, so the classical x^-p form is the meaningful one
    return "classical" if mu.family == "power" else "default"


def cmd_muckenhoupt(cfg, jobs):
    """Sup of the Muckenhoupt product with the r-curve for plotting."""
    rep = Report("muckenhoupt", cfg)
    mu = build_measure(cfg)
    r = hardy.muckenhoupt_check(mu, cfg.p, nu=_nu_for(mu), settings=cfg.quadrature)
    info = r.row()
    rule = _rule_for(mu, cfg.p)
    row = [mu.label, cfg.p, info["verdict"], r.sup_value, r.sup_location, r.a_tail_exponent,
           r.b_tail_exponent, r.grid_limited, r.reason,
           "" if rule is None else ("finite" if rule else "infinite")]
    rep.table("muckenhoupt", ["measure", "p", "verdict", "sup", "r_star", "a_tail_exponent",
                              "b_tail_exponent", "grid_limited", "reason", "expected"], [row])
    rep.table("muckenhoupt_curve", ["r", "product"], list(zip(r.r, r.product)))
    rep.summary = dict(info, measure=mu.label, p=cfg.p)
    rep.notes = _notes_for(mu)
    if r.grid_limited:
        rep.notes.append("verdict limited to the sampled radius range")
    if rule is not None and rule != r.finite:
        rep.fail(f"verdict {info['verdict']} disagrees with the analytic rule", row)
    return rep


def cmd_hardy(cfg, jobs):
    """Fit the Hardy constant(s) on the corpus; power weights also get classical ratios."""
    rep = Report("hardy", cfg)
    mu = build_measure(cfg)
    m = build_nfunction(cfg)
    _check_distance(mu, m)
    members = build_corpus(cfg, mu)
    with_rem = cfg.mode == "H1"
    fit = hardy.fit_hardy_constants(m, mu, members, cfg.a_dilation, with_remainder=with_rem,
                                    m=m, settings=cfg.quadrature, jobs=jobs)
    rows = []
    for h in fit.rows:
        ratio = h.lhs / h.rhs1 if h.rhs1 > 0 else math.inf
        rows.append([h.member, h.lhs, h.rhs1, h.rhs2, ratio])
    rep.table("hardy", ["member", "lhs", "rhs_gradient", "rhs_remainder", "ratio"], rows)
    rep.summary = {"k": fit.k, "k1": fit.k1, "k2": fit.k2, "a_dilation": fit.a_dilation,
                   "worst_function": fit.worst_function, "skipped": list(fit.skipped),
                   "mode": cfg.mode}
    if not math.isfinite(fit.k):
        rep.fail("fitted Hardy constant is not finite", None)
    if mu.family == "power":
        alpha = mu.params["alpha"]
        bound = hardy.classical_bound(cfg.p, alpha)
        ok_members = [tf for tf in members if tf.support[0] > 0.0]

        def one(tf):
            return tf.id, hardy.classical_hardy_ratio(tf, cfg.p, alpha)
        with ThreadPoolExecutor(max_workers=max(1, jobs)) as ex:
            ratios = list(ex.map(one, ok_members))
        crow = []
        for name, ratio in ratios:
            row = [name, cfg.p, alpha, ratio, bound, ratio <= bound * (1 + 1e-6)]
            crow.append(row)
            if not row[-1]:
                rep.fail(f"classical Hardy ratio exceeds {bound:.6g}", row)
        rep.table("hardy_classical", ["member", "p", "alpha", "ratio", "bound", "satisfied"], crow)
        rep.summary["classical_bound"] = bound
        rep.summary["classical_max_ratio"] = max((r[3] for r in crow), default=0.0)
    rep.notes = _notes_for(mu)
    return rep


def cmd_gn(cfg, jobs):
    """Full interpolation pipeline with a corrupted-ledger sensitivity run."""
    rep = Report("gn", cfg)
    mu = build_measure(cfg)
    t = build_triple(cfg)
    _check_distance(mu, t.p)
    members = build_corpus(cfg, mu)
    thetas = cfg.theta or None
    res = gn.run_gn(t, mu, members, mode=cfg.mode, thetas=thetas, a_dilation=cfg.a_dilation,
                    settings=cfg.quadrature, jobs=jobs, corrupt_factor=0.01)
    rows = []
    for r in res.modular.rows:
        row = [r.member, r.theta, r.analytic, r.lhs_modular, r.rhs_p_term, r.rhs_q_term,
               res.ledger.l * r.rhs_p_term + r.rhs_q_term, r.ratio, r.satisfied]
        rows.append(row)
        if not r.satisfied:
            rep.fail(f"modular inequality violated for {r.member} at theta={r.theta:.6g}", row)
    rep.table("gn", ["member", "theta", "analytic_theta", "lhs", "rhs_p_term", "rhs_q_term",
                     "rhs", "ratio", "satisfied"], rows)
    nrows = []
    for r in res.norms:
        row = [r.member, r.lhs_norm, r.n2, r.n0, r.rhs_product_term, r.rhs_linear_term, r.ratio,
               r.satisfied]
        nrows.append(row)
        if not r.satisfied:
            rep.fail(f"norm inequality violated for {r.member}", row)
    rep.table("gn_norms", ["member", "lhs_norm", "norm_u2", "norm_u", "rhs_product_term",
                           "rhs_linear_term", "ratio", "satisfied"], nrows)
    rep.table("gn_alpha", ["member", "i", "i1", "i2", "alpha"],
              [[a.member, a.i, a.i1, a.i2, a.alpha] for a in res.alpha.rows])
    rep.summary = {
        "ledger": res.ledger.to_dict(),
        "triple": t.to_dict(),
        "measure": mu.label,
        "hardy_worst_function": res.fit.worst_function,
        "alpha_worst_function": res.alpha.worst_function,
        "worst_ratio": res.modular.worst_ratio,
        "worst_member": res.modular.worst_member,
        "empirical_l": res.modular.empirical_l,
        "pq_nfunctions": res.pq_nfunctions,
        "corrupted_b_factor": 0.01,
        "corruption_detected": not res.corrupted.satisfied,
        "corrupted_violations": sum(1 for r in res.corrupted.rows if not r.satisfied),
    }
    rep.notes = _notes_for(mu)
    if not res.pq_nfunctions:
        rep.notes.append("P or Q is not an N-function: norm inequality skipped")
    return rep


def _sweep_point(args):
    alpha, beta, p, s = args
    mu = measure.power_exponential(alpha, beta)
    r = hardy.muckenhoupt_check(mu, p, settings=s)
    rule = hardy.muckenhoupt_rule(alpha, p)
    return [alpha, beta, p, "finite" if r.finite else "infinite",
            "finite" if rule else "infinite", r.finite == rule, r.sup_value, r.reason]


def cmd_sweep(cfg, jobs):
    """Muckenhoupt verdicts over the (alpha, beta, p) grid of power-exponential weights."""
    rep = Report("sweep", cfg)
    tasks = [(a, b, p, cfg.quadrature) for a in cfg.sweep_alpha for b in cfg.sweep_beta
             for p in cfg.sweep_p]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_sweep_point, tasks))
    else:
        rows = [_sweep_point(t) for t in tasks]
    for row in rows:
        if not row[5]:
            rep.fail("classifier disagrees with the analytic rule", row)
    rep.table("sweep", ["alpha", "beta", "p", "verdict", "expected", "agree", "sup", "reason"],
              rows)
    rep.summary = {"points": len(rows), "agreements": sum(1 for r in rows if r[5])}
    return rep


COMMANDS = {
    "conjugate": cmd_conjugate,
    "indices": cmd_indices,
    "triple": cmd_triple,
    "muckenhoupt": cmd_muckenhoupt,
    "hardy": cmd_hardy,
    "gn": cmd_gn,
    "sweep": cmd_sweep,
}


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="orliczgn", description=__doc__.splitlines()[0])
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", metavar="PATH", help="campaign configuration file")
    ap.add_argument("--out", metavar="DIR", help="report directory (default: [output] path)")
    ap.add_argument("--jobs", type=int, default=1, metavar="N", help="worker threads")
    ap.add_argument("--seed", type=int, metavar="N", help="override the configured seed")
    ap.add_argument("--tol", type=float, metavar="X", help="override the quadrature rel_tol")
    return ap


def run(subcommand, cfg, out_dir, jobs=1, timestamp=None):
    """Run one subcommand and write its reports; returns (exit status, report)."""
    rep = COMMANDS[subcommand](cfg, max(1, int(jobs)))
    write_report(rep, out_dir, timestamp)
    return (0 if rep.passed else 1), rep


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = cfgmod.load(args.config) if args.config else cfgmod.CampaignConfig()
        cfg = cfg.with_overrides(seed=args.seed, rel_tol=args.tol)
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        out_dir = args.out or cfg.output
        status, rep = run(args.subcommand, cfg, out_dir, args.jobs)
    except (ConfigError, BadParams, NotEligible, NotNFunctions) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AssertionFailure as exc:
        print(f"assertion failed: {exc}; row: {exc.row}", file=sys.stderr)
        return 1
    except OrliczError as exc:
        print(f"campaign could not be completed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if status:
        first = rep.failures[0]
        print(f"assertion failed: {first['message']}; row: {first['row']}", file=sys.stderr)
        print(f"{len(rep.failures)} failing row(s); see {out_dir}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
