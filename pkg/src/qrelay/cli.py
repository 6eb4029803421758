"""Command-line front end.

Every command writes CSV (to ``--out`` or stdout).  Each row starts with the
hash of the run manifest, so a row can always be traced back to the exact
inputs, seed and overrides that produced it.

Exit codes: 0 success, 2 validation failure, 3 infeasible optimization.
"""
from __future__ import annotations

import argparse
import csv
import functools
import hashlib
import io
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import bounds, channels, codesim, optimizer, qlin
from .errors import InfeasibleError, QRelayError, ValidationError

log = logging.getLogger("qrelay")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3

FIXTURE_PREFIX = "fixture:"


def fixture_names() -> list:
    root = resources.files("qrelay") / "fixtures"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def read_text(path: str) -> str:
    """Read a file, resolving ``fixture:<name>`` to a bundled JSON document."""
    if path.startswith(FIXTURE_PREFIX):
        name = path[len(FIXTURE_PREFIX):].removesuffix(".json")
        res = resources.files("qrelay") / "fixtures" / f"{name}.json"
        if not res.is_file():
            raise ValidationError(f"no bundled fixture {name!r}; available: {fixture_names()}",
                                  invariant="input")
        return res.read_text()
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}", invariant="input") from None


def load_json(path: str) -> dict:
    try:
        return json.loads(read_text(path))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})", invariant="format") from None


@dataclass
class RunManifest:
    """Everything that determines a run's output.  The output path is excluded from the hash."""

    command: str
    inputs: dict = field(default_factory=dict)
    seed: int = 0
    out: str | None = None
    overrides: dict = field(default_factory=dict)

    def canonical(self) -> str:
        doc = asdict(self)
        doc.pop("out")
        doc["input_sha256"] = {k: hashlib.sha256(read_text(v).encode()).hexdigest()
                               for k, v in sorted(self.inputs.items()) if v}
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "yes" if v else "no"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


def write_csv(manifest: RunManifest, rows: list, columns: list) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["manifest"] + columns)
    tag = manifest.digest
    for row in rows:
        w.writerow([tag] + [_fmt(row.get(c, "")) for c in columns])
    if manifest.out:
        Path(manifest.out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def parse_cards(text: str | None) -> dict:
    """``"U=2,X0=4"`` → ``{"card_U": 2, "card_X0": 4}``; G registers map to ``dim_G*``."""
    out = {}
    for item in filter(None, (text or "").split(",")):
        key, _, val = item.partition("=")
        key = key.strip()
        try:
            n = int(val)
        except ValueError:
            raise ValidationError(f"bad --cards entry {item!r}", invariant="input") from None
        out[("dim_" if key.startswith("G") else "card_") + key] = n
    return out


def parse_grid(text: str) -> list:
    vals = [float(v) for v in text.split(",") if v.strip()]
    if not vals:
        raise ValidationError("grid is empty", invariant="input")
    if any(not 0.0 <= v <= 1.0 for v in vals):
        raise ValidationError(f"grid values must lie in [0, 1]: {vals}", invariant="input")
    return vals


def _channel_overrides(args) -> dict:
    return {k: getattr(args, k) for k in ("p", "q", "flip") if getattr(args, k, None) is not None}


def load_channel(args) -> tuple:
    if not args.channel:
        raise ValidationError("--channel is required", invariant="input")
    doc = load_json(args.channel)
    ov = _channel_overrides(args)
    return channels.relay_from_json(doc, ov), {**doc, **ov}


def load_config(args, channel_doc: dict) -> tuple:
    doc = load_json(args.config)
    if doc.get("template") == "depolarizing_mf" and doc.get("q") is None:
        doc["q"] = channel_doc.get("q")
    return bounds.config_from_json(doc)


def _optimizer_config(args, restarts_default: int = 8) -> optimizer.OptimizerConfig:
    return optimizer.OptimizerConfig(
        restarts=args.restarts if args.restarts is not None else restarts_default,
        max_evals=args.max_evals, seed=args.seed, penalty_weight=args.penalty,
        tolerance=args.tol, workers=args.workers)


# -- commands --------------------------------------------------------------------


def cmd_eval(args) -> int:
    manifest = RunManifest("eval", {"channel": args.channel, "config": args.config}, args.seed,
                           args.out, _channel_overrides(args))
    ch, chdoc = load_channel(args)
    kind, cfg = load_config(args, chdoc)
    if args.bound:
        kind = args.bound
    rec = bounds.evaluate(kind, ch, cfg)
    row = {"bound": kind, "rate": rec} if isinstance(rec, float) else {"bound": kind, **rec.as_row()}
    write_csv(manifest, [row], list(row))
    return EXIT_OK


def cmd_sweep(args) -> int:
    ps, qs = parse_grid(args.p_grid), parse_grid(args.q_grid)
    manifest = RunManifest("sweep", {}, args.seed, args.out,
                           {"p_grid": ps, "q_grid": qs, "optimize": not args.no_optimize,
                            "restarts": args.restarts, "max_evals": args.max_evals})
    povm = qlin.computational_povm([("E", 2)])
    cfg = _optimizer_config(args, restarts_default=4)
    rows = []
    for p in ps:
        for q in qs:
            ch = channels.make_depolarizing_relay(p, q)
            rec = bounds.eval_mf(ch, bounds.depolarizing_mf_config(q))
            row = {"p": p, "q": q, "closed_form": bounds.eval_depolarizing_closed_form(p, q),
                   "mf_reference": rec.rate, "lhs": rec.lhs_constraint,
                   "rhs": rec.rhs_constraint, "optimizer_best": ""}
            if not args.no_optimize:
                space = optimizer.ParamSpace("mf", ch, fixed_povm=povm)
                res = optimizer.maximize(functools.partial(bounds.eval_mf, ch), space, cfg)
                row["optimizer_best"] = res.best_rate
            rows.append(row)
    write_csv(manifest, rows, ["p", "q", "closed_form", "mf_reference", "lhs", "rhs",
                               "optimizer_best"])
    return EXIT_OK


def cmd_classify(args) -> int:
    manifest = RunManifest("classify", {"channel": args.channel}, args.seed, args.out,
                           _channel_overrides(args))
    ch, _ = load_channel(args)
    deg = channels.is_degraded(ch)
    rows = [{"property": "degraded", "value": deg.degraded, "residual": deg.residual}]
    if ch.has_split:
        orc = channels.is_orc(ch)
        rows.append({"property": "orc", "value": orc.orc, "residual": orc.distance})
    else:
        rows.append({"property": "orc", "value": "not testable", "residual": ""})
    rows.append({"property": "hadamard", "value": channels.is_hadamard(ch), "residual": ""})
    rows.append({"property": "classical_quantum", "value": channels.is_classical_quantum(ch),
                 "residual": ""})
    write_csv(manifest, rows, ["property", "value", "residual"])
    return EXIT_OK


def _random_gentle_pair(rng: np.random.Generator, dim: int, min_success: float) -> tuple:
    while True:
        g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        rho = g @ g.conj().T
        rho /= np.trace(rho).real
        h = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        vals, vecs = np.linalg.eigh(h + h.conj().T)
        lam = (vecs * rng.uniform(0, 1, size=dim)) @ vecs.conj().T
        if np.trace(lam @ rho).real >= min_success:
            return rho, lam


def gentle_pairs(count: int, dim: int, min_success: float, seed: int) -> list:
    """Seeded random (ρ, Λ) pairs with tr(Λρ) ≥ ``min_success``."""
    rng = np.random.default_rng(seed)
    return [_random_gentle_pair(rng, dim, min_success) for _ in range(count)]


def cmd_simulate(args) -> int:
    doc = load_json(args.config)
    overrides = {k: v for k, v in (("trials", args.trials), ("n", args.n), ("delta", args.delta),
                                   ("rate_fractions", args.rate_fractions))
                 if v is not None}
    manifest = RunManifest("simulate", {"config": args.config}, args.seed, args.out, overrides)
    kind = doc.get("kind")
    if kind == "gentle":
        pairs = gentle_pairs(int(overrides.get("trials", doc.get("pairs", 200))),
                             int(doc.get("dim", 2)), float(doc.get("min_success", 0.5)), args.seed)
        rows = []
        for i, (rho, lam) in enumerate(pairs):
            r = codesim.gentle_measurement_check(rho, lam)
            rows.append({"pair": i, "success_prob": r.success_prob, "delta": r.delta,
                         "trace_distance": r.trace_distance, "bound": r.bound, "holds": r.holds})
        write_csv(manifest, rows, ["pair", "success_prob", "delta", "trace_distance", "bound",
                                   "holds"])
        return EXIT_OK
    if kind != "packing":
        raise ValidationError(f"unknown simulation kind {kind!r}", invariant="format")
    table = [qlin.state_from_json(s) for s in doc["table"]]
    p = doc["p"]
    ns = overrides.get("n", doc.get("n", [3, 6]))
    ns = [int(v) for v in (ns if isinstance(ns, list) else [ns])]
    delta = float(overrides.get("delta", doc.get("delta", 1.0)))
    trials = int(overrides.get("trials", doc.get("trials", 50)))
    chi = codesim.holevo_of_table(p, table)
    if "rate_fractions" in overrides or "rate_fractions" in doc:
        rates = [(f"{f}*chi", f * chi) for f in overrides.get("rate_fractions",
                                                              doc.get("rate_fractions"))]
    else:
        rates = [(str(r), float(r)) for r in doc["rates"]]
    rows = []
    for label, rate in rates:
        for n in ns:
            res = codesim.simulate_direct_code(table, p, rate, n, delta, trials, args.seed)
            for r in res.rows():
                rows.append({"rate_label": label, "holevo": chi, **r,
                             "mean_error": res.mean_error})
    write_csv(manifest, rows, ["rate_label", "R", "holevo", "n", "M", "delta", "seed", "trial",
                               "error", "degenerate", "mean_error", "eps", "h", "H", "bound"])
    return EXIT_OK


def cmd_optimize(args) -> int:
    manifest = RunManifest("optimize", {"channel": args.channel}, args.seed, args.out,
                           {**_channel_overrides(args), "bound": args.bound,
                            "cards": args.cards, "restarts": args.restarts,
                            "max_evals": args.max_evals, "fixed_povm": args.fixed_povm,
                            "penalty": args.penalty, "tol": args.tol,
                            "state_kind": args.state_kind})
    ch, _ = load_channel(args)
    povm = None
    if args.fixed_povm:
        povm = qlin.computational_povm([ch.out_label(ch.relay_out)])
    space = optimizer.ParamSpace(args.bound, ch, state_kind=args.state_kind, fixed_povm=povm,
                                 **parse_cards(args.cards))
    fn = {"pdf": bounds.eval_pdf, "full_df": bounds.eval_full_df,
          "hadamard": bounds.eval_hadamard_capacity, "mf": bounds.eval_mf,
          "af": bounds.eval_af}[args.bound]
    res = optimizer.maximize(functools.partial(fn, ch), space, _optimizer_config(args))
    rows = [{"restart": t.index, "rate": t.best_rate, "evals": t.n_evals} for t in res.trace]
    rows.append({"restart": "best", "rate": res.best_rate,
                 "evals": sum(t.n_evals for t in res.trace),
                 "terms": json.dumps({k: round(float(v), 12) if isinstance(v, float) else v
                                      for k, v in res.best_record.as_row().items()},
                                     sort_keys=True)})
    write_csv(manifest, rows, ["restart", "rate", "evals", "terms"])
    return EXIT_OK


# -- argument parsing ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--channel", help="channel spec JSON, or fixture:<name>")
    common.add_argument("--config", help="bound or simulation config JSON, or fixture:<name>")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="CSV output path (default: stdout)")
    common.add_argument("--tol", type=float, default=1e-10, help="optimizer function tolerance")
    common.add_argument("--restarts", type=int)
    common.add_argument("--max-evals", type=int, default=4000)
    common.add_argument("--penalty", type=float, default=10.0)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--p", type=float, help="override p of a templated channel")
    common.add_argument("--q", type=float, help="override q of a templated channel")
    common.add_argument("--flip", type=float, help="override flip of a templated channel")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="qrelay", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", parents=[common], help="evaluate one bound configuration")
    p.add_argument("--bound", choices=bounds.BOUND_KINDS, help="override the config's bound")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", parents=[common], help="depolarizing relay over a (p, q) grid")
    p.add_argument("--p-grid", default="0,0.1,0.2,0.3,0.4,0.5")
    p.add_argument("--q-grid", default="0,0.2,0.4,0.6,0.8,1.0")
    p.add_argument("--no-optimize", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("classify", parents=[common], help="structural channel classes")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("simulate", parents=[common], help="packing or gentle-measurement runs")
    p.add_argument("--trials", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--rate-fractions", type=lambda s: [float(v) for v in s.split(",")])
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("optimize", parents=[common], help="maximize a bound over its inputs")
    p.add_argument("--bound", choices=optimizer.BOUNDS, required=True)
    p.add_argument("--cards", help="alphabet sizes, e.g. U=2,X0=2,X1=2")
    p.add_argument("--fixed-povm", action="store_true",
                   help="fix the relay measurement to the computational basis")
    p.add_argument("--state-kind", choices=("pure", "mixed"), default="pure")
    p.set_defaults(func=cmd_optimize)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ValidationError, QRelayError, ValueError) as exc:
        invariant = getattr(exc, "invariant", None)
        residual = getattr(exc, "residual", None)
        msg = f"validation failed: {exc}"
        if invariant:
            msg += f" [invariant={invariant}]"
        if residual is not None:
            msg += f" [residual={residual:.6g}]"
        print(msg, file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
