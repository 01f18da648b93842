"""Command-line front end.

Exit status: 0 when every check passes, 1 when a verification fails, 2 on usage or
configuration errors.
"""

import argparse
import json
import sys
from fractions import Fraction

from .diffpoly import TruncationPolicy
from .drtype import build_hierarchy, verify_dr_type
from .errors import (
    CapExceededError, DrlabError, NotDrTypeError, ParseError, StringObstructionError, WeightResonanceError,
)
from .models import MODELS, genus1_correction, get_model, model_from_json
from .standardform import compare_dz_standard
from .tau import dr_correlators, tau_densities, tau_symmetry_check
from . import trees as _trees

COMMANDS = ("recurse", "verify", "tau-check", "correlators", "standard-compare", "trees", "genus1")


class UsageError(Exception):
    pass


def _fractions(text):
    try:
        return tuple(Fraction(x) for x in str(text).split(",") if x.strip())
    except ValueError as exc:
        raise UsageError(f"bad parameter list {text!r}") from exc


def _positive(name, value, allow_zero=False):
    if value is None:
        return None
    value = int(value)
    if value < 0 or (value == 0 and not allow_zero):
        raise UsageError(f"{name} must be {'non-negative' if allow_zero else 'positive'}, got {value}")
    return value


def _load_model(cfg):
    policy = TruncationPolicy(cfg["genusCap"]) if cfg.get("genusCap") is not None else None
    ref = cfg.get("model") or "trivial"
    if isinstance(ref, dict):
        return model_from_json(ref, policy)
    return get_model(ref, policy)


def _mode(cfg):
    mode = cfg.get("mode", "quantum")
    if mode not in ("quantum", "classical"):
        raise UsageError(f"mode must be quantum or classical, got {mode!r}")
    return mode


# each runner returns (passed, json-able dict, text)

def run_recurse(cfg):
    m = _load_model(cfg)
    mode = _mode(cfg)
    try:
        table = build_hierarchy(m.seed_for(mode=mode), m.eta, cfg.get("pMax", 2), m.policy, mode)
    except (NotDrTypeError, WeightResonanceError, StringObstructionError) as exc:
        witness = getattr(exc, "witness", None) or getattr(exc, "monomials", None)
        data = {"model": m.name, "passed": False, "error": str(exc), "witness": _stringify(witness)}
        return False, data, f"FAIL {exc}\nwitness: {_stringify(witness)}"
    data = {"model": m.name, "passed": True, **table.to_json()}
    text = "\n".join(f"G[{d['alpha']},{d['p']}] = {d['density']}" for d in data["densities"])
    return True, data, text


def _stringify(w):
    if w is None:
        return None
    if isinstance(w, dict):
        return {str(k): str(v) for k, v in w.items()}
    if isinstance(w, (list, tuple)):
        return [str(x) for x in w]
    return str(w)


def run_verify(cfg):
    m = _load_model(cfg)
    mode = _mode(cfg)
    report = verify_dr_type(m.seed_for(mode=mode), m.eta, cfg.get("pMax", 2), m.policy, mode)
    data = {"model": m.name, **report.to_json()}
    return report.passed, data, f"model {m.name}\n" + report.to_text()


def run_tau_check(cfg):
    m = _load_model(cfg)
    mode = _mode(cfg)
    p_max = cfg.get("pMax", 2)
    try:
        table = build_hierarchy(m.seed_for(mode=mode), m.eta, p_max + 1, m.policy, mode)
        report = tau_symmetry_check(tau_densities(table), p_max)
    except DrlabError as exc:
        return False, {"model": m.name, "passed": False, "error": str(exc)}, f"FAIL {exc}"
    return report.passed, {"model": m.name, **report.to_json()}, f"model {m.name}\n" + report.to_text()


def run_correlators(cfg):
    m = _load_model(cfg)
    table = dr_correlators(m, cfg.get("gMax", 2), cfg.get("tDegMax", 4), cfg.get("dSumMax"))
    lines = [f"<{' '.join(f'tau_{d}(e{a})' for a, d in ins)}>_{g} = {v}"
             for (g, ins), v in sorted(table.entries.items())]
    lines += [f"[{'PASS' if c.status else 'FAIL'}] {c.name}" + (f"  witness: {c.witness}" if c.witness else "")
              for c in table.checks]
    data = {"model": m.name, "passed": table.passed, "entries": table.to_json(),
            "checks": [c.to_json() for c in table.checks]}
    return table.passed, data, "\n".join(lines)


def run_standard_compare(cfg):
    try:
        report = compare_dz_standard(_fractions(cfg.get("s", "")), cfg.get("gMax", 3))
    except DrlabError as exc:
        raise UsageError(str(exc)) from exc
    return report.passed, report.to_json(), report.to_text()


def run_trees(cfg):
    g, n, m = cfg.get("genus", 0), cfg.get("n", 3), cfg.get("m", 2)
    if 2 * g - 2 + n + 1 <= 0:
        raise UsageError("need 2g - 2 + (n + 1) > 0")
    found = _trees.enumerate_trees(g, n, m, admissible=cfg.get("admissible", False))
    rows, ok = [], True
    for t in found:
        row = {"tree": t.to_json(), "C": str(_trees.coefficient_C(t))}
        if n >= 1:
            row["identity"] = _trees.coefficient_identity_check(t)
            ok = ok and row["identity"]
        rows.append(row)
    total = sum((_trees.coefficient_C(t) for t in found), Fraction(0))
    data = {"g": g, "n": n, "m": m, "count": len(found), "sumC": str(total), "passed": ok, "trees": rows}
    lines = [f"{json.dumps(r['tree'])}  C = {r['C']}" + ("" if r.get("identity", True) else "  identity FAILS")
             for r in rows]
    lines.append(f"{len(found)} trees, sum of C = {total}")
    return ok, data, "\n".join(lines)


def run_genus1(cfg):
    m = _load_model(cfg)
    if m.frobenius is None:
        raise UsageError(f"model {m.name} carries no Frobenius data")
    corr = genus1_correction(m.frobenius)
    predicted = corr.density.euler_apply(2)
    seed_part = m.seed.density.filter(lambda k: k[0] == 0 and k[1] == 1)
    ok = predicted == seed_part
    data = {"model": m.name, "passed": ok, "correction": str(corr.density),
            "predictedSeedTerm": str(predicted), "seedTerm": str(seed_part)}
    text = (f"(D-2)^-1 G[1,1] genus-one part: {corr.density}\n"
            f"predicted seed term: {predicted}\nseed term:           {seed_part}\n"
            f"{'PASS' if ok else 'FAIL'}")
    return ok, data, text


RUNNERS = {
    "recurse": run_recurse,
    "verify": run_verify,
    "tau-check": run_tau_check,
    "correlators": run_correlators,
    "standard-compare": run_standard_compare,
    "trees": run_trees,
    "genus1": run_genus1,
}


_KINDS = {
    UsageError: "usage error",
    ParseError: "malformed polynomial",
    CapExceededError: "cap exceeded",
}


def build_parser():
    p = argparse.ArgumentParser(prog="drlab", description="Exact computations with DR hierarchies.")
    sub = p.add_subparsers(dest="command")
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON job description; command-line options override it")
        s.add_argument("--format", choices=("text", "json"))
        s.add_argument("--output", help="write the report here instead of stdout")
        if name in ("recurse", "verify", "tau-check", "correlators", "genus1"):
            s.add_argument("--model", help=f"one of {', '.join(MODELS)} or rank1(s1,s2,...)")
            s.add_argument("--genus", type=int, dest="genusCap", help="genus cap")
        if name in ("recurse", "verify", "tau-check"):
            s.add_argument("--pmax", type=int, dest="pMax")
            s.add_argument("--mode", choices=("quantum", "classical"))
        if name == "correlators":
            s.add_argument("--gmax", type=int, dest="gMax")
            s.add_argument("--tdeg", type=int, dest="tDegMax")
            s.add_argument("--dsum", type=int, dest="dSumMax")
        if name == "standard-compare":
            s.add_argument("--s", help="comma separated s1,s2,...")
            s.add_argument("--gmax", type=int, dest="gMax")
        if name == "trees":
            s.add_argument("--genus", type=int)
            s.add_argument("--n", type=int)
            s.add_argument("--m", type=int)
            s.add_argument("--admissible", action="store_true", default=None)
    return p


def make_config(args):
    cfg = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
        if cfg.get("command", args.command) != args.command:
            raise UsageError(f"config is for {cfg['command']!r}, not {args.command!r}")
    for k, v in vars(args).items():
        if k not in ("config", "command") and v is not None:
            cfg[k] = v
    for key in ("genusCap", "pMax", "gMax", "tDegMax", "dSumMax", "m"):
        cfg[key] = _positive(key, cfg.get(key), allow_zero=key in ("genusCap", "pMax", "gMax", "dSumMax"))
        if cfg[key] is None:
            del cfg[key]
    cfg.setdefault("format", "text")
    return cfg


def run(cfg):
    """Run one job; returns (exit status, report text)."""
    runner = RUNNERS.get(cfg.get("command"))
    if runner is None:
        raise UsageError(f"unknown command {cfg.get('command')!r}")
    ok, data, text = runner(cfg)
    out = json.dumps(data, indent=1, ensure_ascii=False) if cfg["format"] == "json" else text
    return (0 if ok else 1), out + "\n"


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_usage(sys.stderr)
        return 2
    try:
        cfg = make_config(args)
        cfg["command"] = args.command
        status, out = run(cfg)
    except (UsageError, DrlabError) as exc:
        print(f"drlab: {_KINDS.get(type(exc), 'error')}: {exc}", file=sys.stderr)
        return 2
    if cfg.get("output"):
        with open(cfg["output"], "w", encoding="utf-8") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    return status


if __name__ == "__main__":
    sys.exit(main())
