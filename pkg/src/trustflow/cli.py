"""Command-line front end.

Every subcommand writes CSV to ``--out`` (or stdout). With ``--out`` a
manifest ``<out>.manifest.json`` is written next to it; passing that file
back through ``--manifest`` reruns the command with the recorded inputs,
configuration and seed.

Exit codes: 0 success, 1 domain or convergence error, 2 bad input.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .allocation import (AllocationProblem, SourceFlows, allocation_csv, solve_distributed,
                         trace_csv)
from .config import (apply_overrides, config_dict, config_from_dict, load_config,
                     ScenarioConfig)
from .errors import ConvergenceError, DomainError, InputError
from .identity import compute_ism, path_spoof_probability
from .network import discover_paths, parse_topology, path_links
from .simulation import (SWEEP_AXES, metrics_csv, parameter_sweep, run_simulation, sweep_csv,
                         trust_dump_csv)
from .social import (build_ledger, parse_contacts, parse_profiles, parse_wallposts,
                     profile_trust, social_series)
from .trust import (EvidenceRecord, behavioral_trust, map_combined_trust, prior_from_social,
                    record_observation)

# flags that only name where results go; never recorded in a manifest
_OUTPUT_FLAGS = ("out", "manifest", "trace", "trust_out")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list:
    items = [t for t in text.replace(";", ",").split(",") if t.strip()]
    try:
        return [float(t) for t in items]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="trustflow", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"trustflow {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--out", help="output CSV (default stdout)")
        sp.add_argument("--manifest", help="rerun from a manifest written by an earlier run")

    def scenario(sp):
        sp.add_argument("--config", help="config file or profile name (desk30, full70)")
        sp.add_argument("--seed", type=int, help="rng seed override")
        sp.add_argument("--trust-mode", choices=("social+behavioral", "behavioral", "none"))
        sp.add_argument("--ism", choices=("on", "off"))
        sp.add_argument("--tau-t", type=float)
        sp.add_argument("--tau-s", type=float)
        sp.add_argument("--mu", type=float)
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="config override, repeatable; wins over the file")

    sp = sub.add_parser("trust-demo", help="behavioral vs social-prior trust convergence")
    common(sp)
    sp.add_argument("--rates", type=_float_list, default=[0.7, 0.8, 0.9])
    sp.add_argument("--observations", type=int, default=30)
    sp.add_argument("--runs", type=int, default=100)
    sp.add_argument("--prior-offset", type=float, default=0.05,
                    help="social prior mode = true rate - offset (clipped to [0, 1])")
    sp.add_argument("--prior-strength", type=float, default=10.0)
    sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("social-trust", help="monthly wall-post and social trust series")
    common(sp)
    sp.add_argument("--wallposts")
    sp.add_argument("--contacts")
    sp.add_argument("--profiles")
    sp.add_argument("--pair", nargs=2, metavar=("I", "J"))
    sp.add_argument("--decay", type=float, default=None, help="rate parameter a")
    sp.add_argument("--months", type=int)

    sp = sub.add_parser("ism", help="identity-spoofing metric from a topology file")
    common(sp)
    sp.add_argument("--topology")
    sp.add_argument("--observer", help="default: every node with seed records")
    sp.add_argument("--default-trust", type=float, default=0.0)

    sp = sub.add_parser("allocate", help="trust-filtered multipath flow allocation")
    common(sp)
    sp.add_argument("--topology")
    sp.add_argument("--tau-t", type=float, default=0.0)
    sp.add_argument("--tau-s", type=float, default=0.0)
    sp.add_argument("--mu", type=float, default=0.0)
    sp.add_argument("--utility", choices=("combined", "diversity"), default="combined")
    sp.add_argument("--k", type=int, default=3, help="paths per source")
    sp.add_argument("--default-trust", type=float, default=1.0,
                    help="trust of links without a trust record")
    sp.add_argument("--max-iter", type=int, default=5000)
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--trace", help="also write the per-iteration solver trace here")

    sp = sub.add_parser("simulate", help="run one simulation")
    common(sp)
    scenario(sp)
    sp.add_argument("--trust-out", help="also write the final trust dump here")

    sp = sub.add_parser("sweep", help="parameter sweep over seeds")
    common(sp)
    scenario(sp)
    sp.add_argument("--axis", choices=sorted(SWEEP_AXES))
    sp.add_argument("--values", type=_float_list)
    sp.add_argument("--seeds", type=int, default=5)
    sp.add_argument("--jobs", type=int, default=1)
    return p


# --------------------------------------------------------------------------
# Helpers
# --------------------------------------------------------------------------

# checked after a manifest has had the chance to fill them in
_REQUIRED = {"social-trust": ("wallposts", "pair"), "ism": ("topology",),
             "allocate": ("topology",)}


def _check_required(args):
    missing = [f"--{k}" for k in _REQUIRED.get(args.command, ()) if getattr(args, k) is None]
    if missing:
        raise InputError(f"missing required argument(s): {', '.join(missing)}")


def _open_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None


def _digest(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _scenario_config(args) -> ScenarioConfig:
    cfg = load_config(args.config) if args.config else ScenarioConfig()
    over = {}
    if args.seed is not None:
        over["rng_seed"] = args.seed
    if args.trust_mode is not None:
        over["trust_mode"] = args.trust_mode
    if args.ism is not None:
        over["ism_enabled"] = args.ism == "on"
    for flag, key in (("tau_t", "tau_t"), ("tau_s", "tau_s"), ("mu", "mu")):
        if getattr(args, flag) is not None:
            over[key] = getattr(args, flag)
    cfg = apply_overrides(cfg, over)
    return apply_overrides(cfg, args.set)


# --------------------------------------------------------------------------
# Subcommands; each returns (csv_text, manifest_extras, side_outputs)
# --------------------------------------------------------------------------

def cmd_trust_demo(args):
    if args.observations < 1 or args.runs < 1:
        raise InputError("--observations and --runs must be >= 1")
    rng = np.random.default_rng(args.seed)
    buf = io.StringIO()
    buf.write("observation,true_rate,belief,map_uniform,map_social\n")
    for rate in args.rates:
        if not 0.0 <= rate <= 1.0:
            raise DomainError(f"rate {rate} outside [0, 1]")
        draws = rng.random((args.runs, args.observations)) < rate
        a, b = prior_from_social(min(1.0, max(0.0, rate - args.prior_offset)),
                                 args.prior_strength)
        belief = np.zeros(args.observations)
        m_uni = np.zeros(args.observations)
        m_soc = np.zeros(args.observations)
        for run in draws:
            ev = EvidenceRecord()
            r = 0
            for n, good in enumerate(run, 1):
                ev = record_observation(ev, bool(good))
                r += int(good)
                belief[n - 1] += behavioral_trust(ev)
                m_uni[n - 1] += map_combined_trust(r, n, 1.0, 1.0)
                m_soc[n - 1] += map_combined_trust(r, n, a, b)
        for n in range(args.observations):
            vals = (float(x[n] / args.runs) for x in (belief, m_uni, m_soc))
            buf.write(f"{n + 1},{rate!r}," + ",".join(map(repr, vals)) + "\n")
    return buf.getvalue(), {"seed": args.seed}, {}


def cmd_social_trust(args):
    parsed = parse_wallposts(_open_text(args.wallposts).splitlines())
    if not parsed.ok:
        line, msg = parsed.errors[0]
        raise InputError(f"{args.wallposts}: line {line}: {msg} "
                         f"({len(parsed.errors)} bad line(s))")
    contacts = parse_contacts(_open_text(args.contacts).splitlines()) if args.contacts else None
    ledger = build_ledger(parsed.records, contacts)
    i, j = args.pair
    ips = 0.0
    if args.profiles:
        profiles = {p.user: p for p in parse_profiles(_open_text(args.profiles).splitlines())}
        missing = [u for u in (i, j) if u not in profiles]
        if missing:
            raise InputError(f"no profile for {', '.join(missing)}")
        ips = profile_trust(profiles, i, j)
    rows = social_series(ledger, i, j, ips, args.decay, args.months)
    buf = io.StringIO()
    buf.write("month,posts_ij,posts_i,wallpost_trust,eta,social_trust\n")
    for m, nij, ni, w, eta, s in rows:
        buf.write(f"{m},{nij},{ni},{w!r},{eta!r},{s!r}\n")
    return buf.getvalue(), {}, {}


def cmd_ism(args):
    spec = parse_topology(_open_text(args.topology).splitlines())
    graph = spec.voucher_graph(args.default_trust)
    observers = [args.observer] if args.observer else sorted(spec.seeds)
    if not observers:
        raise InputError("topology has no seed records; pass --observer")
    buf = io.StringIO()
    buf.write("observer,node,ism,iterations\n")
    for o in observers:
        res = compute_ism(graph, o)
        for v in sorted(res.values):
            buf.write(f"{o},{v},{res.values[v]!r},{res.iterations}\n")
    return buf.getvalue(), {}, {}


def cmd_allocate(args):
    spec = parse_topology(_open_text(args.topology).splitlines())
    if not spec.sources:
        raise InputError("topology has no source records")
    topo = spec.topology
    graph = spec.voucher_graph(args.default_trust) if spec.vouchers else None
    flows = []
    for s, d in spec.sources:
        ism = compute_ism(graph, s) if graph is not None and spec.seeds.get(s) else None
        paths, trusts = [], []
        for p in discover_paths(topo, s, d, args.k):
            t = 1.0
            for lk in path_links(p):
                t *= spec.trust.get(lk, args.default_trust)
            sp = path_spoof_probability(p, ism, s) if ism is not None else 1.0
            if t >= args.tau_t and sp >= args.tau_s and t > 0:
                paths.append(p)
                trusts.append(t)
        if paths:
            flows.append(SourceFlows(s, tuple(paths), tuple(trusts), args.mu))
    caps = {lk: topo.links[lk] for f in flows for p in f.paths for lk in path_links(p)}
    problem = AllocationProblem(tuple(flows), caps, args.utility, args.tau_t, args.tau_s)
    if not flows:
        return "source,path,rate\n", {"converged": True}, {}
    res = solve_distributed(problem, args.max_iter, args.tol)
    side = {args.trace: trace_csv(res)} if args.trace else {}
    extras = {"converged": bool(res.converged), "iterations": len(res.trace),
              "objective": problem.objective(res.allocation.rates)}
    return allocation_csv(res.allocation), extras, side


def cmd_simulate(args, cfg):
    result = run_simulation(cfg)
    side = {args.trust_out: trust_dump_csv(result)} if args.trust_out else {}
    return metrics_csv(result), {}, side


def cmd_sweep(args, cfg):
    if not args.axis:
        raise InputError("--axis is required")
    if not args.values:
        raise InputError("--values must list at least one value")
    if args.seeds < 1 or args.jobs < 1:
        raise InputError("--seeds and --jobs must be >= 1")
    rows = parameter_sweep(cfg, args.axis, args.values, args.seeds, args.jobs)
    return sweep_csv(args.axis, rows), {}, {}


# --------------------------------------------------------------------------
# Manifest
# --------------------------------------------------------------------------

_PATH_FLAGS = ("wallposts", "contacts", "profiles", "topology")


def _recorded_args(args) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in _OUTPUT_FLAGS or k == "command":
            continue
        if k in _PATH_FLAGS and v is not None:
            v = str(Path(v).resolve())
        out[k] = v
    return out


def _manifest(args, cfg, extras) -> dict:
    inputs = {k: {"path": str(Path(getattr(args, k)).resolve()),
                  "sha256": _digest(getattr(args, k))}
              for k in _PATH_FLAGS if getattr(args, k, None)}
    m = {"tool": "trustflow", "version": __version__, "command": args.command,
         "args": _recorded_args(args), "inputs": inputs}
    if cfg is not None:
        m["config"] = config_dict(cfg)
        m["seed"] = cfg.rng_seed
    elif "seed" in vars(args):
        m["seed"] = args.seed
    m.update({k: v for k, v in extras.items() if k != "seed"})
    return m


def _load_manifest(path: str, args):
    """Replace ``args`` fields with the recorded ones; returns the config."""
    try:
        m = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read manifest {path}: {exc}") from None
    if m.get("command") != args.command:
        raise InputError(f"manifest is for {m.get('command')!r}, not {args.command!r}")
    for k, v in m.get("args", {}).items():
        if k in vars(args):
            setattr(args, k, v)
    for k, info in m.get("inputs", {}).items():
        if Path(info["path"]).exists() and _digest(info["path"]) != info["sha256"]:
            raise InputError(f"input {info['path']} changed since the manifest was written")
    return config_from_dict(m["config"]) if "config" in m else None


# --------------------------------------------------------------------------
# Entry point
# --------------------------------------------------------------------------

def _write(path: str, text: str):
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc}") from None


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_manifest(args.manifest, args) if args.manifest else None
        _check_required(args)
        if args.command in ("simulate", "sweep"):
            cfg = cfg or _scenario_config(args)
            text, extras, side = {"simulate": cmd_simulate, "sweep": cmd_sweep}[args.command](
                args, cfg)
        else:
            handler = {"trust-demo": cmd_trust_demo, "social-trust": cmd_social_trust,
                       "ism": cmd_ism, "allocate": cmd_allocate}[args.command]
            text, extras, side = handler(args)
        if args.out:
            _write(args.out, text)
            _write(args.out + ".manifest.json",
                   json.dumps(_manifest(args, cfg, extras), indent=2, sort_keys=True) + "\n")
        else:
            sys.stdout.write(text)
        for path, body in side.items():
            _write(path, body)
    except InputError as exc:
        print(f"trustflow: error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, ConvergenceError) as exc:
        print(f"trustflow: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
