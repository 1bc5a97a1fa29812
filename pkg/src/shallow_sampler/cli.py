"""Command-line experiment runner.

Every subcommand prints one JSON report on stdout and writes its data files
under --out.  Failures print a JSON error object on stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import adversary as adv
from . import circuits as circ
from .bintree import build_tree, layer_partition
from .compiler import compile_unitary, gate_count_guard, phase_distance
from .gatezoo import u_unitarized
from .pmf import Pmf, export_pmf, int_to_bits, total_variation
from .statekit import ghz_state, state_norm
from .targets import (
    TargetKind,
    augmented_target_pmf,
    modp_envelope,
    modp_weight_pmf,
    select_prime,
    uniformity_defect,
)


class UsageError(ValueError):
    pass


@dataclass
class ExperimentReport:
    experiment: str
    parameters: dict
    metrics: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)
    seed: int | None = None
    wall_time: float = 0.0

    def to_json(self) -> str:
        for k, v in self.metrics.items():
            if isinstance(v, float) and not math.isfinite(v):
                raise ValueError(f"metric {k} is not finite")
        return json.dumps(asdict(self), sort_keys=True)


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("SHALLOW_SAMPLER_THREADS")
    return max(1, int(env)) if env else 1


def _out_dir(args) -> Path:
    path = Path(args.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _need(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError("missing required flag(s): " + ", ".join("--" + n for n in missing))


def _prime(args, n: int) -> int:
    if args.p is not None:
        return args.p
    if args.c is not None:
        return select_prime(n, args.c)
    raise UsageError("give --p or --c")


def _build(kind: str, args):
    """Circuit, input state, and target pmf for a named circuit."""
    n = args.n
    if kind == "majmod":
        p = _prime(args, n)
        return circ.nonunitary_majmod_circuit(n, p), ghz_state(n), augmented_target_pmf(TargetKind.MAJMOD_PARITY, n, p)
    if kind == "unitary-majmod":
        _need(args, "c")
        p = _prime(args, n)
        c = circ.unitary_majmod_circuit(n, args.c, p=p)
        return c, ghz_state(n), augmented_target_pmf(TargetKind.MAJMOD_PARITY, n, p)
    if kind == "pmmajmod":
        p = _prime(args, n)
        return circ.pmmajmod_circuit(n, p), None, augmented_target_pmf(TargetKind.PMMAJMOD, n, p)
    if kind == "unitary-pmmajmod":
        _need(args, "c")
        p = _prime(args, n)
        c = circ.unitary_pmmajmod_circuit(n, args.c, p=p)
        return c, None, augmented_target_pmf(TargetKind.PMMAJMOD, n, p)
    if kind == "even":
        return circ.even_superposition_prep(n), None, None
    if kind == "pmghz":
        return circ.poor_mans_ghz_circuit(n), None, None
    raise UsageError(f"unknown circuit {kind!r}")


# ------------------------------------------------------------------ commands


def cmd_simulate(args, rep: ExperimentReport):
    _need(args, "n")
    c, state, target = _build(args.circuit, args)
    if args.dry_run:
        return
    final = circ.run_state(c, state)
    pmf = circ.exact_distribution(final)
    rep.metrics.update(depth=circ.depth_of(c), n_qubits=c.n_qubits, norm=state_norm(final), support=len(pmf))
    if target is not None:
        rep.metrics["tvd_to_target"] = total_variation(pmf, target)
    out = _out_dir(args)
    path = out / f"simulate_{args.circuit}_n{args.n}.{args.format}"
    export_pmf(pmf, path, args.format)
    rep.artifacts.append(str(path))
    if args.shots:
        samples = circ.draw_samples(pmf, shots=args.shots, seed=args.seed, workers=_threads(args))
        rep.metrics["empirical_tvd"] = total_variation(circ.empirical_pmf(samples, pmf.bit_length), pmf)
        spath = out / f"samples_{args.circuit}_n{args.n}_seed{args.seed}.csv"
        with spath.open("w", newline="") as fh:
            fh.write("bitstring\n")
            fh.writelines(int_to_bits(int(s), pmf.bit_length) + "\n" for s in samples)
        rep.artifacts.append(str(spath))


def cmd_tvd(args, rep: ExperimentReport):
    _need(args, "n")
    c, state, target = _build(args.circuit, args)
    if target is None:
        raise UsageError("this circuit has no target distribution")
    if args.dry_run:
        return
    rep.metrics["tvd"] = total_variation(circ.run_exact(c, state), target)
    if args.circuit == "majmod":
        p = _prime(args, args.n)
        rep.metrics["closed_form"] = circ.majmod_failure_sum(args.n, p)
        rep.metrics["bound"] = circ.majmod_tvd_bound(args.n, p)


def cmd_correlation(args, rep: ExperimentReport):
    _need(args, "p")
    if args.samples < 2:
        raise UsageError("--samples must be >= 2")
    if args.dry_run:
        return
    weights = np.linspace(0.0, args.p, args.samples)
    probs = np.cos(-np.pi / 4 + np.pi * weights / args.p) ** 2
    path = _out_dir(args) / f"correlation_p{args.p}.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["weight", "prob_parity"])
        for x, y in zip(weights, probs):
            w.writerow([f"{x:.17g}", f"{y:.17g}"])
    rep.artifacts.append(str(path))
    rep.metrics.update(points=int(args.samples), min_prob=float(probs.min()), max_prob=float(probs.max()))


def cmd_pmghz(args, rep: ExperimentReport):
    _need(args, "n")
    c = circ.poor_mans_ghz_circuit(args.n)
    if args.dry_run:
        return
    state = circ.run_state(c)
    err = float(np.abs(state.amplitudes - circ.pm_ghz_closed_form(args.n)).max())
    pmf = circ.run_exact(c)
    edges = pmf.marginal(range(args.n - 1))
    rep.metrics.update(
        depth=circ.depth_of(c),
        n_qubits=c.n_qubits,
        max_amplitude_error=err,
        edge_marginal_tvd_to_uniform=total_variation(edges, Pmf.uniform(args.n - 1)),
    )
    path = _out_dir(args) / f"pmghz_n{args.n}.json"
    path.write_text(c.dumps() + "\n")
    rep.artifacts.append(str(path))


def cmd_lowerbound(args, rep: ExperimentReport):
    _need(args, "n", "d", "alpha")
    variant = args.variant
    if variant == "majmod":
        n_out = args.n
        l = args.l if args.l is not None else n_out - 1
        p = _prime(args, n_out)
    else:
        n_out = 2 * args.n - 1
        l = args.l if args.l is not None else n_out - 1
        p = _prime(args, args.n)
    if l > adv.MAX_INPUTS or n_out > 24:
        raise UsageError("sizes exceed the enumeration caps")
    if args.dry_run:
        return
    rng = np.random.default_rng(args.seed)
    f = adv.random_local_function(l, n_out, args.d, rng)
    source = None if not args.bias else adv.BiasedSource(args.bias, l)
    if variant == "majmod":
        cfg = adv.StatTestConfig.from_alpha("MAJMOD", f, args.alpha, p, source=source)
        target = augmented_target_pmf(TargetKind.MAJMOD_PARITY, n_out, p)
    else:
        tree = build_tree(args.n)
        tp = layer_partition(tree, args.d)
        cfg = adv.StatTestConfig.from_alpha("TREE", f, args.alpha, p, tree=tree, tree_partition=tp, source=source)
        target = augmented_target_pmf(TargetKind.PMMAJMOD, args.n, p)
    pf = adv.test_pass_probabilities((f, source), cfg)
    pt = adv.test_pass_probabilities(target, cfg)
    rep.metrics.update(
        s=cfg.decomposition.s,
        N0=cfg.N0,
        NF=cfg.NF,
        p=p,
        pass_f=pf["T"],
        pass_target=pt["T"],
        witnessed_lower_bound=abs(pf["T"] - pt["T"]),
        tvd=total_variation(adv.output_pmf(f, source), target),
        **{f"f_{k}": v for k, v in pf.items() if k != "T"},
        **{f"target_{k}": v for k, v in pt.items() if k != "T"},
    )
    path = _out_dir(args) / f"lowerbound_{variant}_n{args.n}_seed{args.seed}.json"
    payload = {"function": f.to_json(), "decomposition": cfg.decomposition.to_json()}
    if cfg.forest_partition is not None:
        payload["forests"] = [sorted(map(list, fr)) for fr in cfg.forest_partition.forests]
    path.write_text(json.dumps(payload, sort_keys=True) + "\n")
    rep.artifacts.append(str(path))


def cmd_bruteforce(args, rep: ExperimentReport):
    _need(args, "n", "d", "l")
    n_out = args.n
    if args.target == "parity":
        target = Pmf.from_dict({int_to_bits(x, n_out - 1) + str(bin(x).count("1") & 1): 1.0 for x in range(1 << (n_out - 1))})
    else:
        _need(args, "p")
        target = augmented_target_pmf(TargetKind.MAJMOD_PARITY, n_out, args.p)
    size = adv.search_space_size(n_out, args.d, args.l)
    rep.metrics["space_size"] = size
    if size > adv.MAX_SEARCH:
        raise UsageError(f"search space {size} exceeds {adv.MAX_SEARCH}")
    if args.dry_run:
        return
    source = adv.BiasedSource(args.bias, args.l) if args.bias else None
    res = adv.brute_force_min_tvd(n_out, args.d, args.l, target, source, workers=_threads(args))
    rep.metrics.update(min_tvd=res.min_tvd, search_seconds=res.wall_time)
    path = _out_dir(args) / f"bruteforce_{args.target}_n{n_out}_d{args.d}_l{args.l}.json"
    path.write_text(json.dumps({"min_tvd": res.min_tvd, "witness": res.witness.to_json(), "space_size": size}, sort_keys=True) + "\n")
    rep.artifacts.append(str(path))


def cmd_modp(args, rep: ExperimentReport):
    _need(args, "t", "p")
    if args.t < 1:
        raise UsageError("--t must be >= 1")
    if args.dry_run:
        return
    pmf = modp_weight_pmf(args.t, args.p, None, args.bias)
    rep.metrics.update(tvd_to_uniform=uniformity_defect(pmf), envelope=modp_envelope(args.t, args.p, args.bias))
    path = _out_dir(args) / f"modp_t{args.t}_p{args.p}.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["residue", "probability"])
        for r, v in enumerate(pmf):
            w.writerow([r, f"{v:.17g}"])
    rep.artifacts.append(str(path))


def cmd_compile(args, rep: ExperimentReport):
    _need(args, "m")
    if args.theta is None and args.p is None:
        raise UsageError("give --theta or --p")
    theta = args.theta if args.theta is not None else math.pi / args.p
    if not 2 <= args.m <= 4:
        raise UsageError("--m must be in [2, 4]")
    if args.dry_run:
        return
    u = u_unitarized(args.m, theta)
    prog = compile_unitary(u)
    rep.metrics.update(
        theta=theta,
        gate_count=prog.gate_count,
        cnot_count=prog.cnot_count,
        gate_guard=gate_count_guard(args.m),
        phase_distance=phase_distance(prog.unitary(), u.matrix),
    )
    path = _out_dir(args) / f"compile_m{args.m}.json"
    path.write_text(json.dumps(prog.to_json()) + "\n")
    rep.artifacts.append(str(path))


def cmd_bound(args, rep: ExperimentReport):
    _need(args, "p")
    rep.metrics["asymptote"] = 0.5 - 1 / math.pi + 1 / (2 * args.p)
    if args.n is not None and not args.dry_run:
        rep.metrics["bound"] = circ.majmod_tvd_bound(args.n, args.p)
        rep.metrics["exact_tvd"] = circ.majmod_failure_sum(args.n, args.p)


COMMANDS = {
    "simulate": cmd_simulate,
    "tvd": cmd_tvd,
    "correlation": cmd_correlation,
    "pmghz": cmd_pmghz,
    "lowerbound": cmd_lowerbound,
    "bruteforce": cmd_bruteforce,
    "modp": cmd_modp,
    "compile": cmd_compile,
    "bound": cmd_bound,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int)
    common.add_argument("--p", type=int)
    common.add_argument("--c", type=float)
    common.add_argument("--alpha", type=float)
    common.add_argument("--d", type=int)
    common.add_argument("--l", type=int)
    common.add_argument("--bias", type=float, default=0.0)
    common.add_argument("--shots", type=int, default=0)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int)
    common.add_argument("--out", default=".")
    common.add_argument("--format", choices=["csv", "json"], default="csv")
    common.add_argument("--dry-run", action="store_true")

    parser = argparse.ArgumentParser(prog="shallow-sampler", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    circuits = ["majmod", "unitary-majmod", "pmmajmod", "unitary-pmmajmod", "even", "pmghz"]
    sp = sub.add_parser("simulate", parents=[common], help="exact pmf of a circuit, optional sampling")
    sp.add_argument("--circuit", choices=circuits, default="majmod")
    sp = sub.add_parser("tvd", parents=[common], help="exact TVD of a circuit to its target")
    sp.add_argument("--circuit", choices=circuits[:4], default="majmod")
    sp = sub.add_parser("correlation", parents=[common], help="Pr[Y_x = parity(x)] against |x|")
    sp.add_argument("--samples", type=int, default=200)
    sub.add_parser("pmghz", parents=[common], help="depth-3 Poor Man's GHZ check")
    sp = sub.add_parser("lowerbound", parents=[common], help="statistical tests on a random local function")
    sp.add_argument("--variant", choices=["majmod", "tree"], default="majmod")
    sp = sub.add_parser("bruteforce", parents=[common], help="exhaustive minimum TVD over local functions")
    sp.add_argument("--target", choices=["parity", "majmod"], default="parity")
    sp = sub.add_parser("modp", parents=[common], help="law of a bit sum mod p")
    sp.add_argument("--t", type=int)
    sp = sub.add_parser("compile", parents=[common], help="compile U_{m,theta} to 1-qubit gates and CNOTs")
    sp.add_argument("--m", type=int)
    sp.add_argument("--theta", type=float)
    sub.add_parser("bound", parents=[common], help="TVD bound and its p-dependent asymptote")
    return parser


def run(argv=None) -> ExperimentReport:
    args = build_parser().parse_args(argv)
    params = {k: v for k, v in vars(args).items() if k not in ("command",)}
    rep = ExperimentReport(args.command, params, seed=args.seed)
    t0 = time.perf_counter()
    COMMANDS[args.command](args, rep)
    rep.wall_time = time.perf_counter() - t0
    rep.metrics["dry_run"] = bool(args.dry_run)
    rep.metrics["threads"] = _threads(args)
    return rep


def main(argv=None) -> int:
    try:
        rep = run(argv)
    except SystemExit as exc:  # argparse
        return int(exc.code or 0)
    except (UsageError, ValueError, IndexError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2
    print(rep.to_json())
    return 0


if __name__ == "__main__":
    sys.exit(main())
