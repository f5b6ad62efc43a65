"""Command-line front end.

Subcommands: capacity, simulate, verify, baseline. Every output embeds a run
manifest; identical arguments and seed reproduce byte-identical JSON up to the
manifest timestamp. Exit codes: 0 success, 1 verification failure, 2 input or
validation error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import datetime
import json
import sys

import numpy as np

from . import __version__
from . import capacity as cap
from . import classical as cl
from . import mtypes, protosim, qcore, quantum
from .rpchannel import EncoderFamily, RandomParameterChannel, SpecError, load_spec

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_INPUT = 2
EXIT_NUMERIC = 3


def _manifest(command: str, args: dict, seed: int) -> dict:
    clean = {
        k: v
        for k, v in sorted(args.items())
        if k not in ("fn", "cmd", "out", "json", "csv")
        and isinstance(v, (str, int, float, bool))
    }
    return {
        "command": command,
        "arguments": clean,
        "seed": int(seed),
        "version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }


def _emit(payload: dict, out_path, to_stdout: bool) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    if to_stdout or not out_path:
        print(text)


def _resolve_family(name: str, rp: RandomParameterChannel) -> EncoderFamily:
    if name == "identity":
        return EncoderFamily.identity(rp.dim_in, rp.num_params)
    if name == "invert":
        mats = []
        for label, br in zip(rp.param_labels, rp.branches):
            if len(br.kraus_ops) != 1:
                raise SpecError(
                    f"family 'invert' needs unitary branches; branch s={label} has "
                    f"{len(br.kraus_ops)} Kraus operators"
                )
            u = br.kraus_ops[0]
            if np.abs(u @ u.conj().T - np.eye(rp.dim_out)).max() > 1e-9:
                raise SpecError(f"family 'invert': branch s={label} is not unitary")
            mats.append(u.conj().T)
        return EncoderFamily.from_matrices(mats)
    raise SpecError(f"unknown family {name!r}; expected identity or invert")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_capacity(args) -> int:
    rp = load_spec(args.channel)
    cfg = cap.OptimizerConfig(
        dim_k=args.dim_k,
        dim_ref=args.dim_ref,
        restarts=args.restarts,
        max_iters=args.max_iters,
        seed=args.seed,
    )
    est = cap.maximize(args.scenario, rp, cfg)
    payload = est.to_json_dict()
    payload["quantum_value_bits"] = cap.quantum_capacity_from_classical(
        max(est.value_bits, 0.0)
    )
    payload["channel"] = rp.name
    payload["manifest"] = _manifest("capacity", vars(args), args.seed)
    _emit(payload, args.out, args.json)
    return EXIT_OK


def cmd_simulate(args) -> int:
    rp = load_spec(args.channel)
    fam = _resolve_family(args.family, rp)
    xi = quantum.max_entangled(rp.dim_in)
    n_list = [int(x) for x in str(args.n).split(",")]
    reports = []
    for n in n_list:
        rep = protosim.simulate(
            args.scheme,
            rp,
            fam,
            xi,
            n=n,
            num_messages=args.messages,
            excess_rate=args.excess_rate,
            delta=args.delta,
            covering_delta=args.covering_delta,
            seed=args.seed,
            decoder=args.decoder,
        )
        reports.append(rep)
    payload: dict = {
        "reports": [r.to_json_dict() for r in reports],
        "channel": rp.name,
        "manifest": _manifest("simulate", vars(args), args.seed),
    }
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write("n,rate,max_error,avg_error\n")
            for rep in reports:
                rate = np.log2(rep.message_count) / rep.n
                fh.write(f"{rep.n},{rate:.10g},{rep.max_error:.10g},{rep.avg_error:.10g}\n")
    _emit(payload, args.out, args.json)
    return EXIT_OK


def _check(lines: list, name: str, ok: bool, detail: str) -> bool:
    lines.append(f"[{'ok' if ok else 'FAIL'}] {name}: {detail}")
    return ok


def _verify_algebra(seed: int) -> tuple[bool, list]:
    rng = np.random.default_rng(np.random.SeedSequence((0x414C4742, seed)))
    lines: list = []
    all_ok = True
    worst = 0.0
    for d in (2, 3, 5):
        for _ in range(10):
            rho = quantum.random_density(d, rng)
            acc = np.zeros((d, d), dtype=np.complex128)
            for a in range(d):
                for b in range(d):
                    s_ab = quantum.heisenberg_weyl(d, a, b)
                    acc += s_ab @ rho @ s_ab.conj().T
            acc /= d * d
            worst = max(worst, float(np.abs(acc - np.eye(d) / d).max()))
    all_ok &= _check(lines, "heisenberg-weyl twirl", worst <= 1e-10, f"max deviation {worst:.3e}")
    worst = 0.0
    for d in (2, 3, 4):
        for _ in range(7):
            worst = max(worst, quantum.ricochet_check(quantum.random_unitary(d, rng), d))
    all_ok &= _check(lines, "ricochet (haar)", worst <= 1e-12, f"max residual {worst:.3e}")
    worst = 0.0
    for n in (1, 2, 3):
        layout = protosim.type_layout(n, 2)
        for _ in range(7):
            g = protosim.GammaVector(
                tuple(
                    (int(rng.integers(d)), int(rng.integers(d)), int(rng.integers(2)))
                    for d in layout.block_sizes
                )
            )
            u = protosim.block_unitary(g, layout)
            worst = max(worst, quantum.ricochet_check(u, 2 ** n))
    all_ok &= _check(lines, "ricochet (codeword unitaries)", worst <= 1e-12, f"max residual {worst:.3e}")
    rho = quantum.random_density(2, rng)
    n = 3
    tp = mtypes.typical_projector(rho, n, 0.2)
    rho_n = rho
    for _ in range(n - 1):
        rho_n = np.kron(rho_n, rho)
    comm = float(np.abs(tp.matrix @ rho_n - rho_n @ tp.matrix).max())
    all_ok &= _check(lines, "typical projector commutes", comm <= 1e-10, f"residual {comm:.3e}")
    pinched = tp.matrix @ rho_n @ tp.matrix
    lo = 2.0 ** (-n * (tp.entropy + tp.c * 0.2)) * tp.matrix
    hi = 2.0 ** (-n * (tp.entropy - tp.c * 0.2)) * tp.matrix
    sandwich = qcore.psd_leq(lo, pinched, 1e-10) and qcore.psd_leq(pinched, hi, 1e-10)
    all_ok &= _check(lines, "typical projector sandwich", sandwich, f"c={tp.c:.4f}")
    total = sum(mtypes.type_class_size(t) for t in mtypes.all_types(6, 3))
    all_ok &= _check(lines, "type-class sizes sum", total == 3 ** 6, f"{total} vs {3 ** 6}")
    return all_ok, lines


def _verify_packing(n: int, delta: float, seed: int) -> tuple[bool, list]:
    from .rpchannel import dephasing_parameter_channel, virtual_channel

    rp = dephasing_parameter_channel()
    fam = _resolve_family("invert", rp)
    xi = quantum.max_entangled(2)
    weights = protosim.schmidt_weights(xi, 2)
    layout = protosim.schmidt_layout(weights, n)
    omega = protosim.reference_pair_state(rp, fam, xi, "causal")
    d_bp, d_b = rp.dim_out, 2
    h_joint = quantum.vn_entropy(omega)
    h_bp = quantum.vn_entropy(qcore.partial_trace(omega, [d_bp, d_b], [0]))
    h_b = quantum.vn_entropy(qcore.partial_trace(omega, [d_bp, d_b], [1]))
    gammas = protosim.gamma_codebook(layout, 8, seed)
    joint = mtypes.typical_projector(omega, n, delta).matrix
    base = qcore.permute_systems(
        joint, [d_bp, d_b] * n, protosim._interleaved_to_grouped_perm(n)
    )
    pi_bp = mtypes.typical_projector(qcore.partial_trace(omega, [d_bp, d_b], [0]), n, delta).matrix
    pi_b = mtypes.typical_projector(qcore.partial_trace(omega, [d_bp, d_b], [1]), n, delta).matrix
    code_proj = np.kron(pi_bp, pi_b)
    omega_n = protosim.grouped_power_state(omega, n, d_bp, d_b)
    projs, states = [], []
    for g in gammas.entries:
        u = protosim.block_unitary(g, layout)
        projs.append(protosim.conjugate_on_second_half(base, u, d_bp ** n))
        states.append(protosim.conjugate_on_second_half(omega_n, u, d_bp ** n))
    m_ch = virtual_channel(rp, fam)
    sigma = protosim.average_signal_state(layout, weights, m_ch)
    sigma_check = float(np.abs(sigma - sigma.conj().T).max())
    probs = np.full(len(states), 1.0 / len(states))
    probe = protosim.packing_conditions_check(
        code_proj, projs, states, probs, (h_joint, h_bp, h_b), n, alpha=1.0
    )
    alpha = probe.alpha_star + 1e-9
    # sandwich condition is against the exact full-ensemble average
    rep = protosim.packing_conditions_check(
        code_proj, projs, [sigma] * 1, [1.0], (h_joint, h_bp, h_b), n, alpha=alpha
    )
    lines: list = []
    ok = True
    ok &= _check(
        lines, "packing trace (code projector)",
        probe.measured["alpha_trace_code"] <= alpha,
        f"measured alpha {probe.measured['alpha_trace_code']:.4f}",
    )
    ok &= _check(
        lines, "packing trace (codeword projector)",
        probe.measured["alpha_trace_codeword"] <= alpha,
        f"measured alpha {probe.measured['alpha_trace_codeword']:.4f}",
    )
    ok &= _check(
        lines, "packing rank bound",
        probe.condition_pass["rank"],
        f"measured alpha {probe.measured['alpha_rank']:.4f}",
    )
    ok &= _check(
        lines, "packing operator sandwich",
        rep.condition_pass["sandwich"],
        f"measured alpha {rep.measured['alpha_sandwich']:.4f}, hermiticity {sigma_check:.1e}",
    )
    alpha_report = max(
        probe.measured["alpha_trace_code"],
        probe.measured["alpha_trace_codeword"],
        probe.measured["alpha_rank"],
        rep.measured["alpha_sandwich"],
        0.0,
    )
    lines.append(f"[info] all four conditions hold at alpha = {alpha_report:.6f} (n={n}, delta={delta})")
    return ok, lines


def _verify_covering(seed: int, trials: int = 10000) -> tuple[bool, list]:
    eps = 0.1
    p_sx = np.array([[(1 - eps) / 2, eps / 2], [eps / 2, (1 - eps) / 2]])
    info = 1.0 - cl.binary_entropy(eps)
    rate = info + 0.2
    est100 = mtypes.covering_monte_carlo(p_sx, rate, 100, 0.05, trials, seed)
    est400 = mtypes.covering_monte_carlo(p_sx, rate, 400, 0.05, trials, seed)
    lines: list = []
    ok = True
    ok &= _check(
        lines, "covering decay n=100",
        est100.fail_prob_hat < 0.5,
        f"failure {est100.fail_prob_hat:.4f} +- {est100.stderr:.4f}",
    )
    ok &= _check(
        lines, "covering decay n=400",
        est400.fail_prob_hat < 0.5,
        f"failure {est400.fail_prob_hat:.4f} +- {est400.stderr:.4f}",
    )
    ok &= _check(
        lines, "covering monotone in n",
        est400.fail_prob_hat <= est100.fail_prob_hat + 3 * (est100.stderr + est400.stderr) + 1e-12,
        f"{est400.fail_prob_hat:.4f} <= {est100.fail_prob_hat:.4f}",
    )
    return ok, lines


def cmd_verify(args) -> int:
    if args.suite == "algebra":
        ok, lines = _verify_algebra(args.seed)
    elif args.suite == "packing":
        ok, lines = _verify_packing(args.n, args.delta, args.seed)
    elif args.suite == "covering":
        ok, lines = _verify_covering(args.seed)
    else:
        raise SpecError(f"unknown suite {args.suite!r}")
    for line in lines:
        print(line)
    if not ok:
        first = next(line for line in lines if line.startswith("[FAIL]"))
        print(f"verification failed: {first}", file=sys.stderr)
        return EXIT_VERIFY_FAIL
    return EXIT_OK


def cmd_baseline(args) -> int:
    ch = cl.load_classical_spec(args.channel)
    shannon = cl.shannon_strategy_capacity(ch)
    gp = cl.gelfand_pinsker_capacity(ch, args.u_size)
    payload = {
        "shannon_strategy_bits": shannon,
        "gelfand_pinsker_bits": gp,
        "u_size": args.u_size,
        "manifest": _manifest("baseline", vars(args), args.seed),
    }
    _emit(payload, args.out, args.json)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rpcap",
        description="Entanglement-assisted capacities of random-parameter quantum "
        "channels, with protocol-level verification at small block length.",
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", type=str, default=None, help="write JSON to this path")
        p.add_argument("--json", action="store_true", help="print JSON to stdout")

    p = sub.add_parser("capacity", help="maximize a capacity objective")
    p.add_argument("--channel", required=True)
    p.add_argument("--scenario", required=True, choices=cap.SCENARIOS)
    p.add_argument("--restarts", type=int, default=16)
    p.add_argument("--max-iters", type=int, default=300)
    p.add_argument("--dim-k", type=int, default=None)
    p.add_argument("--dim-ref", type=int, default=None)
    common(p)
    p.set_defaults(fn=cmd_capacity)

    p = sub.add_parser("simulate", help="run a coding scheme exactly at small n")
    p.add_argument("--channel", required=True)
    p.add_argument("--scheme", required=True, choices=("causal", "noncausal"))
    p.add_argument("--n", required=True, help="block length, or comma list for a sweep")
    p.add_argument("--messages", type=int, default=4)
    p.add_argument("--excess-rate", type=float, default=0.25)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--covering-delta", type=float, default=0.25)
    p.add_argument("--decoder", choices=("projector", "direct"), default="projector")
    p.add_argument("--family", choices=("identity", "invert"), default="identity")
    p.add_argument("--csv", type=str, default=None, help="write sweep rows as CSV")
    common(p)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("verify", help="run an invariant suite")
    p.add_argument("--suite", required=True, choices=("algebra", "packing", "covering"))
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--delta", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("baseline", help="classical side-information baselines")
    p.add_argument("--channel", required=True)
    p.add_argument("--u-size", type=int, default=2)
    common(p)
    p.set_defaults(fn=cmd_baseline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (SpecError, ValueError, FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except np.linalg.LinAlgError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
