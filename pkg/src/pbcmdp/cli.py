"""``pbcmdp`` command line: parse, validate, translate, enumerate, build, solve, report.

Every failure prints a single line ``error[<kind>]: <reason>`` to stderr and
exits with the code of its kind (see ``EXIT_CODES``).  Numbers are printed
with 12 significant digits so output is byte-stable across runs.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import engine
from .dtlpmln import DecisionProblem, TooManyDecisionsError, meu
from .engine import (
    NoStableModelError,
    ResourceLimitError,
    UnknownAtomError,
    ZeroProbabilityError,
    expected_utility,
    query_probability,
)
from .lang import ACTION, TOP, TRUE, Atom, GroundingError, constant_label, evaluate
from .mdp import MdpError, ResourceGuardError, build_mdp, solve_finite, solve_infinite
from .parser import ParseError, parse_description, parse_formula
from .transition import (
    AssumptionViolationError,
    ImpossibleConditionError,
    TransitionError,
    enumerate_actions,
    enumerate_states,
    ground,
)
from .translator import dump, render_program_formula, translate

EXIT_CODES = {"input": 1, "parse": 1, "validation": 2, "assumption": 3, "infeasible": 4, "resource": 5}
MAX_STATES = 100_000


class CliError(Exception):
    def __init__(self, kind: str, message: str):
        self.kind = kind
        self.code = EXIT_CODES[kind]
        super().__init__(message)


def num(x: float) -> str:
    x = float(x)
    if x == 0.0:
        x = 0.0  # no "-0"
    return format(x, ".12g")


def jnum(x: float):
    return float(num(x))


def _one_line(text: str) -> str:
    return " ".join(str(text).split())


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------


def load(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError("input", f"cannot read {path}: {exc.strerror or exc}") from None
    try:
        D = parse_description(text)
    except ParseError as exc:
        raise CliError("parse", f"{path}: {exc}") from None
    from .lang import validate

    try:
        problems = validate(D)
    except GroundingError as exc:
        raise CliError("validation", f"{path}: {exc}") from None
    if problems:
        more = f" (+{len(problems) - 1} more)" if len(problems) > 1 else ""
        first = problems[0]
        raise CliError("validation", f"{path}: {first.where}: {first.message}{more}")
    return D


def formula(text: str | None, *, timed: bool = True, what: str = "formula"):
    if text is None:
        return TOP
    try:
        return parse_formula(text, timed=timed)
    except ParseError as exc:
        raise CliError("parse", f"{what} {text!r}: {exc}") from None


def states_and_actions(D):
    states = enumerate_states(D)
    if len(states) > MAX_STATES:
        raise CliError("resource", f"{len(states)} states exceed the guard of {MAX_STATES}")
    return states, enumerate_actions(D)


def select_initial(states, text: str | None) -> list[int]:
    if text is None:
        return list(range(len(states)))
    f = formula(text, timed=False, what="initial-state selector")
    chosen = []
    for i, s in enumerate(states):
        table = s.as_dict()

        def holds(a: Atom, table=table) -> bool:
            label = constant_label(a.name, a.args)
            if label not in table:
                raise CliError("input", f"initial-state selector mentions unknown fluent {label}")
            return table[label] == a.value

        if evaluate(f, holds):
            chosen.append(i)
    if not chosen:
        raise CliError("infeasible", f"no state satisfies {text!r}")
    return chosen


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _listing(items, noun: str, fmt: str) -> str:
    if fmt == "json":
        key = noun + "s"
        rows = [{"index": i, "label": str(x), "assignment": x.as_dict()} for i, x in enumerate(items)]
        return json.dumps({"count": len(items), key: rows}, indent=2, sort_keys=True) + "\n"
    if fmt == "tsv":
        labels = [label for label, _, _ in items[0].items] if items else []
        out = ["\t".join(["index", *labels])]
        for i, x in enumerate(items):
            out.append("\t".join([str(i), *(v for _, _, v in x.items)]))
        return "\n".join(out) + "\n"
    out = [f"{i}\t{x}" for i, x in enumerate(items)]
    out.append(f"{len(items)} {noun}s detected.")
    return "\n".join(out) + "\n"


def cmd_states(args, D) -> str:
    states, _ = states_and_actions(D)
    return _listing(states, "state", args.format)


def cmd_actions(args, D) -> str:
    _, actions = states_and_actions(D)
    return _listing(actions, "action", args.format)


def _mdp(args, D):
    states_and_actions(D)
    try:
        return build_mdp(D, check=not args.unchecked)
    except AssumptionViolationError as exc:
        raise CliError("assumption", str(exc)) from None


def cmd_mdp(args, D) -> str:
    M = _mdp(args, D)
    nA, nS = M.n_actions, M.n_states
    cells = [(a, s, t) for a in range(nA) for s in range(nS) for t in range(nS)]
    if args.format == "json":
        doc = {
            "states": [{"index": i, "label": str(s), "assignment": s.as_dict()} for i, s in enumerate(M.states)],
            "actions": [{"index": i, "label": str(a), "assignment": a.as_dict()} for i, a in enumerate(M.actions)],
            "T": [[[jnum(M.T[a, s, t]) for t in range(nS)] for s in range(nS)] for a in range(nA)],
            "R": [[[jnum(M.R[a, s, t]) for t in range(nS)] for s in range(nS)] for a in range(nA)],
            "edges": [
                {"s": s, "a": a, "t": t, "p": jnum(M.T[a, s, t]), "r": jnum(M.R[a, s, t])}
                for s in range(nS) for a in range(nA) for t in range(nS) if M.T[a, s, t] > 0.0
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.format == "tsv":
        out = ["a\ts\ts'\tp\tr"]
        out += [f"{a}\t{s}\t{t}\t{num(M.T[a, s, t])}\t{num(M.R[a, s, t])}" for a, s, t in cells]
        return "\n".join(out) + "\n"
    out = [f"{nS} states detected.", f"{nA} actions detected.", "state\taction\tnext\tp\tr"]
    for s in range(nS):
        for a in range(nA):
            for t in range(nS):
                if M.T[a, s, t] > 0.0:
                    out.append(f"{M.states[s]}\t{M.actions[a]}\t{M.states[t]}\t{num(M.T[a, s, t])}\t{num(M.R[a, s, t])}")
    return "\n".join(out) + "\n"


def cmd_solve(args, D) -> str:
    if args.horizon is None and args.gamma is None:
        raise CliError("input", "solve needs --horizon or --gamma")
    if args.horizon is not None and args.gamma is not None:
        raise CliError("input", "give either --horizon or --gamma, not both")
    M = _mdp(args, D)
    chosen = select_initial(M.states, args.initial)
    if args.gamma is not None:
        if not 0.0 < args.gamma < 1.0:
            raise CliError("input", "--gamma must lie strictly between 0 and 1")
        if not args.epsilon > 0.0:
            raise CliError("input", "--epsilon must be positive")
        try:
            pol = solve_infinite(M, args.gamma, args.epsilon)
        except MdpError as exc:
            raise CliError("resource", str(exc)) from None
        return _stationary_report(args, M, pol, chosen)
    pol = solve_finite(M, args.horizon)
    return _finite_report(args, M, pol, chosen)


def _finite_report(args, M, pol, chosen) -> str:
    m = pol.horizon
    if args.format == "json":
        doc = {
            "horizon": m,
            "policy": [
                {"state": s, "step": i, "action": int(pol.table[s, i]), "value": jnum(pol.values[s, i])}
                for s in range(M.n_states) for i in range(m)
            ],
            "initial": [{"state": s, "label": str(M.states[s]), "value": jnum(pol.values[s, 0])} for s in chosen],
            "states": [str(s) for s in M.states],
            "actions": [str(a) for a in M.actions],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.format == "tsv":
        out = ["state\tstep\taction\tvalue"]
        out += [f"{s}\t{i}\t{pol.table[s, i]}\t{num(pol.values[s, i])}" for s in range(M.n_states) for i in range(m)]
        return "\n".join(out) + "\n"
    out = [f"policy for horizon {m}" if m else "empty policy (horizon 0)"]
    if m:
        out.append("step\tstate\taction\tvalue")
        for i in range(m):
            for s in range(M.n_states):
                out.append(f"{i}\t{M.states[s]}\t{M.actions[pol.table[s, i]]}\t{num(pol.values[s, i])}")
    for s in chosen:
        out.append(f"value at step 0 from {{{M.states[s]}}}: {num(pol.values[s, 0])}")
    return "\n".join(out) + "\n"


def _stationary_report(args, M, pol, chosen) -> str:
    if args.format == "json":
        doc = {
            "gamma": jnum(pol.gamma),
            "sweeps": len(pol.residuals),
            "policy": [
                {"state": s, "label": str(M.states[s]), "action": int(pol.table[s]), "value": jnum(pol.values[s])}
                for s in range(M.n_states)
            ],
            "initial": list(chosen),
            "actions": [str(a) for a in M.actions],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.format == "tsv":
        out = ["state\taction\tvalue"]
        out += [f"{s}\t{pol.table[s]}\t{num(pol.values[s])}" for s in range(M.n_states)]
        return "\n".join(out) + "\n"
    out = [f"stationary policy for gamma {num(pol.gamma)} after {len(pol.residuals)} sweeps", "state\taction\tvalue"]
    for s in chosen:
        out.append(f"{M.states[s]}\t{M.actions[pol.table[s]]}\t{num(pol.values[s])}")
    return "\n".join(out) + "\n"


def _program(args, D):
    if args.horizon is None:
        raise CliError("input", f"{args.command} needs --horizon")
    G = ground(D)
    program = translate(G, args.horizon)
    if args.dump_program:
        try:
            Path(args.dump_program).write_text(dump(program), encoding="utf-8")
        except OSError as exc:
            raise CliError("input", f"cannot write {args.dump_program}: {exc.strerror or exc}") from None
    return G, program


def cmd_meu(args, D) -> str:
    G, program = _program(args, D)
    decisions = [Atom(c.name, c.args, TRUE, i) for i in range(args.horizon) for c in G.constants_of(ACTION)]
    dp = DecisionProblem(program, decisions)
    result = meu(dp, formula(args.evidence, what="evidence"))
    chosen = [render_program_formula(a) for a in result.assignment.true_atoms()]
    if args.format == "json":
        doc = {
            "decisions": [render_program_formula(a) for a in dp.decisions],
            "chosen": chosen,
            "expected_utility": jnum(result.value),
            "ties": len(result.maximizers),
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.format == "tsv":
        return "chosen\texpected_utility\tties\n" + f"{' & '.join(chosen) or 'none'}\t{num(result.value)}\t{len(result.maximizers)}\n"
    return (
        f"{len(dp.decisions)} decision atoms\n"
        f"decision: {' & '.join(chosen) or 'none'}\n"
        f"expected utility: {num(result.value)}\n"
        f"ties: {len(result.maximizers)}\n"
    )


def cmd_eval(args, D) -> str:
    _, program = _program(args, D)
    ev = formula(args.evidence, what="evidence")
    q = formula(args.query, what="query") if args.query is not None else None
    eu = expected_utility(program, ev)
    res = query_probability(program, q, ev) if q is not None else None
    if args.format == "json":
        doc = {"expected_utility": jnum(eu)}
        if res is not None:
            doc.update(probability=jnum(res.probability), support=res.support)
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.format == "tsv":
        head, row = ["expected_utility"], [num(eu)]
        if res is not None:
            head, row = ["probability", "support", *head], [num(res.probability), str(res.support), *row]
        return "\t".join(head) + "\n" + "\t".join(row) + "\n"
    out = []
    if res is not None:
        out += [f"probability: {num(res.probability)}", f"support: {res.support}"]
    out.append(f"expected utility: {num(eu)}")
    return "\n".join(out) + "\n"


COMMANDS = {
    "states": cmd_states,
    "actions": cmd_actions,
    "mdp": cmd_mdp,
    "solve": cmd_solve,
    "meu": cmd_meu,
    "eval": cmd_eval,
}


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _nonneg_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return v


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("input", f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _ArgumentParser(add_help=False)
    common.add_argument("input", help="pBC+ description file (.pbcp)")
    common.add_argument("--format", choices=("text", "json", "tsv"), default="text")
    common.add_argument("--unchecked", action="store_true", help="skip the assumption check before building the MDP")
    common.add_argument("--dump-program", metavar="FILE", help="write the ground LP^MLN program to FILE")
    common.add_argument("--max-models", type=_nonneg_int, default=engine.DEFAULT_MODEL_LIMIT,
                        help="stable-model guard (exit 5 when exceeded)")
    common.add_argument("--seedless-deterministic", action="store_true", default=True,
                        help="accepted for compatibility; output is always deterministic")

    p = _ArgumentParser(prog="pbcmdp", description="Compile pBC+ action descriptions into MDPs and solve them.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("states", parents=[common], help="list the states of the transition system")
    sub.add_parser("actions", parents=[common], help="list the executable action profiles")
    sub.add_parser("mdp", parents=[common], help="dump the MDP tensors")
    s = sub.add_parser("solve", parents=[common], help="optimal policy (finite horizon or discounted)")
    s.add_argument("--horizon", type=_nonneg_int)
    s.add_argument("--gamma", type=float)
    s.add_argument("--epsilon", type=float, default=1e-6)
    s.add_argument("--initial", help="untimed fluent formula selecting the reported start states")
    m = sub.add_parser("meu", parents=[common], help="best action sequence by maximum expected utility")
    m.add_argument("--horizon", type=_nonneg_int, required=True)
    m.add_argument("--evidence", help="timed formula, e.g. '0:~P & 0:~Q'")
    e = sub.add_parser("eval", parents=[common], help="query probability and expected utility")
    e.add_argument("--horizon", type=_nonneg_int, required=True)
    e.add_argument("--query")
    e.add_argument("--evidence")
    return p


def run(argv=None) -> tuple[int, str, str]:
    """Run one command; returns (exit code, stdout text, stderr text)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except CliError as exc:
        return exc.code, "", f"error[{exc.kind}]: {_one_line(exc)}\n"
    old_limit = engine.MODEL_LIMIT
    engine.MODEL_LIMIT = args.max_models
    try:
        D = load(args.input)
        return 0, COMMANDS[args.command](args, D), ""
    except CliError as exc:
        return exc.code, "", f"error[{exc.kind}]: {_one_line(exc)}\n"
    except (ResourceLimitError, ResourceGuardError, TooManyDecisionsError) as exc:
        return 5, "", f"error[resource]: {_one_line(exc)}\n"
    except (ZeroProbabilityError, ImpossibleConditionError, NoStableModelError) as exc:
        return 4, "", f"error[infeasible]: {_one_line(exc)}\n"
    except AssumptionViolationError as exc:
        return 3, "", f"error[assumption]: {_one_line(exc)}\n"
    except (GroundingError, TransitionError) as exc:
        return 2, "", f"error[validation]: {_one_line(exc)}\n"
    except UnknownAtomError as exc:
        return 1, "", f"error[input]: {_one_line(exc)}\n"
    finally:
        engine.MODEL_LIMIT = old_limit


def main(argv=None) -> int:
    code, out, err = run(argv)
    sys.stdout.write(out)
    sys.stderr.write(err)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
