"""Command-line entry point: ``ambipersuade <command> ...``.

Exit status is 0 on success, 1 when the input is rejected by the model
(domain or instance errors) and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from .ambiguity import is_obedient_ambiguous, parse_attitude
from .bp import InternalError, indirect_utility_curve, solve_bp
from .config import DEFAULT_CONFIG, SolverConfig
from .game import DomainError, InstanceError
from .io import load_ambiguous, load_eta, load_experiment, load_game, load_split
from .meu import meu_obedience, meu_supremum, meu_supremum_strong
from .report import SolveReport
from .solver import SolverError, solve_ambiguous
from .splitting import binary_improvement, find_pareto_split

COMMANDS = ("solve-bp", "solve-ambiguous", "check", "split", "improve", "meu", "prior-ambiguity", "curve", "validate")


def _positional(p: argparse.ArgumentParser):
    p.add_argument("game_pos", nargs="?", metavar="GAME", help="game JSON path or bundled fixture name")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--game", help="game JSON path or bundled fixture name")
    p.add_argument("--seed", type=int, default=DEFAULT_CONFIG.seed)
    p.add_argument("--budget", type=int, default=DEFAULT_CONFIG.budget, help="random kernels in the sample pool")
    p.add_argument("--tol", type=float, default=DEFAULT_CONFIG.bisect_tol, help="bisection width on the sender value")
    p.add_argument("--threads", type=int, default=1, help="accepted for scripting; solvers run single-threaded")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--no-timestamp", action="store_true", help="omit timestamp and timing so reports are byte-stable")
    return p


def _attitudes(p: argparse.ArgumentParser, sender=True):
    if sender:
        p.add_argument("--phi-s", default="linear", help="sender attitude, e.g. linear, log:a,b,c,d, cara:alpha, power:gamma,shift")
    p.add_argument("--phi-r", default="linear", help="receiver attitude, same grammar plus meu")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ambipersuade", description="Persuasion with ambiguous experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    c = _common()

    def command(name, help, game=True):
        p = sub.add_parser(name, parents=[c], help=help)
        if game:
            _positional(p)
        return p

    p = command("solve-bp", "Bayesian persuasion optimum")
    p.add_argument("--curve", help="also write the two-state indirect utility table as CSV")

    p = command("solve-ambiguous", "optimal ambiguous experiment")
    _attitudes(p)

    p = command("check", "obedience of an ambiguous experiment")
    p.add_argument("--ambiguous", required=True)
    _attitudes(p, sender=False)

    p = command("split", "Pareto-ranked splitting of an experiment")
    p.add_argument("--experiment", help="experiment JSON; default is the BP optimum")
    p.add_argument("--direction", help="experiment JSON used as the first candidate for hi")
    p.add_argument("--lam-mode", choices=("max", "shrink"), default="max")

    p = command("improve", "binary improvement from a Pareto-ranked splitting")
    p.add_argument("--experiment", help="base experiment JSON; default is the BP optimum")
    p.add_argument("--split", help="split JSON; default searches for one")
    _attitudes(p)

    p = command("meu", "supremum for a maxmin receiver")
    p.add_argument("--strong", action="store_true", help="strong obedience: recommendations in A0")
    p.add_argument("--mu", type=float, default=0.999, help="witness weight on the better experiment")

    p = command("prior-ambiguity", "pre-existing ambiguity over priors", game=False)
    p.add_argument("action", choices=("check", "improve", "delta"))
    _positional(p)
    p.add_argument("--eta", help="prior ambiguity JSON {priors, weights}")
    p.add_argument("--ambiguous")
    p.add_argument("--experiment")
    p.add_argument("--split")
    p.add_argument("--directions", type=int, default=16)
    _attitudes(p, sender=False)

    p = command("curve", "two-state indirect utility and its concave envelope")
    p.add_argument("--resolution", type=int, default=200)
    p.add_argument("--csv", help="write the table as CSV")

    p = command("validate", "necessary optimality conditions")
    p.add_argument("--ambiguous", help="candidate JSON; default solves first")
    _attitudes(p)
    return parser


def _config(args) -> SolverConfig:
    return DEFAULT_CONFIG.with_(budget=args.budget, seed=args.seed, bisect_tol=args.tol, threads=args.threads)


def _game(parser, args):
    src = args.game or args.game_pos
    if src is None:
        parser.error("a game is required (positional GAME or --game)")
    return load_game(src)


def _base(game, args):
    return load_experiment(args.experiment, game) if args.experiment else solve_bp(game).experiment


def _write(path, text):
    Path(path).write_text(text)


def _dispatch(parser, args) -> tuple:
    game = _game(parser, args)
    cfg = _config(args)
    cmd = args.command
    if cmd == "solve-bp":
        sol = solve_bp(game, cfg.tol)
        res = sol.to_dict()
        if args.curve:
            _write(args.curve, indirect_utility_curve(game).to_csv())
            res["curve_csv"] = args.curve
        return game, cfg, res
    if cmd == "curve":
        tab = indirect_utility_curve(game, args.resolution)
        if args.csv:
            _write(args.csv, tab.to_csv())
        rows = [{"belief": q, "actions": list(a), "iu": v, "cav_iu": cv} for q, a, v, cv in tab.rows()]
        return game, cfg, {"rows": rows, "cav_at_prior": tab.cav_at(float(game.prior[-1]))}
    if cmd == "solve-ambiguous":
        sol = solve_ambiguous(game, parse_attitude(args.phi_s), parse_attitude(args.phi_r), cfg)
        return game, cfg, sol.to_dict()
    if cmd == "check":
        amb = load_ambiguous(args.ambiguous, game)
        att_r = parse_attitude(args.phi_r)
        if att_r.family == "meu":
            ok, K = meu_obedience(game, amb)
            return game, cfg, {"obedient": ok, "effective": K, "model": "meu"}
        ob = is_obedient_ambiguous(game, amb, att_r)
        return game, cfg, {
            "obedient": ob.obedient,
            "effective_measure": ob.effective_measure,
            "effective": ob.effective.kernel,
            "min_slack": ob.report.min_slack,
            "worst_pair": ob.report.worst_pair(),
        }
    if cmd == "split":
        base = _base(game, args)
        direction = load_experiment(args.direction, game) if args.direction else None
        sp = find_pareto_split(game, base, direction=direction, budget=cfg.budget, seed=cfg.seed, lam_mode=args.lam_mode)
        return game, cfg, {"found": sp is not None, "split": sp.to_dict() if sp else None}
    if cmd == "improve":
        base = _base(game, args)
        sp = load_split(args.split, game) if args.split else find_pareto_split(game, base, budget=cfg.budget, seed=cfg.seed)
        if sp is None:
            raise DomainError("no Pareto-ranked splitting of the base experiment was found")
        res = binary_improvement(game, base, sp, parse_attitude(args.phi_r), parse_attitude(args.phi_s))
        return game, cfg, res.to_dict()
    if cmd == "meu":
        sol = (meu_supremum_strong if args.strong else meu_supremum)(game, cfg.tol, args.mu)
        res = sol.to_dict()
        res["witness_value"] = sol.witness_value(game) if not sol.degenerate else sol.supremum
        return game, cfg, res
    if cmd == "prior-ambiguity":
        return game, cfg, _prior(game, cfg, args)
    if cmd == "validate":
        from .validate import validate_optimality

        att_s, att_r = parse_attitude(args.phi_s), parse_attitude(args.phi_r)
        cand = load_ambiguous(args.ambiguous, game) if args.ambiguous else solve_ambiguous(game, att_s, att_r, cfg)
        return game, cfg, validate_optimality(game, cand, att_s, att_r, seed=cfg.seed).to_dict()
    raise AssertionError(cmd)


def _prior(game, cfg, args) -> dict:
    from .prior import binary_improvement_under_eta, is_obedient_under_eta, robustness_delta

    att_r = parse_attitude(args.phi_r)
    if args.action == "delta":
        rep = robustness_delta(game, att_r, cfg, directions=args.directions)
        return {"delta": None if rep is None else rep.delta, "report": None if rep is None else rep.to_dict()}
    if not args.eta:
        raise InstanceError("--eta is required for prior-ambiguity check and improve")
    eta = load_eta(args.eta)
    if args.action == "check":
        if not args.ambiguous:
            raise InstanceError("--ambiguous is required for prior-ambiguity check")
        return is_obedient_under_eta(game, load_ambiguous(args.ambiguous, game), eta, att_r).to_dict()
    base = _base(game, args)
    sp = load_split(args.split, game) if args.split else find_pareto_split(game, base, budget=cfg.budget, seed=cfg.seed)
    if sp is None:
        raise DomainError("no Pareto-ranked splitting of the base experiment was found")
    return binary_improvement_under_eta(game, base, sp, eta, att_r).to_dict()


def run(argv: Optional[Sequence[str]] = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    t0 = time.perf_counter()
    try:
        game, cfg, results = _dispatch(parser, args)
    except (DomainError, InstanceError, SolverError, InternalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    rep = SolveReport(
        command=argv,
        game_digest=game.digest(),
        config=cfg.to_dict(),
        results=results,
        seed=cfg.seed,
        timing=None if args.no_timestamp else round(time.perf_counter() - t0, 6),
        timestamp=None if args.no_timestamp else _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    )
    text = rep.to_json()
    if args.out:
        _write(args.out, text)
    else:
        stdout.write(text)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
