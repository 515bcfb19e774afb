"""Command-line front end of the approximation toolkit.

Every command parses exact inputs, calls one engine, prints (or writes) JSON
and leaves a manifest next to any artefact it wrote. Library exceptions are
mapped to exit codes here and nowhere else.
"""
import argparse
import logging
import sys
from dataclasses import replace
from fractions import Fraction
from typing import Any, Dict, List, Optional

from src.acceptance import SUITES, run_acceptance
from src.arith_sums import ArithmeticSums
from src.asymptotic import AsymptoticSearch
from src.cf_core import convergents, expand, parse_real
from src.config import RunConfig, load_settings, setup_logging, use_settings
from src.congruence import parse_constraint
from src.errors import ApproximationError, ParseError, PrecisionCapError, PreconditionError
from src.metric_lab import BBTrialSpec, borel_bernstein_trial, khintchine_block_trial, survival_curve, uniform_survival
from src.orchard import OrchardScene, default_slope_grid, min_blocking_radius, polya_baseline, render, visibility
from src.report_visualizer import ReportVisualizer
from src.reporting import dumps, hits_frame, sums_frame, write_csv, write_json, write_manifest, write_text
from src.three_distance import gaps_direct, verify
from src.uniform import PsiSpec, badly_witness, cns_report, dirichlet_scan, exponent_probe, witness

logger = logging.getLogger("approx")


# argument parsing helpers

def fraction_arg(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {text}") from exc


def int_list(text: str) -> List[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text}") from exc


def pair_arg(text: str) -> List[Fraction]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected lo,hi: {text}")
    return [fraction_arg(p) for p in parts]


def parse_model(text: str) -> Dict[str, Any]:
    """'asymptotic' or 'uniform:R'"""
    if text == "asymptotic":
        return {"model": "asymptotic"}
    if text.startswith("uniform:"):
        try:
            return {"model": "uniform", "uniform_radius": Fraction(text.split(":", 1)[1])}
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"cannot parse radius model '{text}'") from exc
    raise ParseError(f"unknown radius model '{text}': expected asymptotic or uniform:R")


def common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the JSON result here instead of stdout")
    common.add_argument("--csv", help="write the tabular part as CSV")
    common.add_argument("--html", help="write plotly figures as HTML")
    common.add_argument("--config", help="dotenv-style settings file")
    common.add_argument("--workers", type=int, help="parallel workers (results do not depend on it)")
    common.add_argument("--precision-cap", type=int, help="largest working precision in bits")
    common.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
    common.add_argument("--seed", type=int, default=2024)
    return common


def build_parser() -> argparse.ArgumentParser:
    common = common_parser()
    parser = argparse.ArgumentParser(prog="approx", description="Rational approximation with congruence constraints")
    commands = parser.add_subparsers(dest="command", required=True)

    cf = commands.add_parser("cf", parents=[common], help="continued fraction and convergents")
    cf.add_argument("--xi", required=True)
    cf.add_argument("--n", type=int, default=10)

    hits = commands.add_parser("hits", parents=[common], help="asymptotic hits")
    hits.add_argument("--xi", required=True)
    hits.add_argument("--abrs", required=True)
    hits.add_argument("--factor", type=fraction_arg, default=Fraction(1, 4))
    hits.add_argument("--qmax", type=int, required=True)
    hits.add_argument("--alpha", help="inhomogeneous shift")
    hits.add_argument("--grid", type=int_list, help="Q values for hit counts")

    uniform = commands.add_parser("uniform", parents=[common], help="uniform approximation")
    uniform.add_argument("subcommand", choices=["scan", "cns", "witness", "exponent", "badly"])
    uniform.add_argument("--xi", required=True)
    uniform.add_argument("--abrs", required=True)
    uniform.add_argument("--psi", default="1,1,0")
    uniform.add_argument("--qmin", type=int, default=1)
    uniform.add_argument("--qmax", type=int, default=1000)
    uniform.add_argument("--q", type=fraction_arg, help="Q for witness and badly")
    uniform.add_argument("--kmax", type=int, default=20)
    uniform.add_argument("--M", type=int)
    uniform.add_argument("--alpha", default="rat:0/1")

    threedist = commands.add_parser("threedist", parents=[common], help="gap spectrum of {i xi}")
    threedist.add_argument("--xi", required=True)
    threedist.add_argument("--q", type=int, required=True)
    threedist.add_argument("--verify", action="store_true")

    sums = commands.add_parser("sums", parents=[common], help="arithmetic sums")
    sums.add_argument("subcommand", choices=["lemma1", "lemma2", "regcount"])
    sums.add_argument("--x", type=int, default=10**5)
    sums.add_argument("--qmax", type=int, default=100)
    sums.add_argument("--ar", type=int_list, default=[2, 1])
    sums.add_argument("--uv", type=int_list, default=[1, 0])
    sums.add_argument("--q", type=int_list, default=[200, 400, 800])
    sums.add_argument("--abrs", default="2,2,1,1")
    sums.add_argument("--interval", type=pair_arg, default=[Fraction(0), Fraction(1)])

    metric = commands.add_parser("metric", parents=[common], help="Monte-Carlo experiments")
    metric.add_argument("subcommand", choices=["khintchine", "uniform", "bb"])
    metric.add_argument("--abrs", default="2,2,1,1")
    metric.add_argument("--psi", default="1,1,0")
    metric.add_argument("--samples", type=int, default=1000)
    metric.add_argument("--block", type=int_list, default=[64, 128])
    metric.add_argument("--qgrid", type=int_list, default=[10, 100, 1000])
    metric.add_argument("--require-gcd", action="store_true")
    metric.add_argument("--A", type=int, default=2)
    metric.add_argument("--d", type=int, default=1)
    metric.add_argument("--spacing", type=int, default=2)
    metric.add_argument("--rule", choices=["fixed", "annihilating"], default="fixed")
    metric.add_argument("--digits", type=int_list, default=[1])
    metric.add_argument("--b", type=int, default=2)
    metric.add_argument("--k-range", type=int_list, default=[1, 10])
    metric.add_argument("--phi-scale", type=fraction_arg, default=Fraction(1))
    metric.add_argument("--phi-power", type=fraction_arg, default=Fraction(1))

    orchard = commands.add_parser("orchard", parents=[common], help="orchard visibility")
    orchard.add_argument("subcommand", choices=["view", "minradius", "polya", "render"])
    orchard.add_argument("--abrs", default="2,2,1,1")
    orchard.add_argument("--model", default="asymptotic")
    orchard.add_argument("--depth", type=int, default=30)
    orchard.add_argument("--glade", type=fraction_arg, default=Fraction(0))
    orchard.add_argument("--mode", choices=["euclid", "vertical"], default="euclid")
    orchard.add_argument("--sector", type=fraction_arg)
    orchard.add_argument("--slope", action="append", default=[])
    orchard.add_argument("--N", type=int, default=10)
    orchard.add_argument("--radius-factor", type=fraction_arg, default=Fraction(1))
    orchard.add_argument("--slopes", type=int, default=100, help="size of the Polya slope grid")
    orchard.add_argument("--svg")

    accept = commands.add_parser("accept", parents=[common], help="acceptance suites")
    accept.add_argument("suite", choices=list(SUITES) + ["all"])
    accept.add_argument("--quick", action="store_true")
    return parser


def resolve(args: argparse.Namespace) -> RunConfig:
    """Layer environment, config file and flags; install the settings"""
    settings = load_settings(args.config)
    overrides = {}
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.precision_cap is not None:
        overrides["precision_cap"] = args.precision_cap
    if args.log_level:
        overrides["log_level"] = args.log_level
    settings = replace(settings, **overrides)
    if settings.workers < 1 or settings.precision_cap < 64:
        raise PreconditionError("--workers must be positive and --precision-cap at least 64")
    use_settings(settings)
    setup_logging(settings.log_level)
    parameters = {
        k: (str(v) if isinstance(v, Fraction) else [str(x) for x in v] if isinstance(v, list) else v)
        for k, v in vars(args).items()
        if k not in ("command", "subcommand", "xi", "abrs", "psi", "seed", "out", "csv", "svg", "html", "config",
                     "workers", "precision_cap", "log_level")
    }
    return RunConfig(
        command=args.command,
        subcommand=getattr(args, "subcommand", None),
        xi=getattr(args, "xi", None),
        constraint=getattr(args, "abrs", None),
        psi=getattr(args, "psi", None),
        seed=args.seed,
        precision_cap=settings.precision_cap,
        workers=settings.workers,
        out=args.out,
        csv=args.csv,
        svg=getattr(args, "svg", None),
        html=args.html,
        format="svg" if getattr(args, "svg", None) else "json",
        parameters=parameters,
    )


def emit(run: RunConfig, payload: Any) -> None:
    if run.out:
        write_json(run.out, payload)
    else:
        print(dumps(payload))


# command handlers

def cf_command(args, run: RunConfig) -> Any:
    spec = parse_real(args.xi)
    cf = expand(spec)
    horizon = cf.horizon
    n = args.n if horizon is None else min(args.n, horizon)
    table = convergents(cf, n)
    return {"xi": spec.to_text(), "expansion": cf.to_dict(), "convergents": table.rows()}


def hits_command(args, run: RunConfig) -> Any:
    xi = parse_real(args.xi)
    c = parse_constraint(args.abrs)
    alpha = parse_real(args.alpha) if args.alpha else None
    search = AsymptoticSearch(c, workers=run.workers, cap_bits=run.precision_cap)
    hits = search.brute_hits(xi, args.factor, args.qmax, alpha)
    grid = args.grid or [args.qmax]
    counts = [(Q, len({h.N for h in hits if h.N <= Q})) for Q in sorted(grid)]
    if run.csv:
        write_csv(run.csv, hits_frame(hits))
    if run.html:
        visualizer = ReportVisualizer()
        figure = visualizer.hits_figure(counts, [float(h.quality.mid) for h in hits], float(args.factor))
        visualizer.write_html({"hits": figure}, run.html)
    return {"constraint": c.to_dict(), "factor": args.factor, "counts": counts, "hits": hits}


def uniform_command(args, run: RunConfig) -> Any:
    xi = parse_real(args.xi)
    c = parse_constraint(args.abrs)
    psi = PsiSpec.parse(args.psi)
    cap = run.precision_cap
    if args.subcommand == "scan":
        failing, undecided = dirichlet_scan(xi, c, psi, args.qmin, args.qmax, cap)
        if undecided:
            logger.warning("%d Q left undecided", len(undecided))
        return {"failing": failing, "undecided": undecided, "psi": psi}
    if args.subcommand == "cns":
        return cns_report(xi, c, psi, args.kmax, args.M)
    if args.subcommand == "exponent":
        value, argmax = exponent_probe(xi, c, args.qmax, cap)
        return {"D_max": value, "argmax": argmax}
    if args.q is None:
        raise PreconditionError(f"uniform {args.subcommand} needs --q")
    if args.subcommand == "witness":
        return witness(xi, c, args.q, psi, args.M, cap)
    return badly_witness(xi, parse_real(args.alpha), c, args.q, args.M, cap)


def threedist_command(args, run: RunConfig) -> Any:
    xi = parse_real(args.xi)
    if args.verify:
        ok, report = verify(xi, args.q)
        if not ok:
            raise PreconditionError("three-distance verification failed: " + "; ".join(report["problems"]))
        return report
    return gaps_direct(xi, args.q, run.precision_cap)


def sums_command(args, run: RunConfig) -> Any:
    sums = ArithmeticSums()
    rows = []
    if args.subcommand == "lemma1":
        a, r = args.ar
        for q in range(1, args.qmax + 1):
            try:
                exact = sums.coprime_progression_count(args.x, q, a, r)
            except PreconditionError:
                continue
            main = sums.coprime_main_term(args.x, q, a, r)
            rows.append((f"q={q}", exact, main, exact - main))
    elif args.subcommand == "lemma2":
        u, v = args.uv
        for Q in args.q:
            exact = sums.phi_progression_sum(u, v, Q)
            main = sums.c_constant(u, v).mid * Q * Q
            rows.append((f"Q={Q}", exact, main, exact - main))
    else:
        c = parse_constraint(args.abrs)
        interval = tuple(args.interval)
        for Q in args.q:
            exact = sums.regular_system_count(c, interval, Q)
            main = (interval[1] - interval[0]) * Q * Q
            rows.append((f"Q={Q}", exact, main, exact - main))
    frame = sums_frame(rows)
    if run.csv:
        write_csv(run.csv, frame)
    return {"subcommand": args.subcommand, "rows": frame.to_dict(orient="records")}


def metric_command(args, run: RunConfig) -> Any:
    visualizer = ReportVisualizer()
    c = parse_constraint(args.abrs)
    if args.subcommand == "khintchine":
        if len(args.block) != 2:
            raise PreconditionError("--block needs N1,N2")
        report = khintchine_block_trial(c, PsiSpec.parse(args.psi), tuple(args.block), args.samples, args.seed,
                                        args.require_gcd, run.workers, run.precision_cap)
        figures = {"blocks": visualizer.block_figure(report)}
        frame = report.to_frame()
    elif args.subcommand == "uniform":
        report = uniform_survival(c, PsiSpec.parse(args.psi), args.samples, args.qgrid, args.seed,
                                  workers=run.workers, cap_bits=run.precision_cap)
        figures = {"survival": visualizer.survival_figure([report])}
        frame = survival_curve(report)
    else:
        if len(args.k_range) != 2:
            raise PreconditionError("--k-range needs k1,k2")
        spec = BBTrialSpec(args.A, args.d, args.spacing, args.phi_scale, args.phi_power, args.rule,
                           tuple(args.digits) if args.rule == "fixed" else (), args.b)
        report = borel_bernstein_trial(spec, args.samples, tuple(args.k_range), args.seed, run.workers,
                                       run.precision_cap)
        figures = {"events": visualizer.block_figure(report)}
        frame = report.to_frame()
    if run.csv:
        write_csv(run.csv, frame)
    if run.html:
        visualizer.write_html(figures, run.html)
    return report


def orchard_command(args, run: RunConfig) -> Any:
    c = parse_constraint(args.abrs)
    if args.subcommand == "polya":
        return polya_baseline(c, args.N, default_slope_grid(args.slopes), args.radius_factor)
    scene = OrchardScene(c, args.depth, glade=args.glade, mode=args.mode, sector=args.sector, **parse_model(args.model))
    slopes = [parse_real(s) for s in args.slope]
    if args.subcommand == "render":
        document = render(scene, slopes)
        if args.svg:
            write_text(args.svg, document)
            return {"svg": args.svg, "scene": scene}
        sys.stdout.write(document + "\n")
        return None
    if not slopes:
        raise PreconditionError(f"orchard {args.subcommand} needs --slope")
    if args.subcommand == "view":
        return [{"slope": s.to_text(), "result": visibility(scene, s, run.precision_cap)} for s in slopes]
    return [{"slope": s.to_text(), "min_radius": min_blocking_radius(scene, s, run.precision_cap)} for s in slopes]


def accept_command(args, run: RunConfig) -> Any:
    reports = run_acceptance(args.suite, args.quick, run.workers)
    passed = all(r.passed for r in reports)
    if not passed:
        logger.warning("acceptance failed: %s", ", ".join(r.suite for r in reports if not r.passed))
    return {"passed": passed, "suites": reports}


HANDLERS = {
    "cf": cf_command,
    "hits": hits_command,
    "uniform": uniform_command,
    "threedist": threedist_command,
    "sums": sums_command,
    "metric": metric_command,
    "orchard": orchard_command,
    "accept": accept_command,
}


def undecided_count(payload: Any) -> int:
    """Undecided items a handler reported, either as a list or as a count"""
    undecided = payload.get("undecided") if isinstance(payload, dict) else getattr(payload, "undecided", None)
    if isinstance(undecided, (list, tuple)):
        return len(undecided)
    return int(undecided or 0)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        run = resolve(args)
        payload = HANDLERS[args.command](args, run)
        if payload is not None:
            emit(run, payload)
        undecided = undecided_count(payload)
        if undecided:
            code = PrecisionCapError.exit_code
        elif args.command == "accept" and not payload["passed"]:
            code = 1
        else:
            code = 0
        write_manifest(run, {"exit_code": code, "undecided": undecided})
    except ApproximationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return PreconditionError.exit_code
    if undecided:
        print(f"error: {undecided} results undecided at the precision cap", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
