"""
p4f-cfa - Command Line

    python -m api.cli analyze prog.scm --value-policy 1cfa --kont-policy p4f --check-precision
    python -m api.cli bench --corpus data/corpus --matrix --out report.json
    python -m api.cli serve --port 8000

Exit codes: 0 on success, 2 when the precision check finds violations,
1 on any error, including benchmark entries that failed.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from config.settings import configure_logging, settings
from core.bench_service import bench_service
from core.concrete import concrete_run, trace_lines
from core.corpus import CorpusService
from core.exceptions import AnalysisError
from core.fixpoint import build_report
from core.models import KontPolicy, PolicyPair, ValuePolicy, WorklistOrder
from core.services import analysis_service

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_IMPRECISE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="p4f-cfa", description=settings.APP_DESCRIPTION)
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.APP_VERSION}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress at INFO level")
    commands = parser.add_subparsers(dest="command", required=True)

    analyze = commands.add_parser("analyze", help="analyze one program")
    analyze.add_argument("file", type=Path, help="program source (s-expression)")
    analyze.add_argument("--value-policy", type=ValuePolicy, default=ValuePolicy.MONO,
                         choices=list(ValuePolicy), metavar="{mono,1cfa}")
    analyze.add_argument("--kont-policy", type=KontPolicy, default=KontPolicy.P4F,
                         choices=list(KontPolicy), metavar="{naive,naive-1cfa,aac,p4f}")
    analyze.add_argument("--order", type=WorklistOrder, default=WorklistOrder.FIFO,
                         choices=list(WorklistOrder), metavar="{fifo,lifo}")
    analyze.add_argument("--json", type=Path, metavar="OUT", help="write the report as JSON ('-' for stdout)")
    analyze.add_argument("--dot", type=Path, metavar="OUT", help="write the oracle's Dyck state graph as DOT")
    analyze.add_argument("--trace", type=Path, metavar="OUT", help="write the concrete trace as JSON lines")
    analyze.add_argument("--oracle-depth", type=int, default=None, metavar="N",
                         help=f"oracle stack bound (default {settings.ORACLE_DEPTH_BOUND})")
    analyze.add_argument("--check-precision", action="store_true", help="compare against the bounded oracle")

    bench = commands.add_parser("bench", help="run the AAC/P4F comparison over a corpus")
    bench.add_argument("--corpus", type=Path, default=settings.CORPUS_DIR, metavar="DIR")
    bench.add_argument("--matrix", action="store_true", help="run all value x continuation policy pairs")
    bench.add_argument("--out", type=Path, default=Path("report.json"), help="JSON report path")
    bench.add_argument("--csv", type=Path, default=None, help="also write a CSV table")
    bench.add_argument("--gnuplot", type=Path, default=None, help="also write gnuplot histogram data")
    bench.add_argument("--chart", type=Path, default=None, help="also write an HTML bar chart")
    bench.add_argument("--workers", type=int, default=None, help="parallel worker processes")

    serve = commands.add_parser("serve", help="run the HTTP API")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _write(path: Path, text: str) -> None:
    if str(path) == "-":
        sys.stdout.write(text + "\n")
    else:
        path.write_text(text)


def cmd_analyze(args: argparse.Namespace) -> int:
    program = analysis_service.parse(args.file.read_text())
    result, wall_ms = analysis_service.run(program, args.value_policy, args.kont_policy, args.order)
    report = build_report(result, args.file.stem, wall_ms)
    status = EXIT_OK

    if args.json is not None:
        _write(args.json, report.model_dump_json(indent=2))
    else:
        print(f"{report.program} [{result.policy.key}]: {report.configurations} configurations, "
              f"{report.states_visited} states visited, {report.transitions} transitions")
        for var, addrs in report.flows.items():
            for addr, values in addrs.items():
                print(f"  {addr} -> {{{', '.join(values)}}}")
        for message in report.diagnostics:
            print(f"  warning: {message}")

    if args.trace is not None:
        run = concrete_run(program)
        _write(args.trace, "\n".join(trace_lines(run)))

    if args.dot is not None:
        graph = analysis_service.dyck_graph(program, args.value_policy, args.oracle_depth)
        _write(args.dot, graph.to_dot())

    if args.check_precision:
        precision = analysis_service.check_precision(result, args.oracle_depth)
        print(f"precision: {precision.checked_pairs} pairs checked, {len(precision.violations)} configuration "
              f"and {len(precision.store_violations)} store violations, "
              f"{precision.unexhausted_configs} unexhausted")
        for v in precision.violations:
            print(f"  missing {v.missing_oracle_config} for {v.config}")
        for v in precision.store_violations:
            print(f"  {v.address}: {{{', '.join(v.finite)}}} vs oracle {{{', '.join(v.oracle)}}}")
        if not precision.precise:
            status = EXIT_IMPRECISE
    return status


def cmd_bench(args: argparse.Namespace) -> int:
    corpus = CorpusService(args.corpus)
    if args.matrix:
        pairs = PolicyPair.all()
    else:
        pairs = [PolicyPair(value=v, kont=k) for v in ValuePolicy for k in (KontPolicy.AAC, KontPolicy.P4F)]
    rows = bench_service.run_matrix(corpus.list_entries(), pairs, args.workers)
    report = bench_service.build_report(rows)
    bench_service.write_json(report, args.out)
    if args.csv:
        bench_service.write_csv(rows, args.csv)
    if args.gnuplot:
        bench_service.write_gnuplot(rows, args.gnuplot)
    if args.chart:
        bench_service.write_chart(rows, args.chart)

    for ratio in report.summary.ratios:
        print(f"{ratio.value_policy.value}: AAC/P4F configurations x{ratio.configurations_geomean} "
              f"(max x{ratio.configurations_max}), states x{ratio.states_geomean} (max x{ratio.states_max}) "
              f"over {ratio.programs} programs")
    failed = [row.program for row in rows if row.error or any(c.error for c in row.cells)]
    if failed:
        logger.warning("entries with errors: %s", ", ".join(failed))
        print(f"error: {len(failed)} entries failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run("api.main:app", host=args.host, port=args.port)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging("INFO" if args.verbose else None)
    handlers = {"analyze": cmd_analyze, "bench": cmd_bench, "serve": cmd_serve}
    try:
        return handlers[args.command](args)
    except AnalysisError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
