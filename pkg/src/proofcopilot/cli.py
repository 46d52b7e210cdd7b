"""Command line entry points: serve, bench, and the repair bot."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bot import (
    DryRunHost,
    build_pr_payload,
    patched_files,
    relativize,
    render_diff,
    repair_corpus,
    scan_sorries,
)
from .corpus import load_corpus
from .errors import CopilotError
from .generation import GeneratorSpec
from .harness import benchmark_corpus, default_tool_specs, render_table
from .search import SearchLimits
from .service import ServiceConfig, make_server


def _parse_generator(text: str) -> GeneratorSpec:
    """builtin | external:<host>:<port>[:<name>]"""
    if text == "builtin":
        return GeneratorSpec.builtin()
    if text.startswith("external:"):
        parts = text.split(":")
        if len(parts) not in (3, 4):
            raise argparse.ArgumentTypeError(f"bad generator {text!r}")
        host, port = parts[1], parts[2]
        name = parts[3] if len(parts) == 4 else "builtin"
        try:
            return GeneratorSpec.external(name, host, int(port))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad port in {text!r}") from None
    raise argparse.ArgumentTypeError(f"unknown generator {text!r}")


def _parse_limits(text: str) -> SearchLimits:
    """<maxExpansions>,<maxDepth>,<timeoutMillis>"""
    try:
        expansions, depth, millis = (int(x) for x in text.split(","))
        return SearchLimits(expansions, depth, millis)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"limits must be three comma-separated integers, got {text!r}"
        ) from None


def cmd_serve(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus) if args.corpus else None
    config = ServiceConfig(
        generator=args.generator,
        corpus=corpus,
        static_dir=Path(args.ui).resolve() if args.ui else None,
        debug=args.debug,
    )
    server = make_server(config, args.host, args.port)
    host, port = server.server_address
    print(f"listening on http://{host}:{port} "
          f"({len(corpus.records) if corpus else 0} lemmas loaded)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    tools = default_tool_specs(args.generator)
    report = benchmark_corpus(corpus, tools)
    out = Path(args.out)
    out.write_text(report.to_json(), encoding="utf-8")
    print(render_table(report), end="")
    print(f"\nreport written to {out}")
    return 0


def cmd_bot_scan(args: argparse.Namespace) -> int:
    root = Path(args.root)
    corpus = load_corpus(root)
    sites = scan_sorries(corpus)
    if not sites:
        print("no sorry sites found")
        return 0
    print(f"found {len(sites)} sorry site{'s' if len(sites) != 1 else ''}")
    repairs, failures = repair_corpus(corpus, args.generator, args.limits)
    for site, err in failures:
        print(f"  unrepaired {site.theorem_name} ({Path(site.path).name}): {err}")
    for repair in repairs:
        print(f"  repaired {repair.site.theorem_name}: {repair.patch.replacement_text} "
              f"[{repair.expansions} expansions]")
    if not repairs:
        print("nothing repaired")
        return 1
    rel = relativize(repairs, root)
    originals = {}
    for cf in corpus.files:
        for repair in rel:
            if Path(cf.path).resolve() == (root / repair.patch.path).resolve():
                originals[repair.patch.path] = cf.text
    diff = render_diff(rel, originals)
    payload = build_pr_payload(rel, originals)
    result = DryRunHost(args.dry_run_dir).submit(payload, diff)
    print(f"dry-run output in {result.detail}")
    if args.apply:
        finals = patched_files(rel, originals)
        for path, content in finals.items():
            (root / path).write_text(content, encoding="utf-8")
        print(f"applied {len(repairs)} repair{'s' if len(repairs) != 1 else ''} in place")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="copilot", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8350)
    serve.add_argument("--corpus", help="directory of .thy files")
    serve.add_argument("--generator", type=_parse_generator,
                       default=GeneratorSpec.builtin(),
                       help="builtin | external:<host>:<port>[:<name>]")
    serve.add_argument("--ui", help="static bundle directory served under /ui")
    serve.add_argument("--debug", action="store_true",
                       help="request logging + consistency endpoint")
    serve.set_defaults(handler=cmd_serve)

    bench = sub.add_parser("bench", help="run the collaboration benchmark")
    bench.add_argument("--corpus", required=True)
    bench.add_argument("--out", default="bench_report.json")
    bench.add_argument("--generator", type=_parse_generator,
                       default=GeneratorSpec.builtin())
    bench.set_defaults(handler=cmd_bench)

    bot = sub.add_parser("bot", help="sorry-repair bot")
    bot_sub = bot.add_subparsers(dest="bot_command", required=True)
    scan = bot_sub.add_parser("scan", help="scan for sorries and attempt repairs")
    scan.add_argument("--root", required=True, help="corpus directory to scan")
    scan.add_argument("--apply", action="store_true",
                      help="splice verified repairs into the files")
    scan.add_argument("--dry-run-dir", default="bot-out",
                      help="where pr_payload.json and changes.diff go")
    scan.add_argument("--limits", type=_parse_limits, default=SearchLimits(),
                      help="maxExpansions,maxDepth,timeoutMillis")
    scan.add_argument("--generator", type=_parse_generator,
                      default=GeneratorSpec.builtin())
    scan.set_defaults(handler=cmd_bot_scan)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except CopilotError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
