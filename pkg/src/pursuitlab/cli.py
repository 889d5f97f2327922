"""Command-line entry points.

Subcommands: gen-orbits (seeded orbit sampling), record (gameplay logs),
dataset (fine-tuning exports), eval (campaign runner + report), serve
(live session server for the pilot console), plot (static plots from
exported trajectory files).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .datasets import (
    annotate_cot,
    build_records,
    load_log,
    lookahead,
    record_episode,
    save_log,
    split_records,
    to_alpaca,
    to_chat_jsonl,
    windowed,
)
from .episode import DEFAULT_EVADER_ORBIT, EpisodeConfig, elements_to_dict
from .evaluation import (
    AGENT_KINDS,
    export_trajectories,
    make_agent_factory,
    render_table,
    run_campaign,
    write_report,
)
from .llm import AgentConfig, ChatMessage
from .navball import NavballParams
from .orbit import OrbitConstraints, generate_orbit


def _add_agent_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--agent", choices=AGENT_KINDS, default="navball")
    parser.add_argument("--endpoint", default=AgentConfig().endpoint,
                        help="chat-completions URL for --agent llm")
    parser.add_argument("--model", default=AgentConfig().model)
    parser.add_argument("--mode", choices=("plain", "augmented", "cot-fewshot"),
                        default="augmented")
    parser.add_argument("--window", type=int, default=0, help="sliding window size")
    parser.add_argument("--timeout", type=float, default=30.0)
    parser.add_argument("--retry-wait", type=float, default=1.0)
    parser.add_argument("--mock-reply", default=None,
                        help="reply text served by --agent mock (default: a valid forward call)")


def _agent_factory(args) -> callable:
    agent_config = AgentConfig(
        endpoint=args.endpoint,
        model=args.model,
        timeout=args.timeout,
        window_size=args.window,
        mode=args.mode,
        retry_wait=args.retry_wait,
    )
    mock_replies = None
    if args.mock_reply is not None:
        mock_replies = [ChatMessage(role="assistant", content=args.mock_reply)]
    return make_agent_factory(args.agent, agent_config=agent_config, mock_replies=mock_replies)


def _add_episode_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--max-duration", type=float, default=240.0)
    parser.add_argument("--evader-threshold", type=float, default=400.0)


def _episode_config(args, seed: int) -> EpisodeConfig:
    return EpisodeConfig(
        seed=seed,
        max_duration=args.max_duration,
        evader_threshold=args.evader_threshold,
    )


def cmd_gen_orbits(args) -> int:
    constraints = OrbitConstraints(
        distance_min=args.distance_min,
        distance_max=args.distance_max,
        e_max=args.e_max,
        inclination_jitter=args.inclination_jitter,
    )
    orbits = [
        elements_to_dict(generate_orbit(DEFAULT_EVADER_ORBIT, constraints, rng_seed=seed))
        for seed in range(args.seed, args.seed + args.count)
    ]
    text = json.dumps(orbits, indent=2)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        print(text)
    return 0


def cmd_record(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    factory = _agent_factory(args)
    for seed in range(args.seed, args.seed + args.count):
        config = _episode_config(args, seed)
        log = record_episode(factory(), config, agent_kind=args.agent)
        path = out_dir / f"log_{args.agent}_{seed}.json"
        save_log(log, path)
        print(f"recorded {len(log.samples)} samples -> {path}")
    return 0


def cmd_dataset(args) -> int:
    log_paths = sorted(Path(args.logs).glob("*.json")) if Path(args.logs).is_dir() else [
        Path(args.logs)
    ]
    if not log_paths:
        print(f"no logs found under {args.logs}", file=sys.stderr)
        return 1
    records = []
    for path in log_paths:
        log = load_log(path)
        per_log = build_records(log, human_keyword=args.human_keywords)
        if args.cot:
            per_log = annotate_cot(per_log)
        per_log = windowed(per_log, args.window)
        per_log = lookahead(per_log, args.lookahead)
        records.extend(per_log)

    def write(recs, path: Path) -> None:
        if args.format == "chat-jsonl":
            to_chat_jsonl(recs, path)
        else:
            to_alpaca(recs, path)
        print(f"wrote {len(recs)} records -> {path}")

    out = Path(args.out)
    if args.split > 0.0:
        train, val = split_records(records, args.split, seed=args.seed)
        write(train, out.with_suffix(".train" + out.suffix))
        write(val, out.with_suffix(".val" + out.suffix))
    else:
        write(records, out)
    return 0


def cmd_eval(args) -> int:
    factory = _agent_factory(args)
    seeds = list(range(args.seed, args.seed + args.episodes))
    results = [] if args.export_trajectories else None
    report = run_campaign(
        factory,
        _episode_config(args, args.seed),
        seeds=seeds,
        agent_label=args.agent,
        collect_results=results,
    )
    print(render_table(report))
    if args.report:
        write_report(report, args.report)
        print(f"report -> {args.report}")
    if args.export_trajectories:
        written = export_trajectories(results, args.export_trajectories)
        print(f"exported {len(written)} trajectory files -> {args.export_trajectories}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(log_dir=args.log_dir, static_dir=args.static)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def cmd_plot(args) -> int:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("plotting needs matplotlib (pip install pursuitlab[plot])", file=sys.stderr)
        return 1

    path = Path(args.trajectory)
    rows = [json.loads(line) for line in path.read_text().splitlines() if line.strip()]
    t = [r["t"] for r in rows]
    rng = [r["range"] for r in rows]
    rate = [r["range_rate"] for r in rows]

    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(8, 6))
    ax1.plot(t, rng)
    ax1.set_ylabel("range (m)")
    ax2.plot(t, rate)
    ax2.set_ylabel("range rate (m/s)")
    ax2.set_xlabel("time (s)")
    fig.suptitle(path.stem)
    fig.tight_layout()
    fig.savefig(args.out, dpi=120)
    print(f"plot -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pursuitlab")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-orbits", help="sample pursuer orbits near the evader")
    gen.add_argument("--count", type=int, default=10)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--distance-min", type=float, default=700.0)
    gen.add_argument("--distance-max", type=float, default=3000.0)
    gen.add_argument("--e-max", type=float, default=0.005)
    gen.add_argument("--inclination-jitter", type=float, default=0.002)
    gen.add_argument("--out", default=None)
    gen.set_defaults(func=cmd_gen_orbits)

    rec = sub.add_parser("record", help="record gameplay logs from an agent")
    _add_agent_options(rec)
    _add_episode_options(rec)
    rec.add_argument("--seed", type=int, default=0)
    rec.add_argument("--count", type=int, default=1)
    rec.add_argument("--out-dir", required=True)
    rec.set_defaults(func=cmd_record)

    ds = sub.add_parser("dataset", help="export fine-tuning datasets from logs")
    ds.add_argument("--logs", required=True, help="log file or directory of logs")
    ds.add_argument("--format", choices=("chat-jsonl", "alpaca"), required=True)
    ds.add_argument("--out", required=True)
    ds.add_argument("--window", type=int, default=0)
    ds.add_argument("--lookahead", type=int, default=1)
    ds.add_argument("--cot", action="store_true",
                    help="prefix outputs with synthetic step-by-step reasoning")
    ds.add_argument("--human-keywords", action="store_true",
                    help="prefix user text with the HUMAN conversation keyword")
    ds.add_argument("--split", type=float, default=0.0,
                    help="validation fraction; writes .train/.val files")
    ds.add_argument("--seed", type=int, default=0, help="split shuffle seed")
    ds.set_defaults(func=cmd_dataset)

    ev = sub.add_parser("eval", help="run a seeded evaluation campaign")
    _add_agent_options(ev)
    _add_episode_options(ev)
    ev.add_argument("--episodes", type=int, default=10)
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--report", default=None, help="write the JSON report here")
    ev.add_argument("--export-trajectories", default=None,
                    help="directory for per-episode trajectory files")
    ev.set_defaults(func=cmd_eval)

    srv = sub.add_parser("serve", help="run the live session server")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8000)
    srv.add_argument("--static", default=None, help="pilot console assets directory")
    srv.add_argument("--log-dir", default=None, help="write finished session logs here")
    srv.set_defaults(func=cmd_serve)

    plot = sub.add_parser("plot", help="render range/range-rate plots from a trajectory file")
    plot.add_argument("--trajectory", required=True)
    plot.add_argument("--out", required=True)
    plot.set_defaults(func=cmd_plot)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
