#!/usr/bin/env python3
"""Build the full grid of fine-tuning datasets from expert gameplay.

Records N expert episodes, then exports every dataset variant: plain
Alpaca, sliding-window (n=3), look-ahead (k=3), synthetic reasoning
annotations, and chat-JSONL with the HUMAN keyword.

Usage: python3 scripts/make_training_data.py [--gameplays N] [--out-dir DIR]
"""

import argparse
from pathlib import Path

from pursuitlab.datasets import (
    annotate_cot,
    build_records,
    lookahead,
    record_episode,
    save_log,
    to_alpaca,
    to_chat_jsonl,
    windowed,
)
from pursuitlab.episode import EpisodeConfig
from pursuitlab.navball import NavballAgent


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--gameplays", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--max-duration", type=float, default=240.0)
    parser.add_argument("--out-dir", default="training_data")
    args = parser.parse_args()

    out_dir = Path(args.out_dir)
    (out_dir / "logs").mkdir(parents=True, exist_ok=True)

    all_records, all_window, all_lookahead, all_cot = [], [], [], []
    human_chat = []
    for seed in range(args.seed, args.seed + args.gameplays):
        config = EpisodeConfig(seed=seed, max_duration=args.max_duration)
        log = record_episode(NavballAgent(), config, agent_kind="navball")
        save_log(log, out_dir / "logs" / f"log_navball_{seed}.json")
        base = build_records(log)
        all_records.extend(base)
        all_window.extend(windowed(base, 3))
        all_lookahead.extend(lookahead(base, 3))
        all_cot.extend(annotate_cot(base))
        human_chat.extend(build_records(log, human_keyword=True))
        print(f"seed {seed}: {len(log.samples)} samples")

    to_alpaca(all_records, out_dir / "alpaca_base.json")
    to_alpaca(all_window, out_dir / "alpaca_window3.json")
    to_alpaca(all_lookahead, out_dir / "alpaca_lookahead3.json")
    to_alpaca(all_cot, out_dir / "alpaca_cot.json")
    to_chat_jsonl(human_chat, out_dir / "chat_human_keyword.jsonl")
    print(f"wrote {len(all_records)} base records (+3 variants) under {out_dir}/")


if __name__ == "__main__":
    main()
