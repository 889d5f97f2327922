#!/usr/bin/env python3
"""Compare the expert pilot against the naive fixture on seeded episodes.

Prints both campaign tables, the closest-approach ratio, and exports
trajectory files for the first expert episode.

Usage: python3 scripts/run_bot_campaign.py [--episodes N] [--seed S] [--out-dir DIR]
"""

import argparse
from pathlib import Path

from pursuitlab.episode import EpisodeConfig
from pursuitlab.evaluation import (
    export_trajectories,
    make_agent_factory,
    render_table,
    run_campaign,
    write_report,
)


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--episodes", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out-dir", default="campaign_out")
    args = parser.parse_args()

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = EpisodeConfig()
    seeds = list(range(args.seed, args.seed + args.episodes))

    bot_results = []
    bot = run_campaign(
        make_agent_factory("navball"), config, seeds,
        agent_label="navball", collect_results=bot_results,
    )
    naive = run_campaign(make_agent_factory("naive"), config, seeds, agent_label="naive")

    print(render_table(bot))
    print()
    print(render_table(naive))
    ratio = bot.avg_distance / naive.avg_distance
    print(f"\nclosest-approach ratio (expert/naive): {ratio:.4f}")

    write_report(bot, out_dir / "navball_report.json")
    write_report(naive, out_dir / "naive_report.json")
    written = export_trajectories(bot_results[:1], out_dir)
    print(f"wrote reports and {len(written)} trajectory files under {out_dir}/")


if __name__ == "__main__":
    main()
