#!/usr/bin/env python3
"""Drive the LLM pilot loop without a network: oracle backend demo.

Runs one episode with the chat-agent machinery backed by the expert
oracle, prints the first prompt exchange and the failure/latency
summary, and shows that the agent reproduces the expert's result.

Usage: python3 scripts/llm_agent_demo.py [--seed S] [--duration T]
"""

import argparse

from pursuitlab.episode import EpisodeConfig, run_episode
from pursuitlab.llm import AgentConfig, LLMAgent, OracleChatClient
from pursuitlab.navball import NavballAgent


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--duration", type=float, default=60.0)
    parser.add_argument("--mode", default="cot-fewshot",
                        choices=("plain", "augmented", "cot-fewshot"))
    args = parser.parse_args()

    config = EpisodeConfig(seed=args.seed, max_duration=args.duration)
    agent = LLMAgent(AgentConfig(mode=args.mode, window_size=3, retry_wait=0.0),
                     OracleChatClient())
    result = run_episode(agent, config)

    first = agent.interactions[0]
    print("=== system prompt ===")
    print(first["prompts"][0]["content"])
    print("\n=== first user prompt ===")
    print(first["prompts"][-1]["content"])
    print("\n=== first reply ===")
    print(first["reply"]["function_call"])

    print("\n=== episode ===")
    print(f"closest approach: {result.closest_distance:.2f} m")
    print(f"speed at closest: {result.speed_at_closest:.2f} m/s")
    print(f"fuel used:        {result.fuel_used:.2f} kg")
    print(f"score:            {result.score:.2f}")
    print(f"attempts={agent.attempts} failures={agent.failures} "
          f"failure_rate={agent.failure_rate:.3f}")

    expert = run_episode(NavballAgent(), config)
    print(f"matches direct expert run: {expert == result}")


if __name__ == "__main__":
    main()
