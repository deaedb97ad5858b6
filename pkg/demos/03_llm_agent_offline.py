"""Driving the LLM-agent pipeline against a local mock chat endpoint.

The mock server plays the part of a language model. Its "model" reads the
history lines in the prompt and answers like a forgiving tit-for-tat, in the
requested JSON shape, with occasional chatter around the object and one
malformed reply to show the retry path. A short memory-window sweep and a
comprehension run (answered by the prompt-reading oracle) follow.

    python3 demos/03_llm_agent_offline.py [out_dir]
"""

import csv
import json
import os
import re
import sys
from pathlib import Path

from ipdlab.agents import AgentConfig, RemoteAgent
from ipdlab.comprehension import OracleAgent, run_comprehension
from ipdlab.experiments import ExperimentSpec, run_window_sweep
from ipdlab.game import play_game
from ipdlab.mock_server import MockChatServer
from ipdlab.strategies import StrategyAgent

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_runs/llm")
os.environ.setdefault("DEMO_KEY", "sk-demo-not-a-real-key")
calls = {"n": 0}


def fake_model(body):
    calls["n"] += 1
    if calls["n"] == 3:
        return "I think I will cooperate this time."  # no JSON: triggers a retry
    user = body["messages"][-1]["content"]
    last = re.findall(r'B played "(\w+)"', user)
    defections = sum(b == "Defect" for b in last)
    action = "Defect" if last and last[-1] == "Defect" and defections * 2 > len(last) else "Cooperate"
    return f'Sure. {json.dumps({"action": action, "reason": f"B defected {defections} of {len(last)}"})}'


with MockChatServer(responder=fake_model) as srv:
    cfg = AgentConfig(endpoint_url=srv.url, model_id="mock-llm", api_key_env_var="DEMO_KEY",
                      retry_backoff=(0.0,), memory_window=5)
    agent = RemoteAgent(cfg)
    trace = play_game(agent, StrategyAgent("URND:0.3"), 12, seed=1)
    print("one game vs URND(0.3):")
    print("  A:", "".join(a.short for a in trace.actions("A")))
    print("  B:", "".join(a.short for a in trace.actions("B")))
    print(f"  {len(srv.requests)} requests for 12 rounds (one reply was malformed and retried)")
    print("  last reason:", agent.reasons[-1])

    subject = {"type": "remote", "endpoint_url": srv.url, "model_id": "mock-llm", "api_key_env_var": "DEMO_KEY",
               "retry_backoff": [0.0]}
    run = run_window_sweep(ExperimentSpec(experiment="window_sweep", subject=subject, windows=(1, 5, "full"),
                                          k=5, n_rounds=20, output_dir=str(out / "window"), workers=2))
    print("\nsteady state vs AD by memory window:")
    with open(run.run_dir / "steady_state.csv") as fh:
        for r in csv.DictReader(fh):
            print(f"  window={r['window']:>4}  p_coop(last 10)={float(r['steady_state']):.2f}")

report, _ = run_comprehension(OracleAgent(), n_games=1, n_rounds=20)
print("\ncomprehension accuracy of the prompt-reading oracle:")
for name, score in report.per_template.items():
    print(f"  {name:10} {score.accuracy:.2f} over {score.n_asked} questions")
