"""Recovering which strategies produced a set of noisy game histories.

A population that is 60% TFT, 30% AD and 10% WSLS, each playing with a 5%
tremble against a fair-coin opponent, is fitted with the mixture model. The
mixture weights should land near the true shares; the per-strategy scores
are the non-normalized reading (they need not sum to 1).

    python3 demos/02_sfem_mixture.py
"""

from ipdlab.game import play_game
from ipdlab.sfem import fit, per_strategy_score
from ipdlab.strategies import StrategyAgent, TremblingAgent

population = {"TFT": 60, "AD": 30, "WSLS": 10}
traces = []
seed = 0
for kind, count in population.items():
    for _ in range(count):
        traces.append(play_game(TremblingAgent(kind, 0.05), StrategyAgent("RND"), 100, seed=seed))
        seed += 1

fitted = fit(traces)
scores = per_strategy_score(traces, fitted=fitted)
print(f"fitted beta = {fitted.beta:.3f} (true 0.95), log-likelihood {fitted.log_likelihood:.1f}")
print(f"{'strategy':8} {'true':>6} {'weight':>7} {'score':>7}")
for name in fitted.strategies:
    true = population.get(name, 0) / len(traces)
    print(f"{name:8} {true:6.2f} {fitted.weights[name]:7.3f} {scores[name]:7.3f}")
if fitted.degeneracy_groups:
    print("indistinguishable on this data:", [sorted(g) for g in fitted.degeneracy_groups])

# all-cooperative histories cannot tell AC, TFT, GRIM and WSLS apart
nice = [play_game(StrategyAgent("AC"), StrategyAgent("AC"), 50, seed=g) for g in range(20)]
print("\nall-cooperate data, degeneracy groups:", [sorted(g) for g in fit(nice).degeneracy_groups])
