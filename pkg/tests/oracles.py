"""Brute-force reference implementations used only by the tests.

They work on plain strings of 'C'/'D' with 1-based round numbers and
re-derive everything from the written rules, sharing no code with the package.
"""

from __future__ import annotations

import math

PAY = {("C", "C"): (3, 3), ("D", "D"): (1, 1), ("D", "C"): (5, 0), ("C", "D"): (0, 5)}


def strategy_move(name: str, own: str, opp: str, pay=PAY) -> str:
    """Move at round len(own)+1 from the complete observed history."""
    t = len(own) + 1
    if name == "AC":
        return "C"
    if name == "AD":
        return "D"
    if name == "TFT":
        return "C" if t == 1 else opp[-1]
    if name == "STFT":
        return "D" if t == 1 else opp[-1]
    if name == "GRIM":
        return "D" if "D" in opp else "C"
    if name == "WSLS":
        if t == 1:
            return "C"
        R = pay[("C", "C")][0]
        T = pay[("D", "C")][0]
        got = pay[(own[-1], opp[-1])][0]
        if got == R or got == T:
            return own[-1]
        return "C" if own[-1] == "D" else "D"
    raise KeyError(name)


def brute_game(a: str, b: str, n: int, pay=PAY) -> tuple[str, str, int, int]:
    xa, xb = "", ""
    for _ in range(n):
        ma = strategy_move(a, xa, xb, pay)
        mb = strategy_move(b, xb, xa, pay)
        xa += ma
        xb += mb
    ta = sum(pay[(p, q)][0] for p, q in zip(xa, xb))
    tb = sum(pay[(p, q)][1] for p, q in zip(xa, xb))
    return xa, xb, ta, tb


def brute_prescribe(name: str, own: str, opp: str) -> str:
    return "".join(strategy_move(name, own[: t - 1], opp[: t - 1]) for t in range(1, len(own) + 1))


# -- behavioral dimensions, straight from the rules (X = player, Y = opponent) --

def _rounds(n):
    return range(1, n + 1)


def nice(X: str, Y: str) -> int:
    fx = min((t for t in _rounds(len(X)) if X[t - 1] == "D"), default=math.inf)
    fy = min((t for t in _rounds(len(Y)) if Y[t - 1] == "D"), default=math.inf)
    if fx == math.inf:
        return 1
    return 1 if fx > fy else 0


def forgiving(X: str, Y: str):
    N = len(X)
    x = lambda t: X[t - 1]  # noqa: E731
    y = lambda t: Y[t - 1]  # noqa: E731
    opp_def = [t for t in _rounds(N) if t <= N - 1 and y(t) == "D"]
    forgiven = [t for t in opp_def if x(t + 1) == "C"]
    penalties = [
        t for t in _rounds(N)
        if 2 <= t <= N and y(t - 1) == "C" and x(t - 1) == "D" and x(t) == "D"
        and any(y(s) == "D" for s in range(1, t - 1))
    ]
    den = len(opp_def) + len(penalties)
    return None if den == 0 else len(forgiven) / den


def _uncalled(P: str, Q: str, t: int) -> bool:
    """P defects at t with no provocation from Q."""
    return P[t - 1] == "D" and (t == 1 or Q[t - 2] == "C")


def retaliatory(X: str, Y: str):
    N = len(X)
    prov = [t for t in _rounds(N) if t <= N - 1 and _uncalled(Y, X, t)]
    react = [t for t in prov if X[t] == "D"]
    return None if not prov else len(react) / len(prov)


def troublemaking(X: str, Y: str):
    N = len(X)
    occ = [t for t in _rounds(N) if t == 1 or Y[t - 2] == "C"]
    unc = [t for t in occ if _uncalled(X, Y, t)]
    return None if not occ else len(unc) / len(occ)


def emulative(X: str, Y: str) -> float:
    N = len(X)
    mimic = [t for t in range(2, N + 1) if X[t - 1] == Y[t - 2]]
    return len(mimic) / (N - 1)


DIMENSION_ORACLES = {
    "nice": nice,
    "forgiving": forgiving,
    "retaliatory": retaliatory,
    "troublemaking": troublemaking,
    "emulative": emulative,
}
