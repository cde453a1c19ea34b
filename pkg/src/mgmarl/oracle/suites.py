"""Verification suites run by ``mgmarl verify`` and the acceptance tests.

Every suite returns a JSON-serialisable report with a top-level ``passed``.
"""

import time

import numpy as np

from ..envs.toy import random_toy_game
from ..gradients import variance_probe
from .cooperation import cooperation_probability
from .expectations import baseline_zero_mean, exact_variance, expected_gradient, sample_estimator
from .tabular import TabularPolicy, check_identities, solve_tabular
from .trajectories import finite_difference_gradient

IDENTITY_TOL = 1e-10
GRADIENT_RTOL = 1e-6
BASELINE_TOL = 1e-12
VARIANCE_SE = 3.0
COOP_VALUES = {0.5: 0.011642, 1.0: 3.0518e-5}   # eps = 0.5 and the uniform policy
COOP_TOL = 1e-9


def identity_suite(trials=50, seed=0, tol=IDENTITY_TOL):
    """DP identities on random two-agent games (2..20 states, horizon 1..5)."""
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    worst = {}
    for _ in range(trials):
        game = random_toy_game(
            rng, num_states=int(rng.integers(2, 21)), num_agents=2,
            num_actions=int(rng.integers(2, 4)), horizon=int(rng.integers(1, 6)),
            num_goals=int(rng.integers(1, 4)),
        )
        policy = TabularPolicy.random(game, rng, eps=float(rng.uniform(0.0, 0.5)))
        for goal_index, _ in game.goal_assignments():
            report = check_identities(solve_tabular(game, policy, goal_index), tol)
            for key, value in report["residuals"].items():
                worst[key] = max(worst.get(key, 0.0), value)
    max_residual = max(worst.values())
    return {"suite": "identities", "trials": trials, "residuals": worst, "max_residual": max_residual,
            "tolerance": tol, "seconds": time.perf_counter() - start, "passed": max_residual <= tol}


def _relative_error(a, b):
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def gradient_suite(trials=20, seed=0, rtol=GRADIENT_RTOL):
    """Exact estimator expectations against central finite differences of J.

    Multi-agent estimators run on two-agent games, IAC and the stage-1
    estimator on single-agent games.
    """
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    cases = []
    for trial in range(trials):
        multi = random_toy_game(rng, num_states=int(rng.integers(2, 4)), num_agents=2, num_actions=2,
                                horizon=int(rng.integers(1, 4)), num_goals=2)
        single = random_toy_game(rng, num_states=int(rng.integers(2, 5)), num_agents=1, num_actions=3,
                                 horizon=int(rng.integers(1, 5)), num_goals=2)
        for game, estimators in ((multi, ("cm3", "qv", "coma")), (single, ("iac", "stage1"))):
            policy = TabularPolicy.random(game, rng, eps=0.1)
            fd = finite_difference_gradient(game, policy)
            for est in estimators:
                err = _relative_error(expected_gradient(game, policy, est), fd)
                cases.append({"trial": trial, "estimator": est, "agents": game.num_agents,
                              "relative_error": err, "passed": err <= rtol})
        cases.append({"trial": trial, "estimator": "baseline_zero_mean", "agents": 2,
                      "abs_value": baseline_zero_mean(multi, TabularPolicy.random(multi, rng, eps=0.1)),
                      "passed": None})
        cases[-1]["passed"] = cases[-1]["abs_value"] <= BASELINE_TOL
    worst = {}
    for case in cases:
        key = case["estimator"]
        value = case.get("relative_error", case.get("abs_value"))
        worst[key] = max(worst.get(key, 0.0), value)
    return {"suite": "gradients", "trials": trials, "worst": worst, "rtol": rtol,
            "baseline_tol": BASELINE_TOL, "seconds": time.perf_counter() - start,
            "passed": all(c["passed"] for c in cases)}


def variance_game(seed=42):
    """Fixed two-agent toy game and eps-floored policy for the variance check."""
    rng = np.random.default_rng(seed)
    game = random_toy_game(rng, num_states=3, num_actions=2, horizon=3)
    return game, TabularPolicy.random(game, rng, eps=0.1)


def variance_suite(samples=100_000, seed=0, game_seed=42, estimators=("cm3", "coma")):
    """Closed-form variance against the empirical variance of ``samples`` draws."""
    game, policy = variance_game(game_seed)
    rng = np.random.default_rng(seed)
    rows = []
    for est in estimators:
        exact = exact_variance(game, policy, est)
        probe = variance_probe(sample_estimator(game, policy, est, samples, rng))
        z = (probe["variance"] - exact["variance"]) / probe["stderr"]
        rows.append({"estimator": est, "exact": exact["variance"], "empirical": probe["variance"],
                     "stderr": probe["stderr"], "z": z, "terms": exact["terms"],
                     "passed": abs(z) <= VARIANCE_SE})
    return {"suite": "variance", "samples": samples, "results": rows,
            "passed": all(r["passed"] for r in rows)}


def coop_suite():
    at_eps, uniform = cooperation_probability(0.5)
    rows = []
    for name, value, expected in (("eps", at_eps, COOP_VALUES[0.5]), ("uniform", uniform, COOP_VALUES[1.0])):
        # the published figures are rounded, so compare at their printed precision
        digits = len(f"{expected:e}".split("e")[0].rstrip("0").replace(".", "")) - 1
        rounded = float(f"{value:.{digits}e}")
        rows.append({"case": name, "value": value, "expected": expected,
                     "passed": abs(rounded - expected) <= COOP_TOL})
    return {"suite": "coop-prob", "results": rows, "passed": all(r["passed"] for r in rows)}


SUITES = {
    "identities": identity_suite,
    "gradients": gradient_suite,
    "variance": variance_suite,
    "coop-prob": coop_suite,
}
