"""Demo: how hinge, 0-1 and majority 0-1 trainers hold up under attack"""

import sys
import os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

import logging

from app.core.attacks import overlap_attack, point_attack
from app.core.data import GaussianSpec, generate_gaussians
from app.core.errors import ResilienceError
from app.core.resilience import (
    Algorithm, ClassCounts, empirical_resilience, perfectly_attackable_region, resilience_bound,
)
from app.core.types import POSITIVE, AttackBudget

TRAINERS = ["hinge", "zero_one", "majority"]


def demo_attacks():
    """Train every trainer on clean, point-attacked and overlap-attacked Gaussians"""
    print("=== Resilience Demo ===\n")
    clean = generate_gaussians(GaussianSpec([-4.0], [4.0], n_pos=5, n_neg=20, seed=5))
    print(f"Clean data: {clean.n_pos} positives, {clean.n_neg} negatives, p={clean.p}")

    attacks = {
        "no attack": clean,
        "point (1,0)": point_attack(clean, sigma=100.0, target_class=POSITIVE, seed=3).tampered,
        "overlap (0,6)": overlap_attack(clean, AttackBudget(0, 6), "zero_one", max_iters=10, seed=17).tampered,
    }

    print(f"\n{'attack':>14} " + " ".join(f"{name:>9}" for name in TRAINERS))
    for label, tampered in attacks.items():
        cells = []
        for trainer in TRAINERS:
            try:
                cells.append(f"{empirical_resilience(trainer, clean, tampered):9.3f}")
            except ResilienceError as e:
                cells.append(f"{'failed':>9}")
                print(f"  {trainer} on {label}: {e}")
        print(f"{label:>14} " + " ".join(cells))


def demo_bound():
    """Worst-case bound and region verdicts for a few budgets"""
    print("\n--- Bound and attackable regions ---")
    counts = ClassCounts(50, 50)
    for alpha in (0, 5, 10, 24, 25):
        budget = AttackBudget(alpha, alpha)
        verdicts = {algorithm.value: perfectly_attackable_region(algorithm, counts, budget).perfectly_attackable
                    for algorithm in Algorithm}
        print(f"alpha=({alpha},{alpha}): bound={resilience_bound(counts, budget)} attackable={verdicts}")


if __name__ == "__main__":
    logging.basicConfig(level=logging.WARNING, format='%(asctime)s - %(levelname)s - %(message)s')
    demo_attacks()
    demo_bound()
