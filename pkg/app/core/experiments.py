"""Experiment harness: resilience tables, bound curves, region maps and single training runs"""

from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union
import json
import logging

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from app.core.attacks import AttackResult, is_valid_bfa, overlap_attack, point_attack, shift_beyond_attack
from app.core.classifiers import TrainReport, train
from app.core.config import AttackSettings, ExperimentConfig, GaussianSource, TrainConfig
from app.core.data import load_dataset
from app.core.errors import (
    ConfigError, InvalidBudgetError, NodeLimitExceededError, ResilienceError, SolverError,
    TrainerInfeasibleError,
)
from app.core.resilience import (
    Algorithm, ClassCounts, empirical_resilience, evaluate_resilience, region_grid, resilience_bound,
)
from app.core.types import NEGATIVE, POSITIVE, AttackBudget, Dataset, LinearClassifier

logger = logging.getLogger(__name__)

FULL_SCALE_TRIALS = (100, 100)
FLOAT_FORMAT = "%.10g"
REGION_ALGORITHMS = (Algorithm.CONVEX, Algorithm.ZERO_ONE, Algorithm.MAJORITY_ZERO_ONE)
SEPARABLE_DRAWS = 50
SEPARABLE_TOL = 1e-7

TABLE_COLUMNS = ["attack", "alpha_pos", "alpha_neg", "trainer", "resilience", "trials", "failures"]
TRIAL_COLUMNS = [
    "attack", "kind", "alpha_pos", "alpha_neg", "trainer", "dataset", "trial", "attack_seed",
    "status", "resilience", "risk_pos", "risk_neg", "used_pos", "used_neg", "achieved_v",
    "nodes_explored", "error",
]
CURVE_COLUMNS = [
    "alpha", "alpha_normalized", "bound", "bound_exact", "empirical", "empirical_at_alpha", "trials", "failures",
]
GRID_COLUMNS = ["alpha_pos_normalized", "alpha_neg_normalized", "alpha_pos", "alpha_neg", "attackable"]


@dataclass
class TrialOutcome:
    """One (attack, trainer, dataset, trial) cell of an evaluation run"""
    attack: str
    kind: str
    alpha_pos: int
    alpha_neg: int
    trainer: str
    dataset: int
    trial: int
    attack_seed: int
    status: str = "ok"
    resilience: Optional[float] = None
    risk_pos: Optional[float] = None
    risk_neg: Optional[float] = None
    used_pos: int = 0
    used_neg: int = 0
    achieved_v: Optional[float] = None
    nodes_explored: int = 0
    error: str = ""


def _write_json(payload: Dict[str, Any], path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def _write_table(rows: List[Dict[str, Any]], columns: List[str], path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows, columns=columns).to_csv(path, index=False, float_format=FLOAT_FORMAT)


def save_model(report: TrainReport, path: Union[str, Path], **metadata) -> Path:
    """Write classifier weights and the training report as JSON"""
    path = Path(path)
    _write_json({"report": report.to_dict(), "metadata": metadata}, path)
    logger.info(f"Saved {report.trainer} model to {path}")
    return path


def load_model(path: Union[str, Path]) -> Tuple[Optional[LinearClassifier], Dict[str, Any]]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Model file not found: {path}")
    with open(path, 'r', encoding='utf-8') as f:
        payload = json.load(f)
    weights = payload["report"].get("weights")
    classifier = None if weights is None else LinearClassifier(np.array(weights, dtype=float))
    return classifier, payload


def attack_seed(settings: AttackSettings, base_seed: int, dataset: int, trial: int) -> int:
    return settings.seed + base_seed + 1000 * dataset + trial


def run_attack(settings: AttackSettings, data: Dataset, trainer: str, seed: int,
               cfg: Optional[TrainConfig] = None) -> AttackResult:
    """Generate the tampered dataset described by ``settings``; overlap rounds retrain ``trainer``"""
    budget = AttackBudget(settings.alpha_pos, settings.alpha_neg)
    if settings.kind == "none":
        return AttackResult(data, (), (), seed)
    if settings.kind == "point":
        target = POSITIVE if settings.alpha_pos == 1 else NEGATIVE
        return point_attack(data, settings.sigma, target, seed)
    if settings.kind == "overlap":
        return overlap_attack(data, budget, settings.attack_trainer or trainer, settings.target_v,
                              settings.max_iters, seed, cfg)
    if settings.kind == "shift":
        return shift_beyond_attack(data, budget, seed)
    raise ConfigError(f"Unknown attack kind: {settings.kind}")


def _check_budgets(config: ExperimentConfig, data: Dataset) -> None:
    for settings in config.attacks:
        try:
            AttackBudget(settings.alpha_pos, settings.alpha_neg).validate_for(data.n_pos, data.n_neg)
        except InvalidBudgetError as e:
            raise ConfigError(f"Attack {settings.label}: {e}") from e


def _evaluate_cell(settings: AttackSettings, trainer: str, clean: Dataset, dataset: int, trial: int,
                   base_seed: int, cfg: TrainConfig) -> TrialOutcome:
    seed = attack_seed(settings, base_seed, dataset, trial)
    outcome = TrialOutcome(settings.label, settings.kind, settings.alpha_pos, settings.alpha_neg,
                           trainer, dataset, trial, seed)
    try:
        attack = run_attack(settings, clean, trainer, seed, cfg)
        budget = AttackBudget(settings.alpha_pos, settings.alpha_neg)
        if not is_valid_bfa(clean, attack.tampered, budget):
            outcome.status = "invalid_attack"
            outcome.error = f"Tampered data exceeds budget {budget.as_tuple()}"
            logger.error(f"{settings.label} x {trainer}: {outcome.error}")
            return outcome
        outcome.used_pos, outcome.used_neg = attack.budget_used.as_tuple()
        outcome.achieved_v = attack.achieved_v
        evaluation = evaluate_resilience(trainer, clean, attack.tampered, cfg)
    except NodeLimitExceededError as e:
        outcome.status, outcome.error, outcome.nodes_explored = "node_limit", str(e), e.nodes_explored
        logger.warning(f"{settings.label} x {trainer}: {e}")
        return outcome
    except TrainerInfeasibleError as e:
        outcome.status, outcome.error = "infeasible", str(e)
        logger.warning(f"{settings.label} x {trainer}: {e}")
        return outcome
    except SolverError as e:
        outcome.status, outcome.error = "solver_error", str(e)
        logger.error(f"{settings.label} x {trainer}: {e}")
        return outcome
    except (ResilienceError, ValueError) as e:
        outcome.status, outcome.error = "error", str(e)
        logger.error(f"{settings.label} x {trainer}: {e}")
        return outcome

    outcome.resilience = evaluation.value
    outcome.risk_pos = evaluation.clean_risk.risk_pos
    outcome.risk_neg = evaluation.clean_risk.risk_neg
    outcome.nodes_explored = evaluation.report.nodes_explored
    return outcome


def _summarize(outcomes: List[TrialOutcome], config: ExperimentConfig) -> List[Dict[str, Any]]:
    rows = []
    for settings in config.attacks:
        for trainer in config.trainers:
            cell = [o for o in outcomes if o.attack == settings.label and o.trainer == trainer]
            values = [o.resilience for o in cell if o.status == "ok"]
            rows.append({
                "attack": settings.label,
                "alpha_pos": settings.alpha_pos,
                "alpha_neg": settings.alpha_neg,
                "trainer": trainer,
                "resilience": max(values) if values else None,
                "trials": len(values),
                "failures": len(cell) - len(values),
            })
    return rows


def _require_source(config: ExperimentConfig):
    if config.source is None:
        raise ConfigError(f"Experiment '{config.name}' has no data source")
    return config.source


def _output_dir(config: ExperimentConfig, out: Optional[Union[str, Path]]) -> Path:
    return Path(out) if out is not None else Path(config.output_dir)


def cmd_evaluate(config: ExperimentConfig, out: Optional[Union[str, Path]] = None) -> List[Dict[str, Any]]:
    """Resilience table over every (attack, trainer) cell; per-cell failures are recorded, not raised"""
    source = _require_source(config)
    out_dir = _output_dir(config, out)
    n_datasets = config.trials.n_datasets if isinstance(source, GaussianSource) else 1
    datasets = [load_dataset(source, config.seed + d) for d in range(n_datasets)]
    for data in datasets:
        _check_budgets(config, data)

    tasks = [
        (settings, trainer, datasets[d], d, a)
        for settings in config.attacks
        for trainer in config.trainers
        for d in range(n_datasets)
        for a in range(config.trials.n_attacks_per_dataset)
    ]
    logger.info(f"Evaluating {len(tasks)} cells for '{config.name}' with {config.jobs} job(s)")
    outcomes = Parallel(n_jobs=config.jobs)(
        delayed(_evaluate_cell)(settings, trainer, data, d, a, config.seed, config.train)
        for settings, trainer, data, d, a in tasks
    )

    table = _summarize(outcomes, config)
    trials = [asdict(o) for o in outcomes]
    _write_table(table, TABLE_COLUMNS, out_dir / f"{config.name}_table.csv")
    _write_table(trials, TRIAL_COLUMNS, out_dir / f"{config.name}_trials.csv")
    _write_json({"config": config.model_dump(mode="json"), "table": table, "trials": trials},
                out_dir / f"{config.name}_report.json")
    for row in table:
        logger.info(f"{row['attack']:>16} {row['trainer']:>9}: V={row['resilience']} "
                    f"({row['trials']} trials, {row['failures']} failures)")
    return table


def _separable_clean(config: ExperimentConfig, dataset: int) -> Dataset:
    """First draw for ``dataset`` that the hinge trainer separates with zero loss inside the weight box"""
    for attempt in range(SEPARABLE_DRAWS):
        clean = load_dataset(config.source, config.seed + dataset * SEPARABLE_DRAWS + attempt)
        report = train("hinge", clean, config.train)
        if report.solver_objective <= SEPARABLE_TOL:
            if attempt:
                logger.debug(f"Bound curve dataset {dataset}: separable draw after {attempt} rejections")
            return clean
    raise ConfigError(f"No linearly separable draw for dataset {dataset} in {SEPARABLE_DRAWS} attempts; "
                      f"move the class means apart")


def _curve_for_dataset(config: ExperimentConfig, dataset: int, alphas: List[int], n_attacks: int) -> List[Tuple[float, int, int]]:
    """Per sweep point: (max V, successful trials, failures) for one generated dataset"""
    clean = _separable_clean(config, dataset)
    settings = AttackSettings(kind="shift")
    results = []
    for alpha in alphas:
        best, ok, failed = 0.0, 0, 0
        for trial in range(n_attacks):
            seed = attack_seed(settings, config.seed, dataset, trial)
            budget = AttackBudget(alpha, alpha)
            try:
                tampered = shift_beyond_attack(clean, budget, seed).tampered
                if not is_valid_bfa(clean, tampered, budget):
                    raise ResilienceError(f"Shift attack exceeded budget {budget.as_tuple()}")
                best = max(best, empirical_resilience("majority", clean, tampered, config.train))
                ok += 1
            except (ResilienceError, ValueError) as e:
                failed += 1
                logger.warning(f"Bound curve alpha={alpha} dataset={dataset} trial={trial}: {e}")
        results.append((best, ok, failed))
    return results


def cmd_bound_curve(config: ExperimentConfig, out: Optional[Union[str, Path]] = None) -> List[Dict[str, Any]]:
    """Theoretical bound against the empirical resilience of the majority trainer under shift attacks

    ``empirical`` is the running maximum over budgets up to alpha; ``empirical_at_alpha`` keeps the
    per-budget maximum over trials. Clean draws that are not linearly separable are redrawn.
    """
    _require_source(config)
    out_dir = _output_dir(config, out)
    first_draw = load_dataset(config.source, config.seed)
    if first_draw.n_pos != first_draw.n_neg:
        raise ConfigError(f"Bound curve needs balanced classes, got ({first_draw.n_pos}, {first_draw.n_neg})")
    n = first_draw.n_pos
    if config.sweep.alpha_max > n:
        raise ConfigError(f"Sweep end {config.sweep.alpha_max} exceeds the class size {n}")
    n_datasets, n_attacks = (FULL_SCALE_TRIALS if config.sweep.full_scale
                             else (config.trials.n_datasets, config.trials.n_attacks_per_dataset))
    alphas = list(range(config.sweep.alpha_max + 1))
    logger.info(f"Bound curve '{config.name}': {n_datasets} datasets x {n_attacks} attacks, alpha 0..{alphas[-1]}")

    per_dataset = Parallel(n_jobs=config.jobs)(
        delayed(_curve_for_dataset)(config, d, alphas, n_attacks) for d in range(n_datasets))

    counts = ClassCounts(n, n)
    rows = []
    running: Optional[float] = None
    for k, alpha in enumerate(alphas):
        bound = resilience_bound(counts, AttackBudget(alpha, alpha))
        ok = sum(result[k][1] for result in per_dataset)
        at_alpha = max(result[k][0] for result in per_dataset) if ok else None
        # a budget of alpha admits every attack with a smaller budget
        if at_alpha is not None:
            running = at_alpha if running is None else max(running, at_alpha)
        rows.append({
            "alpha": alpha,
            "alpha_normalized": alpha / n,
            "bound": float(bound),
            "bound_exact": str(bound),
            "empirical": running,
            "empirical_at_alpha": at_alpha,
            "trials": ok,
            "failures": sum(result[k][2] for result in per_dataset),
        })
        if running is not None and running > float(bound) + 1e-9:
            logger.error(f"Empirical resilience {running} exceeds the bound {bound} at alpha={alpha}")
    _write_table(rows, CURVE_COLUMNS, out_dir / f"{config.name}_bound_curve.csv")
    return rows


def _region_counts(config: ExperimentConfig) -> ClassCounts:
    if config.region_counts is not None:
        return ClassCounts(*config.region_counts)
    if config.source is not None:
        return ClassCounts.of(load_dataset(config.source, config.seed))
    raise ConfigError("Region map needs region_counts or a data source")


def cmd_region_map(config: ExperimentConfig, out: Optional[Union[str, Path]] = None) -> Dict[str, Path]:
    """One CSV grid of perfectly-attackable verdicts per algorithm"""
    out_dir = _output_dir(config, out)
    counts = _region_counts(config)
    written = {}
    for algorithm in REGION_ALGORITHMS:
        cells = region_grid(algorithm, counts, config.region_resolution)
        rows = [{
            "alpha_pos_normalized": cell.alpha_pos_normalized,
            "alpha_neg_normalized": cell.alpha_neg_normalized,
            "alpha_pos": cell.alpha_pos,
            "alpha_neg": cell.alpha_neg,
            "attackable": int(cell.verdict.perfectly_attackable),
        } for cell in cells]
        path = out_dir / f"{config.name}_region_{algorithm.value}.csv"
        _write_table(rows, GRID_COLUMNS, path)
        written[algorithm.value] = path
        attackable = sum(row["attackable"] for row in rows)
        logger.info(f"Region map {algorithm.value}: {attackable}/{len(rows)} cells perfectly attackable")
    return written


def cmd_train(config: ExperimentConfig, out: Optional[Union[str, Path]] = None,
              trainer: Optional[str] = None) -> TrainReport:
    """Train one trainer on the configured source and write the model JSON"""
    source = _require_source(config)
    trainer = trainer or (config.trainers[0] if config.trainers else None)
    if trainer is None:
        raise ConfigError("No trainer selected")
    data = load_dataset(source, config.seed)
    report = train(trainer, data, config.train)
    save_model(report, _output_dir(config, out) / f"{config.name}_{trainer}_model.json",
               experiment=config.name, n_pos=data.n_pos, n_neg=data.n_neg, p=data.p,
               train=config.train.model_dump(mode="json"))
    if not report.feasible:
        raise TrainerInfeasibleError(f"Trainer {trainer} has no feasible classifier on '{config.name}'")
    return report
