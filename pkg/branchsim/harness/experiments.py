"""
Monte Carlo experiments with per-trial derived seeds, fixed-order reduction
and CSV output.
"""

from __future__ import annotations

import csv
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Final, Iterable, Sequence

import numpy as np

from branchsim.exceptions import FileOperationError, UndefinedConditionalError
from branchsim.interpretations.schedule import Interpretation
from branchsim.oracle.tree import oracle_p_dis, oracle_p_reset
from branchsim.protocols.closed_form import (
    limit_relative_error,
    p_dis_closed_form,
    p_dis_limit,
    p_reset_closed_form,
    p_reset_limit,
)
from branchsim.protocols.deutsch import (
    DeutschConfig,
    DeutschMode,
    DeutschOutcome,
    run_deutsch,
    run_deutsch_trial,
)
from branchsim.protocols.disaster import (
    CycleOutcome,
    DisasterConfig,
    disaster_given_group,
    exact_cycle_probabilities,
    run_disaster_cycle,
)

from .config import Experiment, ExperimentConfig
from .seeding import derive_trial_seed
from .stats import Proportion


logger = logging.getLogger(__name__)

EXACT_TOLERANCE: Final[float] = 1e-10
DEUTSCH_SAMPLED_TOLERANCE: Final[float] = 0.02
LIMIT_TOLERANCE: Final[float] = 0.005
LIMIT_CELLS: Final[tuple[tuple[float, float], ...]] = ((0.001, 0.2), (0.0001, 0.5))

DISASTER_COLUMNS: Final[tuple[str, ...]] = (
    "trial", "seed", "interpretation", "scenario", "p", "q",
    "branch_group", "reset", "disaster_after_reset",
)
DEUTSCH_COLUMNS: Final[tuple[str, ...]] = (
    "trial", "seed", "interpretation", "mode", "basis", "memory", "x_up",
)
SWEEP_COLUMNS: Final[tuple[str, ...]] = (
    "interpretation", "p", "q", "realized_q",
    "closed_p_reset", "closed_p_dis", "oracle_p_reset", "oracle_p_dis",
    "quantum_p_reset", "quantum_p_dis", "limit_p_reset", "limit_p_dis",
    "mc_p_reset", "mc_p_reset_low", "mc_p_reset_high",
    "mc_p_dis", "mc_p_dis_low", "mc_p_dis_high", "agree",
)
SUMMARY_COLUMNS: Final[tuple[str, ...]] = (
    "metric", "interpretation", "value", "low", "high", "reference", "exact", "passed",
)

# Interpretation column of rows that do not depend on the interpretation.
ANY_INTERPRETATION: Final[str] = "-"


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    seed: int
    interpretation: Interpretation
    outcome: CycleOutcome | DeutschOutcome

    @property
    def branch_group(self) -> str | None:
        if isinstance(self.outcome, CycleOutcome):
            return self.outcome.branch_group
        return None


@dataclass(frozen=True)
class SummaryRow:
    metric: str
    interpretation: str
    value: float | None
    low: float | None = None
    high: float | None = None
    reference: float | None = None
    exact: bool = False
    passed: bool | None = None

    def cells(self) -> tuple[str, ...]:
        return tuple(
            format_cell(v)
            for v in (
                self.metric, self.interpretation, self.value, self.low,
                self.high, self.reference, self.exact, self.passed,
            )
        )


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    header: tuple[str, ...]
    rows: list[tuple[object, ...]] = field(default_factory=list)
    records: list[TrialRecord] = field(default_factory=list)
    summary: list[SummaryRow] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(row.passed is not False for row in self.summary)


def format_cell(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_value(value: float | None) -> str:
    return "n/a" if value is None else repr(round(value, 12))


def run_trials(
    trials: int,
    master: int,
    interpretation: Interpretation,
    trial: Callable[[np.random.Generator], CycleOutcome | DeutschOutcome],
    *,
    workers: int = 1,
) -> list[TrialRecord]:
    """Run trials 0..n-1, each on its own derived stream; results are in trial order."""

    def one(index: int) -> TrialRecord:
        seed = derive_trial_seed(master, index)
        return TrialRecord(index, seed, interpretation, trial(np.random.default_rng(seed)))

    if workers == 1:
        return [one(index) for index in range(trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(trials)))


def _close(a: float | None, b: float | None, tolerance: float = EXACT_TOLERANCE) -> bool:
    if a is None or b is None:
        return a is None and b is None
    return abs(a - b) <= tolerance


def _maybe(fn: Callable[..., float], *args: object) -> float | None:
    try:
        return fn(*args)
    except UndefinedConditionalError:
        return None


def _mc_row(
    metric: str,
    interpretation: str,
    proportion: Proportion,
    reference: float | None,
    passed: bool | None,
) -> SummaryRow:
    low, high = proportion.interval
    return SummaryRow(metric, interpretation, proportion.estimate, low, high, reference, False, passed)


def expected_deutsch(config: DeutschConfig, interpretation: Interpretation) -> float:
    """Only an undisturbed Many-Worlds reversal restores the +x spin with certainty."""
    undone = (
        config.mode is DeutschMode.REVERSIBLE
        and config.final_basis == "x"
        and interpretation is Interpretation.MWI
    )
    return 1.0 if undone else 0.5


def run_deutsch_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    result = ExperimentResult(cfg, DEUTSCH_COLUMNS)
    dcfg = DeutschConfig(cfg.mode, cfg.basis, exact=True, trials=cfg.trials)  # type: ignore[arg-type]
    metric = f"P({cfg.basis}-up)"
    for interpretation in cfg.interpretation.interpretations:
        exact = run_deutsch(dcfg, interpretation)
        reference = expected_deutsch(dcfg, interpretation)
        result.summary.append(
            SummaryRow(metric, interpretation.value, exact, reference=reference, exact=True,
                       passed=abs(exact - reference) <= EXACT_TOLERANCE)
        )
        records = run_trials(
            cfg.trials,
            cfg.seed,
            interpretation,
            lambda rng, i=interpretation: run_deutsch_trial(dcfg, i, rng),
            workers=cfg.workers,
        )
        ups = sum(1 for record in records if record.outcome.x_up)  # type: ignore[union-attr]
        proportion = Proportion(ups, len(records), cfg.confidence)
        result.summary.append(
            _mc_row(metric, interpretation.value, proportion, exact,
                    abs(proportion.estimate - exact) <= DEUTSCH_SAMPLED_TOLERANCE)
        )
        result.records.extend(records)
        for record in records:
            outcome = record.outcome
            assert isinstance(outcome, DeutschOutcome)
            result.rows.append(
                (record.trial_index, record.seed, interpretation, cfg.mode, cfg.basis,
                 outcome.memory, outcome.x_up)
            )
    return result


def _disaster_config(cfg: ExperimentConfig, p: float, q: float, backup: int | None) -> DisasterConfig:
    return DisasterConfig(p, q, cfg.scenario, cfg.macrostate_count, backup)


def _exact_rows(dcfg: DisasterConfig) -> list[SummaryRow]:
    exact = exact_cycle_probabilities(dcfg)
    q_r = exact.realized_q
    oracle_reset = oracle_p_reset(dcfg.p, q_r)
    oracle_dis = _maybe(oracle_p_dis, dcfg.p, q_r)
    closed_dis = _maybe(p_dis_closed_form, dcfg.p, q_r)
    return [
        SummaryRow("realized q", ANY_INTERPRETATION, q_r, reference=dcfg.q, exact=True),
        SummaryRow("P_reset closed form", ANY_INTERPRETATION, p_reset_closed_form(dcfg.p, dcfg.q), exact=True),
        SummaryRow("P_reset oracle", ANY_INTERPRETATION, oracle_reset, exact=True),
        SummaryRow("P_reset quantum", ANY_INTERPRETATION, exact.p_reset, reference=oracle_reset,
                   exact=True, passed=_close(exact.p_reset, oracle_reset)),
        SummaryRow("P_dis closed form", ANY_INTERPRETATION, closed_dis, exact=True),
        SummaryRow("P_dis oracle", ANY_INTERPRETATION, oracle_dis, exact=True),
        SummaryRow("P_dis quantum", ANY_INTERPRETATION, exact.p_dis, reference=oracle_dis,
                   exact=True, passed=_close(exact.p_dis, oracle_dis)),
    ]


def run_disaster_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    result = ExperimentResult(cfg, DISASTER_COLUMNS)
    dcfg = _disaster_config(cfg, cfg.p, cfg.q, cfg.backup_index)
    exact = exact_cycle_probabilities(dcfg)
    result.summary.extend(_exact_rows(dcfg))

    for interpretation in cfg.interpretation.interpretations:
        records = run_trials(
            cfg.trials,
            cfg.seed,
            interpretation,
            lambda rng, i=interpretation: run_disaster_cycle(dcfg, i, rng),
            workers=cfg.workers,
        )
        outcomes = [record.outcome for record in records]
        resets = [o for o in outcomes if isinstance(o, CycleOutcome) and o.reset_occurred]
        reset = Proportion(len(resets), len(outcomes), cfg.confidence)
        result.summary.append(
            _mc_row("P_reset", interpretation.value, reset, exact.p_reset, reset.contains(exact.p_reset))
        )
        if resets and exact.p_dis is not None:
            dis = Proportion(sum(1 for o in resets if o.disaster_after_reset), len(resets), cfg.confidence)
            result.summary.append(
                _mc_row("P_dis", interpretation.value, dis, exact.p_dis, dis.contains(exact.p_dis))
            )
        references = disaster_given_group(dcfg, interpretation)
        for group in ("k1", "k2"):
            members = [o for o in resets if o.branch_group == group]
            reference = references.get(group)
            if not members or reference is None:
                continue
            hits = Proportion(sum(1 for o in members if o.disaster_after_reset), len(members), cfg.confidence)
            # Deterministic references must be hit exactly; others are informational.
            passed = hits.estimate == reference if reference in (0.0, 1.0) else None
            result.summary.append(
                _mc_row(f"P(disaster|{group})", interpretation.value, hits, reference, passed)
            )

        result.records.extend(records)
        for record in records:
            outcome = record.outcome
            assert isinstance(outcome, CycleOutcome)
            result.rows.append(
                (record.trial_index, record.seed, interpretation, cfg.scenario, dcfg.p, dcfg.q,
                 outcome.branch_group, outcome.reset_occurred, outcome.disaster_after_reset)
            )
    return result


def sweep_cells(p_list: Sequence[float], q_list: Sequence[float]) -> list[tuple[float, float]]:
    """Grid cells in p-major order followed by the p << q limit cells."""
    cells = [(float(p), float(q)) for p in p_list for q in q_list]
    cells += [cell for cell in LIMIT_CELLS if cell not in cells]
    return cells


def sweep(p_list: Sequence[float], q_list: Sequence[float], cfg: ExperimentConfig) -> ExperimentResult:
    result = ExperimentResult(cfg, SWEEP_COLUMNS)
    cells = sweep_cells(p_list, q_list)

    for interpretation in cfg.interpretation.interpretations:
        agreeing = 0
        covered = checked = 0
        for cell_index, (p, q) in enumerate(cells):
            dcfg = _disaster_config(cfg, p, q, None)
            exact = exact_cycle_probabilities(dcfg)
            q_r = exact.realized_q
            oracle_reset = oracle_p_reset(p, q_r)
            oracle_dis = _maybe(oracle_p_dis, p, q_r)
            agree = _close(exact.p_reset, oracle_reset) and _close(exact.p_dis, oracle_dis)
            agreeing += agree

            master = derive_trial_seed(cfg.seed, cell_index)
            records = run_trials(
                cfg.trials,
                master,
                interpretation,
                lambda rng, i=interpretation, c=dcfg: run_disaster_cycle(c, i, rng),
                workers=cfg.workers,
            )
            outcomes = [r.outcome for r in records if isinstance(r.outcome, CycleOutcome)]
            resets = [o for o in outcomes if o.reset_occurred]
            reset = Proportion(len(resets), len(outcomes), cfg.confidence)
            checked += 1
            covered += reset.contains(exact.p_reset)
            mc_dis: tuple[float | None, float | None, float | None] = (None, None, None)
            if resets:
                dis = Proportion(sum(1 for o in resets if o.disaster_after_reset), len(resets), cfg.confidence)
                mc_dis = (dis.estimate, *dis.interval)
                if exact.p_dis is not None:
                    checked += 1
                    covered += dis.contains(exact.p_dis)

            result.rows.append(
                (
                    interpretation, p, q, q_r,
                    p_reset_closed_form(p, q), _maybe(p_dis_closed_form, p, q),
                    oracle_reset, oracle_dis,
                    exact.p_reset, exact.p_dis,
                    p_reset_limit(p, q), _maybe(p_dis_limit, p, q),
                    reset.estimate, *reset.interval,
                    *mc_dis,
                    agree,
                )
            )
        result.summary.append(
            SummaryRow("cells agreeing", interpretation.value, agreeing / len(cells), reference=1.0,
                       exact=True, passed=agreeing == len(cells))
        )
        result.summary.append(
            SummaryRow("interval coverage", interpretation.value, covered / checked if checked else None,
                       reference=cfg.confidence)
        )

    for p, q in LIMIT_CELLS:
        error = limit_relative_error(p, q)
        result.summary.append(
            SummaryRow(f"limit error p={p!r} q={q!r}", ANY_INTERPRETATION, error,
                       reference=LIMIT_TOLERANCE, exact=True, passed=error <= LIMIT_TOLERANCE)
        )
    return result


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[object]]) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_cell(value) for value in row])
    except OSError as exc:
        raise FileOperationError("write csv", str(path), str(exc)) from exc


def write_result(result: ExperimentResult) -> None:
    cfg = result.config
    if cfg.out is None:
        return
    if result.rows:
        write_csv(cfg.out, result.header, result.rows)
        logger.info("Wrote %d rows to %s", len(result.rows), cfg.out)
    summary_path = cfg.summary_path
    assert summary_path is not None
    write_csv(summary_path, SUMMARY_COLUMNS, (row.cells() for row in result.summary))
    logger.info("Wrote summary to %s", summary_path)


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run one deutsch, disaster or sweep experiment and write its CSV and summary."""
    runners: dict[Experiment, Callable[[ExperimentConfig], ExperimentResult]] = {
        Experiment.DEUTSCH: run_deutsch_experiment,
        Experiment.DISASTER: run_disaster_experiment,
        Experiment.SWEEP: lambda c: sweep(c.p_list, c.q_list, c),
    }
    if cfg.experiment not in runners:
        from .verify import run_verify

        return run_verify(cfg)

    logger.info("Starting %s experiment (trials=%d, seed=%d)", cfg.experiment, cfg.trials, cfg.seed)
    started = time.perf_counter()
    result = runners[cfg.experiment](cfg)
    write_result(result)
    logger.info(
        "Finished %s in %.2fs, %s",
        cfg.experiment,
        time.perf_counter() - started,
        "all checks passed" if result.passed else "some checks failed",
    )
    return result


def render_summary(result: ExperimentResult) -> str:
    """Aligned text: one line per summary row."""
    width = max((len(row.interpretation) for row in result.summary), default=1)
    lines = []
    for row in result.summary:
        status = {True: "✅", False: "❌", None: "  "}[row.passed]
        head = f"{status} {row.interpretation:<{width}}  {row.metric} = {format_value(row.value)}"
        if row.exact:
            lines.append(f"{head} (exact)")
            continue
        interval = ""
        if row.low is not None and row.high is not None:
            interval = f"  [{row.low:.6f}, {row.high:.6f}]"
        reference = "" if row.reference is None else f"  ref {format_value(row.reference)}"
        lines.append(f"{head}{interval}{reference}")
    return "\n".join(lines)
