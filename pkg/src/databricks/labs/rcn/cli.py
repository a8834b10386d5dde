import json
from pathlib import Path

from databricks.labs.blueprint.cli import App
from databricks.labs.blueprint.entrypoint import get_logger

from databricks.labs.rcn.bounds import BoundViolationError, QuadratureError, SubordinationError, certify_lower_bound
from databricks.labs.rcn.config import RunConfig, apply_overrides, load_config
from databricks.labs.rcn.grid import BoundaryConfig
from databricks.labs.rcn.optimize import (
    MinimizeResult,
    SweepParams,
    SweepRecord,
    best_record,
    find_transition,
    init_field,
    minimize_field,
    perturb_field,
    sweep_a as run_sweep,
)
from databricks.labs.rcn.selfdual import PositivityError, knee_energy, knee_phase_shift, upper_bound_probe
from databricks.labs.rcn.utils import (
    BOUNDS_COLUMNS,
    CURVE_COLUMNS,
    KNEE_COLUMNS,
    PROBE_COLUMNS,
    SWEEP_COLUMNS,
    FieldFormatError,
    read_field,
    write_csv,
    write_field,
    write_yaml,
)

rcn = App(__file__)
logger = get_logger(__file__)

EXIT_VALIDATION = 1
EXIT_NOT_CONVERGED = 2
EXIT_BOUND_VIOLATION = 3


def _run_config(flags: dict[str, str], *, require_eps: bool = True) -> RunConfig:
    config_path = flags.pop("config", "")
    run_config_name = flags.pop("run_config", "default")
    try:
        base = load_config(config_path).get_run_config(run_config_name) if config_path else RunConfig()
        return apply_overrides(base, flags).validate(require_eps=require_eps)
    except (ValueError, FileNotFoundError) as err:
        logger.error(f"Invalid configuration: {err}")
        raise SystemExit(EXIT_VALIDATION) from None


def _record_row(record: SweepRecord) -> dict:
    return {
        "eps": record.eps,
        "a": record.a,
        "delta": record.delta_star,
        "bending": record.energy_bending,
        "strain": record.energy_strain,
        "total": record.energy_total,
        "converged": record.converged,
        "iters": record.iterations,
        "seed": record.seed,
        "knee_energy": knee_energy(record.eps),
    }


def _sweep_one(params: SweepParams, eps: float) -> list[SweepRecord]:
    grid = params.grid_for(eps)
    return run_sweep(
        grid,
        params.k_for(grid),
        params.seeds,
        tol=params.tol,
        max_iters=params.max_iters,
        num_threads=params.num_threads,
        reflection=params.reflection,
    )


def _result_row(result: MinimizeResult) -> dict:
    phase = result.field
    return {
        "eps": phase.grid.eps,
        "a": phase.a,
        "delta": phase.delta,
        "bending": result.energy.bending,
        "strain": result.energy.strain,
        "total": result.energy.total,
        "converged": result.converged,
        "iters": result.iterations,
    }


@rcn.command(is_unauthenticated=True)
def minimize(**flags: str):
    """
    Minimize the energy for one eps and one Dirichlet node count, writing field.txt and energy.csv.

    :param flags: run configuration overrides; --config and --run-config select a configuration file
    """
    run = _run_config(flags)
    if len(run.eps) != 1 or len(run.k) > 1:
        logger.error("minimize takes exactly one eps value and at most one k value")
        raise SystemExit(EXIT_VALIDATION)
    grid = run.grid_for(run.eps[0])
    config = BoundaryConfig(k=run.k[0] if run.k else 0, delta=run.delta, reflection=run.reflection_kind)
    try:
        start = perturb_field(init_field(grid, config, run.seed_kinds[0]), run.perturbation, run.seed)
        result = minimize_field(start, run.tol, run.max_iters)
    except ValueError as err:
        logger.error(f"Cannot minimize: {err}")
        raise SystemExit(EXIT_VALIDATION) from None
    write_field(run.output_path / "field.txt", result.field)
    write_csv(run.output_path / "energy.csv", SWEEP_COLUMNS, [_result_row(result)])
    summary = _result_row(result) | {"grad_norm": result.grad_norm}
    print(json.dumps(summary))
    if not result.converged:
        raise SystemExit(EXIT_NOT_CONVERGED)
    return summary


@rcn.command(is_unauthenticated=True)
def sweep_a(**flags: str):
    """
    Minimize over every Dirichlet node count and seed, writing the E(a) curve to sweep_a.csv.

    :param flags: run configuration overrides; --config and --run-config select a configuration file
    """
    run = _run_config(flags)
    params = run.sweep_params()
    records: list[SweepRecord] = []
    for eps in run.eps:
        try:
            records.extend(_sweep_one(params, eps))
        except ValueError as err:
            logger.error(f"Cannot sweep at eps={eps}: {err}")
            raise SystemExit(EXIT_VALIDATION) from None
    write_csv(run.output_path / "sweep_a.csv", SWEEP_COLUMNS, [_record_row(record) for record in records])
    summary = [{"eps": eps, "a_star": best_record([r for r in records if r.eps == eps]).a} for eps in run.eps]
    print(json.dumps(summary))
    if not all(record.converged for record in records):
        raise SystemExit(EXIT_NOT_CONVERGED)
    return summary


@rcn.command(is_unauthenticated=True)
def energy_curve(**flags: str):
    """
    Global minimum over a for every eps, written to energy_curve.csv, and the transition bracket in transition.yml.

    :param flags: run configuration overrides; --config and --run-config select a configuration file
    """
    run = _run_config(flags)
    params = run.sweep_params()
    eps_values = sorted(run.eps, reverse=True)
    try:
        if len(eps_values) >= 2:
            report = find_transition(eps_values, params)
            optima, bracket, kink = report.optima, report.bracket, report.kink_eps
            in_window = report.in_reference_window
        else:
            logger.warning("A transition bracket needs at least 2 eps values; reporting the single optimum")
            records = _sweep_one(params, eps_values[0])
            optima, bracket, kink, in_window = [best_record(records)], None, None, False
    except ValueError as err:
        logger.error(f"Cannot compute the energy curve: {err}")
        raise SystemExit(EXIT_VALIDATION) from None

    write_csv(run.output_path / "energy_curve.csv", CURVE_COLUMNS, [_record_row(optimum) for optimum in optima])
    summary = {
        "bracket": list(bracket) if bracket else None,
        "kink_eps": kink,
        "in_reference_window": in_window,
        "optima": [{"eps": optimum.eps, "a": optimum.a, "energy": optimum.energy_total} for optimum in optima],
    }
    write_yaml(run.output_path / "transition.yml", summary)
    print(json.dumps(summary))
    if not all(optimum.converged for optimum in optima):
        raise SystemExit(EXIT_NOT_CONVERGED)
    return summary


@rcn.command(is_unauthenticated=True)
def bounds_check(*, field_path: str = "", **flags: str):
    """
    Certify the lower bounds on a saved field, writing bounds.csv.

    :param field_path: field file written by the minimize command
    :param flags: run configuration overrides; --variants selects squeeze and/or extend
    """
    run = _run_config(flags, require_eps=False)
    if not field_path:
        logger.error("--field-path is required")
        raise SystemExit(EXIT_VALIDATION)
    try:
        field = read_field(Path(field_path))
    except (FieldFormatError, FileNotFoundError) as err:
        logger.error(f"Cannot read field: {err}")
        raise SystemExit(EXIT_VALIDATION) from None

    rows, violated, skipped = [], False, []
    for variant in run.variants:
        try:
            rows.append(certify_lower_bound(field, variant).as_row())
        except BoundViolationError as err:
            logger.error(str(err))
            rows.append(err.report.as_row())
            violated = True
        except (ValueError, QuadratureError, SubordinationError) as err:
            logger.error(f"Cannot evaluate the {variant} certificate: {err}")
            skipped.append(variant)
    write_csv(run.output_path / "bounds.csv", BOUNDS_COLUMNS, rows)
    print(json.dumps(rows))
    if violated:
        raise SystemExit(EXIT_BOUND_VIOLATION)
    if skipped:
        logger.error(f"No certificate for {', '.join(skipped)}")
        raise SystemExit(EXIT_VALIDATION)
    return rows


@rcn.command(is_unauthenticated=True)
def selfdual_probe(**flags: str):
    """
    Upper bound per eps: the lowest energy over the blended self-dual test functions and the knee solution.

    :param flags: run configuration overrides; --config and --run-config select a configuration file
    """
    run = _run_config(flags)
    try:
        records = upper_bound_probe(run.eps, run.probe_params())
    except (ValueError, PositivityError) as err:
        logger.error(f"Cannot build the self-dual test functions: {err}")
        raise SystemExit(EXIT_VALIDATION) from None
    rows = [
        {
            "eps": record.eps,
            "a": record.a,
            "branch": record.branch,
            "c": record.width,
            "blend_radius": record.blend_radius,
            "energy_bending": record.energy.bending,
            "energy_strain": record.energy.strain,
            "energy_total": record.energy.total,
        }
        for record in records
    ]
    write_csv(run.output_path / "selfdual_probe.csv", PROBE_COLUMNS, rows)
    print(json.dumps(rows))
    return rows


@rcn.command(is_unauthenticated=True)
def knee(**flags: str):
    """
    Closed-form energy and phase shift of the knee solution for every eps, written to knee.csv.

    :param flags: run configuration overrides; --height sets L for the phase shift
    """
    run = _run_config(flags)
    rows = [
        {"eps": eps, "energy": knee_energy(eps), "phase_shift": knee_phase_shift(eps, run.height_for(eps))}
        for eps in run.eps
    ]
    write_csv(run.output_path / "knee.csv", KNEE_COLUMNS, rows)
    print(json.dumps(rows))
    return rows


if __name__ == "__main__":
    rcn()
