import csv
import io
import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path

import numpy as np
import yaml

from databricks.labs.rcn.grid import BoundaryConfig, DirichletReflection, PhaseField, build_grid

logger = logging.getLogger(__name__)

FIELD_MAGIC = "rcn-field"
SWEEP_COLUMNS = ("eps", "a", "delta", "bending", "strain", "total", "converged", "iters")
CURVE_COLUMNS = ("eps", "a", "delta", "bending", "strain", "total", "converged", "iters", "seed", "knee_energy")
BOUNDS_COLUMNS = (
    "variant",
    "eps",
    "a",
    "lhs",
    "rhs",
    "area",
    "boundary",
    "c_sub",
    "squeeze_bound",
    "extend_bound",
    "band_lo",
    "band_hi",
    "passed",
)
PROBE_COLUMNS = ("eps", "a", "branch", "c", "blend_radius", "energy_bending", "energy_strain", "energy_total")
KNEE_COLUMNS = ("eps", "energy", "phase_shift")


class FieldFormatError(ValueError):
    """A field file is truncated, malformed or inconsistent with its header."""


def write_field(path: str | Path, field: PhaseField) -> Path:
    """
    Save a phase field as text: a header line followed by one row of m values per y-level j = 0..n.

    The header reads `rcn-field m n eps L k delta reflection`; values are written with 17 significant digits.
    """
    grid, config = field.grid, field.config
    header = (
        f"{FIELD_MAGIC} {grid.m} {grid.n} {grid.eps!r} {grid.height!r} {config.k} {config.delta!r} "
        f"{config.reflection.value}"
    )
    target = Path(path)
    np.savetxt(target, field.values.T, fmt="%.17g", header=header, comments="")
    logger.debug(f"Field written to {target}")
    return target


def _parse_header(line: str) -> tuple[int, int, float, float, int, float, DirichletReflection]:
    tokens = line.split()
    if len(tokens) not in (7, 8) or tokens[0] != FIELD_MAGIC:
        raise FieldFormatError(f"Expected a '{FIELD_MAGIC} m n eps L k delta [reflection]' header, got '{line}'")
    try:
        reflection = DirichletReflection(tokens[7]) if len(tokens) == 8 else DirichletReflection.ODD
        return (
            int(tokens[1]),
            int(tokens[2]),
            float(tokens[3]),
            float(tokens[4]),
            int(tokens[5]),
            float(tokens[6]),
            reflection,
        )
    except ValueError as err:
        raise FieldFormatError(f"Malformed field header '{line}': {err}") from None


def read_field(path: str | Path) -> PhaseField:
    """
    Load a phase field written by write_field.

    :param path: the field file
    :return: the field, bound to the grid and boundary data of its header
    :raises FieldFormatError: when the file is malformed or violates the boundary conditions
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        msg = f"Field file {path} missing"
        raise FileNotFoundError(msg) from None
    lines = text.splitlines()
    if not lines:
        raise FieldFormatError(f"Field file {path} is empty")
    m, n, eps, height, k, delta, reflection = _parse_header(lines[0])
    try:
        rows = np.loadtxt(io.StringIO("\n".join(lines[1:])), ndmin=2)
        grid = build_grid(eps, height, m, n)
        field = PhaseField(rows.T, grid, BoundaryConfig(k=k, delta=delta, reflection=reflection))
    except ValueError as err:
        raise FieldFormatError(f"Field file {path} is inconsistent with its header: {err}") from None
    if not field.satisfies_bc(atol=1e-9):
        raise FieldFormatError(f"Field file {path} violates the discrete boundary conditions")
    return field


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "nan" if math.isnan(value) else f"{value:.12g}"
    return str(value)


def write_csv(path: str | Path, columns: Sequence[str], rows: Iterable[Mapping[str, object]]) -> Path:
    """Write rows with a header line and a fixed column order."""
    target = Path(path)
    with target.open("w", encoding="utf-8", newline="") as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format(row[column]) for column in columns])
    logger.info(f"Wrote {target}")
    return target


def read_csv(path: str | Path) -> list[dict[str, str]]:
    with Path(path).open(encoding="utf-8", newline="") as file:
        return list(csv.DictReader(file))


def write_yaml(path: str | Path, payload: Mapping) -> Path:
    target = Path(path)
    with target.open("w", encoding="utf-8") as file:
        yaml.safe_dump(dict(payload), file, sort_keys=False)
    logger.info(f"Wrote {target}")
    return target
