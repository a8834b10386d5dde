import math

import numpy as np
import pytest

from databricks.labs.rcn.grid import DirichletReflection, PhaseField
from databricks.labs.rcn.utils import FieldFormatError, read_csv, read_field, write_csv, write_field, write_yaml


def test_field_file_preserves_values_and_boundary_data(tmp_path, rough_field):
    path = write_field(tmp_path / "field.txt", rough_field)
    loaded = read_field(path)
    np.testing.assert_array_equal(loaded.values, rough_field.values)
    assert loaded.grid == rough_field.grid
    assert loaded.config == rough_field.config
    header = path.read_text(encoding="utf-8").splitlines()[0]
    assert header.startswith("rcn-field 16 16 0.5 10.0 8 ")
    assert header.endswith(" odd")


def test_field_header_without_reflection_defaults_to_odd(tmp_path, knee_field):
    path = write_field(tmp_path / "field.txt", knee_field)
    lines = path.read_text(encoding="utf-8").splitlines()
    lines[0] = lines[0].rsplit(" ", 1)[0]
    path.write_text("\n".join(lines), encoding="utf-8")
    assert read_field(path).config.reflection == DirichletReflection.ODD


def test_read_field_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError, match="Field file .* missing"):
        read_field(tmp_path / "absent.txt")


@pytest.mark.parametrize(
    "content, message",
    [
        ("", "is empty"),
        ("rcn-field 8 8\n", "header"),
        ("rcn-field 8 8 0.8 6.0 zero 0.0 odd\n0 0 0 0 0 0 0 0\n", "Malformed field header"),
        ("rcn-field 8 8 0.8 6.0 0 0.0 odd\n" + "0 0 0 0 0 0 0 0\n" * 3, "inconsistent with its header"),
    ],
)
def test_read_field_rejects_malformed_files(tmp_path, content, message):
    path = tmp_path / "field.txt"
    path.write_text(content, encoding="utf-8")
    with pytest.raises(FieldFormatError, match=message):
        read_field(path)


def test_read_field_rejects_boundary_violations(tmp_path, rough_field):
    values = rough_field.values.copy()
    values[:, -1] += 1.0
    path = write_field(tmp_path / "field.txt", PhaseField(values, rough_field.grid, rough_field.config))
    with pytest.raises(FieldFormatError, match="violates the discrete boundary conditions"):
        read_field(path)


def test_write_csv_formats_values(tmp_path):
    rows = [
        {"eps": 0.5, "converged": True, "iters": 12, "total": 1 / 3},
        {"eps": 0.25, "converged": False, "iters": 0, "total": math.nan},
    ]
    path = write_csv(tmp_path / "out.csv", ("eps", "total", "converged", "iters"), rows)
    assert path.read_text(encoding="utf-8").splitlines() == [
        "eps,total,converged,iters",
        "0.5,0.333333333333,true,12",
        "0.25,nan,false,0",
    ]
    assert read_csv(path)[1]["converged"] == "false"


def test_write_csv_requires_every_column(tmp_path):
    with pytest.raises(KeyError):
        write_csv(tmp_path / "out.csv", ("eps", "a"), [{"eps": 0.5}])


def test_write_yaml_keeps_key_order(tmp_path):
    path = write_yaml(tmp_path / "out.yml", {"bracket": [0.45, 0.4], "kink_eps": None})
    assert path.read_text(encoding="utf-8").splitlines()[0] == "bracket:"
    assert "kink_eps: null" in path.read_text(encoding="utf-8")
