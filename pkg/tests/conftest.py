import pytest

from databricks.labs.rcn.grid import BoundaryConfig, build_grid


@pytest.fixture
def config_yml_content():
    return """version: 1
log_level: DEBUG
run_configs:
- name: default
  eps:
  - 0.5
  m: 16
  n: 16
  height: 10.0
- name: transition
  eps:
  - 0.55
  - 0.5
  - 0.45
  k:
  - 0
  - 8
  - 16
  seeds:
  - knee
  tol: 1.0e-04
  jobs: 2
"""


@pytest.fixture
def small_grid():
    return build_grid(0.5, 10.0, 16, 16)


@pytest.fixture
def half_dirichlet(small_grid):
    return BoundaryConfig(k=small_grid.m // 2)
