from databricks.labs.blueprint.logger import install_logger
from databricks.labs.rcn.__about__ import __version__

install_logger()

__all__ = ["__version__"]
