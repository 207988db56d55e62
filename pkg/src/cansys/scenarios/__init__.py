"""Bundled scenario configs for the command-line front-end."""

from importlib.resources import files
from pathlib import Path


def scenario_path(name="rank_one_n1"):
    """Filesystem path of a bundled scenario config."""
    resource = files(__package__).joinpath(f"{name}.json")
    path = Path(str(resource))
    if not path.exists():
        raise FileNotFoundError(f"no bundled scenario named '{name}'")
    return path
