"""Bundled example inputs.

Small cover and algebra files used by the test suite and reachable from
the command line by bare name.  ``available()`` lists them, and
``preset_path`` resolves a name like ``"sl2_3open.nerve"`` to a real path.
"""

from importlib import resources

from ..errors import InputError

_SUFFIXES = (".nerve", ".conformal", ".vertex")


def _root():
    return resources.files(__package__)


def available():
    out = []
    for entry in _root().iterdir():
        if entry.name.endswith(_SUFFIXES):
            out.append(entry.name)
    return sorted(out)


def preset_path(name):
    entry = _root() / name
    if not name.endswith(_SUFFIXES) or not entry.is_file():
        raise InputError(
            f"unknown preset {name!r}; available: {', '.join(available())}"
        )
    return str(entry)
