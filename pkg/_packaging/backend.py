"""Build backend: setuptools, configured from pyproject.toml only.

The repository's setup.py is an interactive quick-setup helper (installs
requirements, prompts for config), not a packaging script, so the stock
setuptools backend must not exec it during `pip install`.
"""

from setuptools import build_meta as _orig
from setuptools.build_meta import *  # noqa: F401,F403


class _Backend(_orig._BuildMetaBackend):
    def run_setup(self, setup_script="setup.py"):
        # Nonexistent path -> setuptools falls back to `setup()` with pyproject config.
        super().run_setup(setup_script="__no_setup_py__.py")


_backend = _Backend()
get_requires_for_build_wheel = _backend.get_requires_for_build_wheel
get_requires_for_build_sdist = _backend.get_requires_for_build_sdist
get_requires_for_build_editable = _backend.get_requires_for_build_editable
prepare_metadata_for_build_wheel = _backend.prepare_metadata_for_build_wheel
prepare_metadata_for_build_editable = _backend.prepare_metadata_for_build_editable
build_wheel = _backend.build_wheel
build_sdist = _backend.build_sdist
build_editable = _backend.build_editable
