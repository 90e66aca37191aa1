import os
import shutil
import subprocess
from pathlib import Path

import pytest

SOURCE = Path(os.environ.get("CNSLAB_SOURCE_DIR", Path(__file__).resolve().parents[2]))


@pytest.fixture(scope="session")
def cli():
    path = os.environ.get("CNSLAB_CLI") or shutil.which("cnslab")
    if not path:
        candidate = SOURCE / "build" / "cnslab"
        path = str(candidate) if candidate.exists() else None
    if not path:
        pytest.skip("cnslab executable not found")

    def call(*args, check=True):
        return subprocess.run([path, *map(str, args)], capture_output=True, text=True, check=check)

    return call


@pytest.fixture(scope="session")
def source():
    return SOURCE
