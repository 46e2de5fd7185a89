import os

import pytest

# Plain stream logging instead of the OTEL handler
os.environ["TESTING"] = "true"

import app


@pytest.fixture
def run_cli(tmp_path, monkeypatch):
    """Run the command line with --out pointing at a fresh directory; returns (status, out_dir)."""
    for name in ("ULTRAFUN_CONFIG", "ULTRAFUN_OUT", "ULTRAFUN_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)
    out = tmp_path / "out"

    def run(*args):
        return app.main([*args, "--out", str(out)]), out
    return run
