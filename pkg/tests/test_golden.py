"""A fresh identity-profile run must reproduce the committed outputs byte for byte.

Regenerate with ``rehabfuzz run configs/identity.json --out tests/golden/identity``.
"""
from pathlib import Path

import pytest

from rehabfuzz.cli import main

ROOT = Path(__file__).resolve().parents[1]
GOLDEN = Path(__file__).parent / "golden" / "identity"


@pytest.mark.parametrize("name", ["frames.csv", "reference.csv", "events.jsonl", "decisions.jsonl"])
def test_identity_golden(tmp_path_factory, name, capsys):
    out = tmp_path_factory.getbasetemp() / "golden_identity"
    if not out.exists():
        assert main(["run", str(ROOT / "configs" / "identity.json"), "--out", str(out)]) == 0
        capsys.readouterr()
    assert (out / name).read_bytes() == (GOLDEN / name).read_bytes()
