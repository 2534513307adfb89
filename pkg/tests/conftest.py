from pathlib import Path

import pytest

from edlc.frontend import load
from edlc.pipeline import CompileOptions, compile_program

ROOT = Path(__file__).resolve().parent.parent
WAVE = ROOT / "examples_edl" / "wave.edl"
GOLDEN = Path(__file__).resolve().parent / "golden"
NEGATIVE = Path(__file__).resolve().parent / "fixtures" / "negative"


@pytest.fixture(scope="session")
def wave_source() -> str:
    return WAVE.read_text()


@pytest.fixture(scope="session")
def wave_program(wave_source):
    return load(wave_source, str(WAVE))


def compile_wave(dim: int = 3, half_width: int | None = None, **kw):
    return compile_program(load(WAVE.read_text(), str(WAVE)), CompileOptions(dim=dim, half_width=half_width, **kw))


def negative_fixtures() -> list[tuple[str, int, str]]:
    rows = []
    for line in (NEGATIVE / "expected.txt").read_text().splitlines():
        if line.strip() and not line.startswith("#"):
            name, lineno, error = line.split()[:3]
            rows.append((name, int(lineno), error))
    return rows
