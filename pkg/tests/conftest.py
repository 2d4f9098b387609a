import json
import sys

import pytest

from logisticlab.dynamics import find_tip_c
from logisticlab.game import BirkhoffSampler, GameConfig, derive_seed, run_game
from logisticlab.numerics import DyadicInterval, DyadicRational

GAME_SEED = 2024


@pytest.fixture
def verdict(capsys):
    """Print one PASS/FAIL line that survives output capturing."""

    def emit(label: str, ok: bool, detail: str = ""):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {label}: {detail}", file=sys.stdout, flush=True)
        return ok

    return emit


@pytest.fixture(scope="session")
def cache_dir(tmp_path_factory):
    return str(tmp_path_factory.mktemp("tuner-cache"))


@pytest.fixture(scope="session")
def default_bracket():
    return DyadicInterval(find_tip_c(256).hi, DyadicRational(4))


@pytest.fixture(scope="session")
def game_run(cache_dir, default_bracket, tmp_path_factory):
    """Two rounds against honest Birkhoff samplers; played once per session."""
    import time
    opps = [BirkhoffSampler(seed=derive_seed(GAME_SEED, "opponent", n)) for n in (1, 2)]
    cfg = GameConfig(rounds=2, max_rounds=2, cache_dir=cache_dir)
    t0 = time.time()
    tr = run_game(default_bracket, opps, 2, cfg)
    seconds = time.time() - t0
    path = tmp_path_factory.mktemp("game") / "transcript.json"
    path.write_text(json.dumps(tr.to_json(), sort_keys=True))
    return {"transcript": tr, "path": path, "seconds": seconds, "config": cfg, "opponents": opps}
