import os
import warnings

import pytest

os.environ.setdefault("NUMBA_DISABLE_PERFORMANCE_WARNINGS", "1")
warnings.filterwarnings("ignore", message=".*TBB.*")

from henon_lab.automorphism import henon_auto, reversible_henon  # noqa: E402
from henon_lab.polyalg import UnivarPoly, rat  # noqa: E402


def P(*coeffs):
    return UnivarPoly([rat(c) if isinstance(c, str) else c for c in coeffs])


@pytest.fixture(scope="session")
def quadratic():
    return reversible_henon(P(0, 0, 1))


@pytest.fixture(scope="session")
def cubic():
    return reversible_henon(P(0, 0, 0, 1))


@pytest.fixture(scope="session")
def dissipative():
    return henon_auto(2, P(0, 0, 1))


def random_jung_word(rng, length):
    """Alternating word of random affine and elementary factors with small rationals."""
    from henon_lab.automorphism import JungFactor, JungWord

    def q():
        return rat(f"{rng.randint(-4, 4)}/{rng.randint(1, 3)}")

    factors = []
    for k in range(length):
        if k % 2 == 0:
            while True:
                m = [q() for _ in range(4)]
                if m[0] * m[3] - m[1] * m[2]:
                    break
            factors.append(JungFactor.affine(*m, q(), q()))
        else:
            deg = rng.randint(2, 3)
            coeffs = [q() for _ in range(deg)] + [rat(rng.choice([-2, -1, 1, 2]))]
            factors.append(JungFactor.elementary(rng.choice([1, -1, 2]), q(), UnivarPoly(coeffs)))
    return JungWord(tuple(factors))


def corpus_specs():
    import json
    from importlib import resources

    from henon_lab.cli import spec_from_json

    root = resources.files("henon_lab") / "corpus"
    out = {}
    for p in sorted(root.iterdir(), key=lambda p: p.name):
        if p.name.endswith(".json"):
            out[p.name[:-5]] = spec_from_json(json.loads(p.read_text()), p.name[:-5])
    return out
