import hashlib
import os
import subprocess
import sys

import numpy as np

from henon_lab import kernels
from henon_lab.green import green_system


def test_jit_flag(monkeypatch):
    monkeypatch.setenv("HENON_LAB_DISABLE_JIT", "1")
    assert not kernels.jit_enabled()
    monkeypatch.setenv("HENON_LAB_DISABLE_JIT", "0")
    assert kernels.jit_enabled() == kernels._HAVE_NUMBA


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("HENON_LAB_THREADS", "1")
    assert kernels.configure_threads() == 1
    monkeypatch.setenv("HENON_LAB_THREADS", "10000")
    assert 1 <= kernels.configure_threads() <= os.cpu_count() * 4


def test_orbit_backends(quadratic):
    gs = green_system(quadratic)
    s = gs.plus_side
    a = kernels.orbit(s.arrays, s.maxe, 1.5 + 0.5j, 0.25j, 12, use_jit=True)
    b = kernels.orbit(s.arrays, s.maxe, 1.5 + 0.5j, 0.25j, 12, use_jit=False)
    np.testing.assert_allclose(a, b, rtol=1e-13, atol=0)


def test_fallback_render_identical(tmp_path):
    digests = set()
    for flag in ("0", "1"):
        out = tmp_path / f"r{flag}.ppm"
        env = dict(os.environ, HENON_LAB_DISABLE_JIT=flag)
        res = subprocess.run([sys.executable, "-m", "henon_lab.cli", "green", "render", "cubic",
                              "--window=-2,2,-2,2", "--res", "32", "--out", str(out)],
                             capture_output=True, env=env)
        assert res.returncode == 0, res.stderr
        digests.add(hashlib.sha256(out.read_bytes()).hexdigest())
    assert len(digests) == 1
