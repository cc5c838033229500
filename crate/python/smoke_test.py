"""Smoke test for the Python bindings.

Build first:
    cargo build --release -p commonness-py --features extension-module
"""

import importlib.util
import os
import shutil
import sys
import tempfile
from fractions import Fraction
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]


def load():
    for profile in ("release", "debug"):
        lib = ROOT / "target" / profile / "libcommonness_py.so"
        if lib.exists():
            break
    else:
        sys.exit("libcommonness_py.so not found; build the extension first")
    tmp = tempfile.mkdtemp()
    dst = os.path.join(tmp, "commonness_py.so")
    shutil.copy(lib, dst)
    spec = importlib.util.spec_from_file_location("commonness_py", dst)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


def main():
    cm = load()
    phi = cm.System.preset("phi", 3)
    assert phi.p == 3 and phi.vars == 9

    # constant 1/2 gives T = 2^-9 on either route
    t = phi.t(1, [0.5, 0.5, 0.5])
    assert abs(t - 2.0**-9) < 1e-12, t
    assert Fraction(phi.t_exact(1, ["1/2"] * 3)) == Fraction(1, 2**9)
    assert abs(phi.defect(1, [0.5] * 3, "common")) < 1e-12

    # indicator of {x1 = 1} has no monochromatic solutions
    d = Fraction(phi.t_exact(1, ["0", "1", "0"]))
    assert d == 0
    assert phi.defect(1, [0.0, 1.0, 0.0], "sidorenko") < 0

    best, values = phi.search("common", n=1, restarts=4, seed=1)
    assert best >= -1e-6 and len(values) == 3

    lemmas = cm.verify_lemmas()
    assert len(lemmas) == 7 and all(ok for _, ok in lemmas)

    try:
        cm.System.preset("nope")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown preset accepted")

    print(f"commonness_py {cm.__version__}: smoke test passed")


if __name__ == "__main__":
    main()
