"""Smoke test for the pydcmpc extension module.

Build the module first, e.g. `maturin develop -m crates/python/Cargo.toml`, or
`cargo build --release -p pydcmpc --features extension-module` and put
`target/release/libpydcmpc.so` on PYTHONPATH as `pydcmpc.so`.
"""

import pathlib
import sys

import pydcmpc

ROOT = pathlib.Path(__file__).resolve().parent.parent
SHORT_WALK = ROOT / "crates" / "core" / "tests" / "data" / "short_walk.json"
FIG5 = ROOT / "crates" / "core" / "scenarios" / "fig5_baseline.json"


def main() -> int:
    assert pydcmpc.modes() == ["cop-only", "cop+step", "cop+step+cmp", "cop+cmp"]

    walk = pydcmpc.Scenario.load(str(SHORT_WALK))
    assert walk.mode == "cop+step+cmp"
    result = pydcmpc.run(walk)
    assert result.completed, result
    traj = result.trajectory()
    assert len(traj["t"]) == len(traj["cop_x"]) > 0
    assert not any(traj["push_active"])
    print("short walk:", result)

    # Baseline controllers never modulate the CMP.
    baseline = pydcmpc.run(walk.with_mode("cop+step"))
    assert baseline.peak_hdot == 0.0

    fell = pydcmpc.run(pydcmpc.Scenario.load(str(FIG5)))
    assert not fell.completed and fell.fall is not None
    print("fig5 baseline:", fell)

    env = pydcmpc.envelope(walk.with_mode("cop-only"), [0.0, 1.0], tol=20.0)
    assert env["bracket"][1] - env["bracket"][0] <= 20.0
    print("lateral envelope (cop-only): %.1f N" % env["magnitude"])

    try:
        pydcmpc.Scenario.from_json('{"gait": {"stride": 1}}')
    except ValueError as e:
        assert "stride" in str(e)
    else:
        raise AssertionError("unknown key accepted")

    print("ok")
    return 0


if __name__ == "__main__":
    sys.exit(main())
