"""Acceptance: all five figure kinds render from a completed solve run, and
the decay annotation equals the manifest exponent to two decimals."""

import json

from plotkit import KINDS, RunArtifacts, render


def test_all_five_kinds_from_solve_run(solve_run, tmp_path):
    written, skipped = render(solve_run, kinds=KINDS, out_dir=tmp_path)
    assert not skipped
    assert sorted(p.name for p in written) == [
        "boundary.png", "convergence.png", "decay.png", "h2.png", "height.png"]
    for p in written:
        assert p.stat().st_size > 1000

    manifest = json.loads((solve_run / "manifest.json").read_text())
    want = manifest["results"]["geometry"]["h2_decay"]["exponent"]
    shown = RunArtifacts.load(solve_run).decay_exponent
    assert abs(shown - want) < 0.005      # identical source, 2-decimal display
    print(f"\nPASS criterion 13: five figure kinds rendered; decay annotation "
          f"{shown:.2f} matches the manifest exponent {want:.2f}")
