"""Sample with the command-line front end, then replay one skeleton.

Run:  python demos/cli_roundtrip.py
"""

import filecmp
import os
import tempfile

from pdmpkit.cli import main

here = os.path.dirname(os.path.abspath(__file__))
config = os.path.join(here, "..", "configs", "bps_gaussian.yaml")

with tempfile.TemporaryDirectory() as out:
    assert main(["sample", config, "--out", out, "--chains", "2"]) == 0
    print(sorted(os.listdir(out)))
    skeleton = os.path.join(out, "chain_000.jsonl")
    assert main(["replay", skeleton]) == 0
    same = filecmp.cmp(os.path.join(out, "chain_000.csv"), os.path.join(out, "chain_000.replay.csv"), shallow=False)
    print("replayed CSV identical to sampled CSV:", same)
