"""Miniature end-to-end run: synthesize, train briefly, drive, score.

Same shape as the real workflow but sized to finish in about a minute,
so expect a short, wobbly drive rather than a clean lap. The full recipe
(1500 samples, 60 epochs) lives in the README.

    python3 demos/pipeline_small.py [workdir]
"""

import sys
import tempfile
from pathlib import Path

from pilotstack.cli import main as cli


def run(argv):
    print("$ pilotstack " + " ".join(argv))
    rc = cli(argv)
    if rc != 0:
        sys.exit(f"step failed with exit code {rc}")


def main():
    workdir = Path(sys.argv[1]) if len(sys.argv) > 1 else \
        Path(tempfile.mkdtemp(prefix="pilotstack_demo_"))
    workdir.mkdir(parents=True, exist_ok=True)
    data = workdir / "data"
    model = workdir / "model.acpm"
    trace = workdir / "trace.jsonl"

    if not (data / "manifest.json").is_file():
        run(["synth", "--samples", "300", "--seed", "42", "--out", str(data)])
    run(["train", "--data", str(data), "--out", str(model),
         "--epochs", "8", "--batch-size", "64"])
    run(["autopilot", "--model", str(model), "--out", str(trace),
         "--max-steps", "400"])
    run(["eval", "--trace", str(trace)])
    print(f"\nartifacts kept under {workdir}")
    print("more data and epochs is the whole difference between this "
          "and a car that laps; see the README")


if __name__ == "__main__":
    main()
