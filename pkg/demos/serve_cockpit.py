"""Start the teleop service and drive the simulated car from a browser.

Serves the cockpit on http://127.0.0.1:8321/ with the built-in fallback
viewer (read-only camera + status). With the monitor UI built under
frontend/dist it serves that instead, which adds keyboard and gamepad
driving, recording control and the mode switch. Pass a checkpoint to
start in autopilot and watch the network drive.

    python3 demos/serve_cockpit.py [model.acpm]
"""

import sys

from pilotstack.cli import main as cli


def main():
    argv = ["drive", "--sessions", "sessions"]
    if len(sys.argv) > 1:
        argv += ["--model", sys.argv[1]]
    print("Ctrl-C stops the server; recordings land under ./sessions/")
    sys.exit(cli(argv))


if __name__ == "__main__":
    main()
