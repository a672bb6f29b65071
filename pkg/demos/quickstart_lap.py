"""Drive one scripted-expert lap and score it.

Smallest possible tour of the simulation side: build the default track,
let the pure-pursuit expert drive one lap through the closed-loop driver,
then run the scorer over the trace it produced. No network involved.

    python3 demos/quickstart_lap.py
"""

import json

from pilotstack.autopilot import run_loop, write_trace
from pilotstack.evalharness import expert_controller, score_episode
from pilotstack.track import (CameraModel, default_track, point_at_arc,
                              tangent_at_arc)
from pilotstack.vehicle import VehicleParams, VehicleState


def main():
    track = default_track()
    vehicle = VehicleParams()
    camera = CameraModel()

    sx, sy = point_at_arc(track, 0.0)
    start = VehicleState(x_m=sx, y_m=sy,
                         heading_rad=tangent_at_arc(track, 0.0), speed_mps=0.0)

    print(f"track: {track.length_m:.1f} m loop, "
          f"lane {track.lane_width_m:.2f} m wide")
    print("driving the scripted expert...")
    result = run_loop({}, None, track, vehicle, camera, start,
                      controller=lambda state, frame:
                      expert_controller(state, track, vehicle))

    word = "completed a lap" if result.completed else "did not finish"
    print(f"{word} in {result.steps} steps "
          f"({result.steps / 20.0:.1f} s simulated)")

    metrics = score_episode(result.trace, track, dt_s=0.05)
    print(json.dumps(json.loads(metrics.to_json()), indent=2))

    write_trace("expert_lap.jsonl", result.trace)
    print("trace written to expert_lap.jsonl "
          "(score it again with: pilotstack eval --trace expert_lap.jsonl)")


if __name__ == "__main__":
    main()
