"""Behavior cloning for a mini self-driving car, end to end.

Record demonstrations by teleoperating a simulated Ackermann vehicle,
train a small convolutional network on the camera frames and commands,
then let the network drive. Everything lives behind one CLI
(``pilotstack``); the submodules are importable on their own:

- ``vehicle``: kinematic bicycle model and size-limit checks
- ``actuation``: command-to-PWM mapping for the servo and motor driver
- ``track``: centerline geometry and the ground-plane camera renderer
- ``datastore``: on-disk session format, splits, batches
- ``nn``: the network, training loop, checkpoint format
- ``autopilot``: closed-loop inference driving
- ``evalharness``: scripted expert, lap metrics, dataset synthesis
- ``teleop``: WebSocket service for browser driving
"""

__version__ = "0.1.0"
