"""Desk-scale lunar robotics workbench.

Subpackages:
    scenelang     declarative machine/scenario modeling language (.plx)
    terrain       heightfield regolith terrain with mass accounting
    control       Ackermann / pivot / PD wheel control
    vehicle       rocker-bogie rover kinematics, camera, sensors
    autonomy      VLM skill orchestration (Drive/Rotate/Finish/...)
    learn         drive-skill RL environment and PPO trainer
    coordination  behavior trees and the excavator/dumper scenario
    runner        CLI, batch runs, recording/replay, live service
"""

__version__ = "0.1.0"
