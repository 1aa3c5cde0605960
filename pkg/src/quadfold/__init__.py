"""quadfold: simulation, design and control toolkit for a single-pivot folding quadrotor.

The vehicle carries four tilted rotors on two arms joined by one actuated
pivot. Folding the joint angle from 0 (standard X layout) to pi/2 (stacked
twin-rotor pairs) narrows the body width; all models here are parameterized
by that joint angle.
"""

from quadfold.params import ParamSet
from quadfold.morphology import MorphState, arm_angle, body_width

__all__ = ["ParamSet", "MorphState", "arm_angle", "body_width"]

__version__ = "0.1.0"
