"""Threshold-structure checks for a slot decision.

Each rule names a condition on the instance's queues and the forced value
(or sign) of one decision variable; a returned string describes a breach.
"""

import math


def _thresholds(inst):
    eps = inst.epsilon
    scale = 2.0 * inst.v * inst.gamma * inst.occupied_next * (1.0 - eps) ** 2 * inst.eta_over_a
    coast = (inst.t_ref_next - eps * inst.temp) / (1.0 - eps)
    b = scale * (inst.t_out - coast)
    c = scale * (inst.t_out + inst.eta_over_a * inst.e_max - coast)
    return b, c


def violations(inst, dec, tol=1e-9):
    out = []
    v, bmax, smin = inst.v, inst.b_max, inst.s_min
    b_t, c_t = _thresholds(inst)
    pull = -inst.epsilon * (1.0 - inst.epsilon) * inst.h * inst.eta_over_a
    if v * smin + b_t > pull and dec.e > tol:
        out.append(f"hvac should be off, e={dec.e}")
    if v * bmax + c_t < pull and dec.e < inst.e_max - tol:
        out.append(f"hvac should be at e_max, e={dec.e}")
    backlog = inst.q + inst.z
    x_full = max(0.0, min(inst.x_max, inst.q))
    if backlog < v * smin and dec.x > tol:
        out.append(f"ev should idle, x={dec.x}")
    if backlog > v * bmax and not math.isclose(dec.x, x_full, rel_tol=0, abs_tol=tol):
        out.append(f"ev should charge fully, x={dec.x} vs {x_full}")
    if inst.k > -v * smin and dec.y > tol:
        out.append(f"ess should not charge, y={dec.y}")
    if inst.k < -v * bmax and dec.y < -tol:
        out.append(f"ess should not discharge, y={dec.y}")
    return out
