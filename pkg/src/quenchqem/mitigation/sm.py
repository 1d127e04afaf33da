"""Self-mitigation: rescale by the depolarizing factor seen on a test circuit."""

from __future__ import annotations

import math

from .config import MitigatedEstimate


def sm_mitigate(
    target_raw: float,
    test_raw: float,
    test_ideal: float,
    target_std: float = 0.0,
    test_std: float = 0.0,
    dead_zone: float = 0.05,
    p_max: float = 0.95,
) -> MitigatedEstimate:
    """mitigated = target_raw / (1 - p) with p = 1 - test_raw / test_ideal.

    Inside the dead zone or past ``p_max`` the raw value is returned with a
    flag instead.
    """
    if abs(test_ideal) < dead_zone:
        return MitigatedEstimate(
            target_raw, target_raw, target_std, {"p": None}, ["sm dead zone: raw value returned"]
        )
    if test_raw == 0:
        return MitigatedEstimate(
            target_raw, target_raw, target_std, {"p": 1.0}, ["sm p >= p_max: raw value returned"]
        )
    p = 1.0 - test_raw / test_ideal
    if p >= p_max:
        return MitigatedEstimate(
            target_raw, target_raw, target_std, {"p": p}, ["sm p >= p_max: raw value returned"]
        )
    scale = test_ideal / test_raw
    value = target_raw * scale
    err = math.hypot(scale * target_std, value / test_raw * test_std)
    return MitigatedEstimate(target_raw, value, err, {"p": p, "test_raw": test_raw, "test_ideal": test_ideal})
