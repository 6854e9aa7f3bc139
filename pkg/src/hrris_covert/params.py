"""System-level parameters shared by the optimizer and the experiment driver."""
from __future__ import annotations

from dataclasses import dataclass, field

from .channel import ArraySpec, FadingSpec, SceneGeometry, dbm_to_watts

PLACEMENTS = ("first", "random")


class ParamsError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class SystemParams:
    """Covertness level, budgets (dBm), noise (dBm), scene and active-set size."""
    epsilon: float = 0.01
    l: int = 100
    pa_max_dbm: float = 30.0
    pr_max_dbm: float = -30.0
    noise_dbm: float = -80.0
    geometry: SceneGeometry = field(default_factory=SceneGeometry)
    arrays: ArraySpec = field(default_factory=ArraySpec)
    fading: FadingSpec = field(default_factory=FadingSpec)
    active_count: int = 0
    active_placement: str = "first"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ParamsError("epsilon", "must be > 0")
        if int(self.l) != self.l or self.l < 1:
            raise ParamsError("l", "must be an integer >= 1")
        if int(self.active_count) != self.active_count or self.active_count < 0:
            raise ParamsError("active_count", "must be a non-negative integer")
        if self.active_count > self.arrays.n_elements:
            raise ParamsError("active_count",
                              f"K={self.active_count} exceeds N={self.arrays.n_elements}")
        if self.active_placement not in PLACEMENTS:
            raise ParamsError("active_placement", f"must be one of {PLACEMENTS}")

    @property
    def pa_max(self) -> float:
        return float(dbm_to_watts(self.pa_max_dbm))

    @property
    def pr_max(self) -> float:
        return float(dbm_to_watts(self.pr_max_dbm))

    @property
    def covertness_threshold(self) -> float:
        """2 eps^2, in nats."""
        return 2.0 * self.epsilon ** 2
