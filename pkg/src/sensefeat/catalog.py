"""Feature naming and the deterministic catalog.

Names follow `<sensor>:<stem>[:<scope>]:<epoch>:<granularity>`, lower snake
case; the concrete instance lives in the row's slice id
(`<epoch>:<granularity>:<index>`). Change features append `:change:<field>`
to the weekly feature name. Identical configurations always enumerate the
identical catalog, in lexicographic order.
"""

from __future__ import annotations

from typing import Sequence

from .change import CHANGE_FIELDS
from .config import StudyConfig
from .errors import ConfigError
from .features import bluetooth, calls, fitbit, location, places, screen
from .windowing import EPOCHS, GRANULARITIES

SENSORS = ("bluetooth", "calls", "location", "places", "screen", "sleep", "steps")

_KEY_SOURCES = {
    "bluetooth": bluetooth.feature_keys,
    "calls": calls.feature_keys,
    "location": location.feature_keys,
    "places": places.feature_keys,
    "screen": screen.feature_keys,
    "sleep": fitbit.sleep_feature_keys,
    "steps": fitbit.steps_feature_keys,
}


def sensor_keys(sensor: str) -> list[str]:
    """The `<stem>[:<scope>]` keys one sensor module emits."""
    if sensor not in _KEY_SOURCES:
        raise ConfigError(f"unknown sensor {sensor!r}")
    return _KEY_SOURCES[sensor]()


def resolve_sensors(config: StudyConfig, sensors: Sequence[str] | None) -> tuple[str, ...]:
    """Validate a --sensors selection; places needs a configured map."""
    selected = tuple(sensors) if sensors is not None else SENSORS
    for s in selected:
        if s not in SENSORS:
            raise ConfigError(f"unknown sensor {s!r} (choose from {', '.join(SENSORS)})")
    if config.place_map is None:
        selected = tuple(s for s in selected if s != "places")
    return selected


def feature_name(sensor: str, key: str, epoch: str, granularity: str) -> str:
    return f"{sensor}:{key}:{epoch}:{granularity}"


def change_name(sensor: str, key: str, epoch: str, field: str) -> str:
    return f"{sensor}:{key}:{epoch}:weekly:change:{field}"


def enumerate_catalog(
    config: StudyConfig,
    sensors: Sequence[str] | None = None,
    epochs: Sequence[str] | None = None,
    granularities: Sequence[str] | None = None,
) -> list[str]:
    """Every feature name a run with these filters can emit, sorted."""
    use_sensors = resolve_sensors(config, sensors)
    use_epochs = tuple(epochs) if epochs is not None else EPOCHS
    use_grans = tuple(granularities) if granularities is not None else GRANULARITIES
    for e in use_epochs:
        if e not in EPOCHS:
            raise ConfigError(f"unknown epoch {e!r}")
    for g in use_grans:
        if g not in GRANULARITIES:
            raise ConfigError(f"unknown granularity {g!r}")

    names: list[str] = []
    for sensor in use_sensors:
        for key in sensor_keys(sensor):
            for epoch in use_epochs:
                for gran in use_grans:
                    names.append(feature_name(sensor, key, epoch, gran))
                if "weekly" in use_grans:
                    for field in CHANGE_FIELDS:
                        names.append(change_name(sensor, key, epoch, field))
    names.sort()
    return names
