"""The ten-slot synthesis condition record shared across the pipeline."""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Optional

#: Canonical slot order. Every record, prompt schema, and report uses this order.
SLOTS: tuple[str, ...] = (
    "metal_precursor_name",
    "metal_precursor_amount",
    "organic_linker_name",
    "organic_linker_amount",
    "solvent_name",
    "solvent_amount",
    "modulator_name",
    "modulator_amount",
    "reaction_duration",
    "reaction_temperature",
)


@dataclass(frozen=True)
class SynthesisRecord:
    """Raw extracted conditions for one paragraph.

    Absence is explicit: a missing condition is ``None``, never ``""``.
    Amounts keep their original units at this stage.
    """

    metal_precursor_name: Optional[str] = None
    metal_precursor_amount: Optional[str] = None
    organic_linker_name: Optional[str] = None
    organic_linker_amount: Optional[str] = None
    solvent_name: Optional[str] = None
    solvent_amount: Optional[str] = None
    modulator_name: Optional[str] = None
    modulator_amount: Optional[str] = None
    reaction_duration: Optional[str] = None
    reaction_temperature: Optional[str] = None

    def __post_init__(self) -> None:
        for f in fields(self):
            v = getattr(self, f.name)
            if v is not None and not isinstance(v, str):
                raise TypeError(f"slot {f.name!r} must be str or None, got {type(v).__name__}")
            if v == "":
                raise ValueError(f"slot {f.name!r} is an empty string; use None for absence")

    def get(self, slot: str) -> Optional[str]:
        if slot not in SLOTS:
            raise KeyError(f"unknown slot: {slot!r}")
        return getattr(self, slot)

    def replace(self, **changes: Optional[str]) -> "SynthesisRecord":
        data = self.to_dict()
        data.update(changes)
        return SynthesisRecord(**data)

    def to_dict(self) -> dict[str, Optional[str]]:
        """Slot -> value mapping in canonical slot order, absences as None."""
        return {slot: getattr(self, slot) for slot in SLOTS}

    @classmethod
    def from_dict(cls, data: dict) -> "SynthesisRecord":
        unknown = set(data) - set(SLOTS)
        if unknown:
            raise KeyError(f"unknown slots: {sorted(unknown)}")
        return cls(**{k: data[k] for k in SLOTS if k in data})

    def present_slots(self) -> list[str]:
        return [slot for slot in SLOTS if getattr(self, slot) is not None]


EMPTY_RECORD = SynthesisRecord()
