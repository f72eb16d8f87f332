"""Centralized, PII-free record-keeping keyed by the coupon pseudonym.

Dose records and symptom self-reports carry only the pseudorandom coupon
identifier, never names or birth dates; the schema rejects any field it
does not know. Aggregation answers population-level questions (counts per
city, phase, manufacturer, dose number) without touching identity.
"""

from __future__ import annotations

import json
import threading
from dataclasses import asdict, dataclass
from datetime import date
from pathlib import Path

from .errors import DuplicateDose, MalformedPayload, PIIFieldPresent, UnknownPseudoId

DIMENSIONS = ("city", "phase", "manufacturer", "dose_number")


def _require_pseudo_id(value: str) -> None:
    if len(value) != 32:
        raise ValueError("pseudo_id must be 32 hex chars")
    try:
        bytes.fromhex(value)
    except ValueError:
        raise ValueError("pseudo_id must be hex") from None


@dataclass
class RegistryRecord:
    pseudo_id: str
    city: str
    phase: str
    manufacturer: str
    dose_number: int
    date: str

    def __post_init__(self) -> None:
        _require_pseudo_id(self.pseudo_id)
        if self.dose_number not in (1, 2):
            raise ValueError("dose_number must be 1 or 2")
        try:
            date.fromisoformat(self.date)
        except ValueError:
            raise ValueError("date must be ISO-8601") from None


@dataclass
class SymptomReport:
    pseudo_id: str
    days_since_dose: int
    symptoms: list[str]
    severity: int

    def __post_init__(self) -> None:
        _require_pseudo_id(self.pseudo_id)
        if self.days_since_dose < 0:
            raise ValueError("days_since_dose must be non-negative")
        self.symptoms = [str(s) for s in self.symptoms]
        if not 1 <= self.severity <= 5:
            raise ValueError("severity must be in 1..5")


@dataclass
class AggregateView:
    dimension: str
    value: str
    count: int


def _from_dict(cls, payload: dict, what: str):
    """Strict construction from a wire dict; unknown fields are rejected."""
    if not isinstance(payload, dict):
        raise MalformedPayload(f"{what} must be an object")
    allowed = set(cls.__dataclass_fields__)
    unknown = set(payload) - allowed
    if unknown:
        raise PIIFieldPresent(
            f"{what} carries fields outside the anonymized schema: {sorted(unknown)}"
        )
    missing = allowed - set(payload)
    if missing:
        raise MalformedPayload(f"{what} is missing fields: {sorted(missing)}")
    try:
        return cls(**payload)
    except (ValueError, TypeError) as exc:
        raise MalformedPayload(f"bad {what}: {exc}") from None


def record_from_dict(payload: dict) -> RegistryRecord:
    return _from_dict(RegistryRecord, payload, "registry record")


def symptom_from_dict(payload: dict) -> SymptomReport:
    return _from_dict(SymptomReport, payload, "symptom report")


class Registry:
    """Append-only store; one writer at a time, snapshot reads."""

    def __init__(self, path: str | Path | None = None) -> None:
        self._records: list[RegistryRecord] = []
        self._reports: list[SymptomReport] = []
        self._doses_seen: set[tuple[str, int]] = set()
        self._ids_seen: set[str] = set()
        self._lock = threading.Lock()
        self._path = Path(path) if path is not None else None

    def _persist(self, kind: str, payload: dict) -> None:
        if self._path is None:
            return
        line = json.dumps({"kind": kind, **payload}, sort_keys=True)
        with self._path.open("a", encoding="utf-8") as fh:
            fh.write(line + "\n")

    def submit_record(self, record: RegistryRecord) -> None:
        with self._lock:
            dose_key = (record.pseudo_id, record.dose_number)
            if dose_key in self._doses_seen:
                raise DuplicateDose(
                    f"dose {record.dose_number} already recorded for {record.pseudo_id}"
                )
            self._doses_seen.add(dose_key)
            self._ids_seen.add(record.pseudo_id)
            self._records.append(record)
            self._persist("record", asdict(record))

    def submit_symptom_report(self, report: SymptomReport) -> None:
        with self._lock:
            if report.pseudo_id not in self._ids_seen:
                raise UnknownPseudoId(f"no dose record for {report.pseudo_id}")
            self._reports.append(report)
            self._persist("symptom", asdict(report))

    def aggregate(self, dimension: str) -> list[AggregateView]:
        """Counts of dose records grouped by one dimension; empty groups omitted."""
        if dimension not in DIMENSIONS:
            raise ValueError(f"dimension must be one of {DIMENSIONS}")
        with self._lock:
            counts: dict[str, int] = {}
            for record in self._records:
                value = str(getattr(record, dimension))
                counts[value] = counts.get(value, 0) + 1
        views = [AggregateView(dimension, value, n) for value, n in counts.items()]
        views.sort(key=lambda v: (-v.count, v.value))
        return views

    def record_count(self) -> int:
        with self._lock:
            return len(self._records)

    def report_count(self) -> int:
        with self._lock:
            return len(self._reports)

    @classmethod
    def load(cls, path: str | Path) -> "Registry":
        """Replay the persisted submission log; the result is bit-identical
        to the registry that wrote it."""
        registry = cls()
        file_path = Path(path)
        if file_path.exists():
            for line in file_path.read_text(encoding="utf-8").splitlines():
                line = line.strip()
                if not line:
                    continue
                payload = json.loads(line)
                kind = payload.pop("kind")
                if kind == "record":
                    registry.submit_record(record_from_dict(payload))
                elif kind == "symptom":
                    registry.submit_symptom_report(symptom_from_dict(payload))
                else:
                    raise ValueError(f"unknown registry line kind: {kind}")
        registry._path = file_path
        return registry
