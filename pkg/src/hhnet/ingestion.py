"""Turn contact diaries and household rosters into partial network observations.

Input is two delimited files joined on ``respondent_id``:

contacts
    respondent_id, day_index, contact_age, contact_sex, location, frequency, physical
households
    respondent_id, respondent_age, respondent_sex, member_ages, weight, survey_date

``member_ages`` is semicolon separated and includes the respondent. A diary
row counts as a contact with a household member when it happened at home, is
reported as daily, and its age matches an unclaimed roster age.
"""

from __future__ import annotations

import csv
import enum
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .network import PartialObservation, Role, dyad_between

log = logging.getLogger(__name__)

CONTACT_COLUMNS = ("respondent_id", "day_index", "contact_age", "contact_sex", "location", "frequency", "physical")
HOUSEHOLD_COLUMNS = ("respondent_id", "respondent_age", "respondent_sex", "member_ages", "weight", "survey_date")
REPORT_COLUMNS = ("respondent_id", "reason", "detail")

LOCATIONS = ("home", "work", "school", "leisure", "transport", "other")
FREQUENCIES = ("daily", "weekly", "monthly", "rarely", "first_time")

AGE_CATEGORIES = ("0-5", "6-11", "12-18", "19-35", "36+")
_AGE_UPPER = (5, 11, 18, 35)


def age_category(age: int) -> str:
    if age < 0:
        raise ValueError(f"negative age: {age}")
    for label, upper in zip(AGE_CATEGORIES, _AGE_UPPER):
        if age <= upper:
            return label
    return AGE_CATEGORIES[-1]


class CompositionType(enum.Enum):
    """Household age compositions: (child 1, child 2, parent 1, parent 2) categories."""

    TYPE1 = ("0-5", "0-5", "19+", "19+")
    TYPE2 = ("0-5", "6-11", "19+", "19+")
    TYPE3 = ("6-11", "6-11", "19+", "19+")
    TYPE4 = ("12-18", "12-18", "36+", "36+")
    TYPE5 = ("12-18", "19-35", "36+", "36+")
    TYPE6 = ("19-35", "19-35", "36+", "36+")

    @classmethod
    def parse(cls, text) -> CompositionType:
        if isinstance(text, cls):
            return text
        key = str(text).strip().upper().replace(" ", "").replace("_", "")
        if key.isdigit():
            key = "TYPE" + key
        try:
            return cls[key]
        except KeyError:
            raise ValueError(f"unknown composition {text!r}; use 1..6 or TYPE1..TYPE6") from None

    def matches(self, sorted_ages: Sequence[int]) -> bool:
        """Whether ages (ascending) fit the composition slot by slot."""
        return len(sorted_ages) == 4 and all(_in_category(a, c) for a, c in zip(sorted_ages, self.value))


def _in_category(age: int, cat: str) -> bool:
    if cat == "19+":
        return age >= 19
    return age_category(age) == cat


@dataclass(frozen=True)
class DiaryRecord:
    respondent_id: str
    day_index: int
    contact_age: int | None
    contact_sex: str
    location: str
    frequency: str
    physical: bool

    @property
    def household_candidate(self) -> bool:
        return self.location == "home" and self.frequency == "daily" and self.contact_age is not None


@dataclass(frozen=True)
class HouseholdRoster:
    respondent_id: str
    respondent_age: int
    respondent_sex: str
    member_ages: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.member_ages)

    def respondent_slot(self) -> int | None:
        for i, a in enumerate(self.member_ages):
            if a == self.respondent_age:
                return i
        return None


@dataclass
class ReportRow:
    respondent_id: str
    reason: str
    detail: str = ""


@dataclass
class Survey:
    households: list[HouseholdRoster]
    contacts: dict[str, list[DiaryRecord]]
    errors: list[ReportRow] = field(default_factory=list)


@dataclass
class IngestReport:
    """Dropped households (one row each) plus notes that did not drop anything."""

    excluded: list[ReportRow] = field(default_factory=list)
    notes: list[ReportRow] = field(default_factory=list)

    def rows(self) -> list[ReportRow]:
        return self.excluded + self.notes


@dataclass
class MatchResult:
    matched: frozenset[int]
    warnings: list[str] = field(default_factory=list)


def _parse_age(text: str) -> int | None:
    text = text.strip()
    if text in ("", "NA", "na", "."):
        return None
    age = int(float(text))
    if age < 0:
        raise ValueError(f"negative age {age}")
    return age


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "y", "t"):
        return True
    if t in ("0", "false", "no", "n", "f", ""):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _read_rows(path, columns):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(columns) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        yield from enumerate(reader, start=2)


def parse_contact_row(row: dict) -> DiaryRecord:
    location = row["location"].strip().lower()
    frequency = row["frequency"].strip().lower()
    if location not in LOCATIONS:
        raise ValueError(f"unknown location {row['location']!r}")
    if frequency not in FREQUENCIES:
        raise ValueError(f"unknown frequency {row['frequency']!r}")
    return DiaryRecord(
        respondent_id=row["respondent_id"].strip(),
        day_index=int(row["day_index"]),
        contact_age=_parse_age(row["contact_age"]),
        contact_sex=row["contact_sex"].strip().upper(),
        location=location,
        frequency=frequency,
        physical=_parse_bool(row["physical"]),
    )


def parse_household_row(row: dict) -> HouseholdRoster:
    ages = tuple(_parse_age(a) for a in row["member_ages"].split(";") if a.strip())
    if any(a is None for a in ages):
        raise ValueError("missing age in member_ages")
    resp_age = _parse_age(row["respondent_age"])
    if resp_age is None:
        raise ValueError("missing respondent_age")
    return HouseholdRoster(row["respondent_id"].strip(), resp_age, row["respondent_sex"].strip().upper(), ages)


def read_survey(contacts_path, households_path) -> Survey:
    """Parse both files; malformed rows are reported, not fatal."""
    errors = []
    households = []
    for line, row in _read_rows(households_path, HOUSEHOLD_COLUMNS):
        try:
            households.append(parse_household_row(row))
        except (ValueError, TypeError, AttributeError) as exc:
            errors.append(ReportRow((row.get("respondent_id") or "").strip(), "parse", f"households line {line}: {exc}"))
    contacts: dict[str, list[DiaryRecord]] = {}
    for line, row in _read_rows(contacts_path, CONTACT_COLUMNS):
        try:
            rec = parse_contact_row(row)
        except (ValueError, TypeError, AttributeError) as exc:
            errors.append(ReportRow((row.get("respondent_id") or "").strip(), "parse_contact", f"contacts line {line}: {exc}"))
            continue
        contacts.setdefault(rec.respondent_id, []).append(rec)
    return Survey(households, contacts, errors)


def classify_household_contacts(
    diary: Iterable[DiaryRecord], roster: HouseholdRoster, tolerance: int = 0
) -> MatchResult:
    """Match diary records to roster members.

    Candidate records (home, daily, known age) are deduplicated on (age, sex),
    then assigned greedily over all (record, member) pairs within
    ``tolerance`` years: smallest age gap first, ties to the younger member,
    then the earlier record. Each member is claimed at most once and the
    respondent is never a candidate.
    """
    self_slot = roster.respondent_slot()
    seen = set()
    records = []
    for rec in diary:
        if not rec.household_candidate:
            continue
        key = (rec.contact_age, rec.contact_sex)
        if key in seen:
            continue
        seen.add(key)
        records.append(rec)
    members = [(i, a) for i, a in enumerate(roster.member_ages) if i != self_slot]
    pairs = sorted(
        (abs(rec.contact_age - age), age, slot, r)
        for r, rec in enumerate(records)
        for slot, age in members
        if abs(rec.contact_age - age) <= tolerance
    )
    warnings = []
    for r, rec in enumerate(records):
        gaps = sorted(abs(rec.contact_age - age) for _, age in members)
        if len(gaps) > 1 and gaps[0] <= tolerance and gaps[0] == gaps[1]:
            warnings.append(f"contact aged {rec.contact_age} is equally close to several members; tie rule applied")
    matched: set[int] = set()
    used: set[int] = set()
    for _, _, slot, r in pairs:
        if slot in matched or r in used:
            continue
        matched.add(slot)
        used.add(r)
    return MatchResult(frozenset(matched), warnings)


def assign_roles(roster: HouseholdRoster) -> tuple[dict[int, Role], str | None]:
    """Map roster slots to roles for a four-person household.

    The two youngest are C1 (younger) and C2 (older); the two oldest are the
    adults. A respondent adult who reports sex F or M fixes A1 (female) and A2
    (male); otherwise adults fall back to age order. Ties keep listed order.
    Returns the mapping and a note when the fallback was used.
    """
    order = sorted(range(roster.size), key=lambda i: (roster.member_ages[i], i))
    roles = {order[0]: Role.C1, order[1]: Role.C2}
    adults = order[2:]
    note = None
    slot = roster.respondent_slot()
    if slot in adults and roster.respondent_sex in ("F", "M"):
        other = adults[1] if slot == adults[0] else adults[0]
        mine = Role.A1 if roster.respondent_sex == "F" else Role.A2
        roles[slot] = mine
        roles[other] = Role.A2 if mine == Role.A1 else Role.A1
    else:
        roles[adults[0]] = Role.A1
        roles[adults[1]] = Role.A2
        note = "adult sexes unknown; adults ordered by age (younger = A1)"
    return roles, note


@dataclass(frozen=True)
class IngestOptions:
    tolerance: int = 0


def build_observations(
    survey: Survey, composition, options: IngestOptions | None = None
) -> tuple[list[PartialObservation], IngestReport]:
    """Observations for one composition type, plus a report of what was dropped.

    Only each respondent's first diary day is used. Every household in the
    survey either yields one observation or one exclusion row.
    """
    composition = CompositionType.parse(composition)
    options = options or IngestOptions()
    report = IngestReport()
    for err in survey.errors:
        (report.excluded if err.reason == "parse" else report.notes).append(err)
    observations = []
    for hh in survey.households:
        rid = hh.respondent_id
        if hh.size != 4:
            report.excluded.append(ReportRow(rid, "size", f"household size {hh.size}"))
            continue
        if not composition.matches(sorted(hh.member_ages)):
            report.excluded.append(ReportRow(rid, "composition", f"ages {sorted(hh.member_ages)} not {composition.name}"))
            continue
        slot = hh.respondent_slot()
        if slot is None:
            report.excluded.append(ReportRow(rid, "respondent_not_in_roster", f"age {hh.respondent_age} not in {list(hh.member_ages)}"))
            continue
        diary = survey.contacts.get(rid, [])
        if diary:
            first = min(r.day_index for r in diary)
            if any(r.day_index != first for r in diary):
                report.notes.append(ReportRow(rid, "later_days_dropped", f"kept day {first}"))
            diary = [r for r in diary if r.day_index == first]
        match = classify_household_contacts(diary, hh, options.tolerance)
        for w in match.warnings:
            report.notes.append(ReportRow(rid, "ambiguous_match", w))
        roles, note = assign_roles(hh)
        if note:
            report.notes.append(ReportRow(rid, "role_fallback", note))
        me = roles[slot]
        reports = {dyad_between(me, roles[i]): int(i in match.matched) for i in roles if i != slot}
        observations.append(PartialObservation(me, reports))
    return observations, report


def write_report(report: IngestReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for row in report.rows():
            w.writerow([row.respondent_id, row.reason, row.detail])


def ingest(contacts_path, households_path, composition, options: IngestOptions | None = None):
    survey = read_survey(Path(contacts_path), Path(households_path))
    return build_observations(survey, composition, options)
