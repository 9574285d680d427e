import csv

import numpy as np
import pytest

from hhnet.ingestion import (
    CONTACT_COLUMNS,
    HOUSEHOLD_COLUMNS,
    CompositionType,
    DiaryRecord,
    HouseholdRoster,
    IngestOptions,
    age_category,
    assign_roles,
    build_observations,
    classify_household_contacts,
    ingest,
    read_survey,
)
from hhnet.network import Role, incident_dyads


def rec(age, location="home", frequency="daily", sex="F", day=1, rid="r"):
    return DiaryRecord(rid, day, age, sex, location, frequency, False)


def write_survey(tmp_path, households, contacts):
    hh_path = tmp_path / "households.csv"
    ct_path = tmp_path / "contacts.csv"
    with open(hh_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(HOUSEHOLD_COLUMNS)
        for rid, age, sex, ages in households:
            w.writerow([rid, age, sex, ";".join(map(str, ages)), "1.0", "2006-03-01"])
    with open(ct_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CONTACT_COLUMNS)
        for row in contacts:
            w.writerow(row)
    return ct_path, hh_path


def type1_survey(n=30):
    """``n`` Type 1 households; respondents rotate through the four members.

    Household i has the respondent in contact with every other member except
    when ``i % 5 == 0`` (then the oldest other member is not reported).
    """
    households, contacts = [], []
    ages = (1, 4, 31, 34)
    sexes = ("M", "F", "F", "M")
    for i in range(n):
        rid = f"h{i:02d}"
        me = i % 4
        households.append((rid, ages[me], sexes[me], ages))
        others = [j for j in range(4) if j != me]
        if i % 5 == 0:
            others = others[:-1]
        for j in others:
            contacts.append([rid, 1, ages[j], sexes[j], "home", "daily", 1])
        contacts.append([rid, 1, 50, "F", "work", "daily", 0])
    return households, contacts


@pytest.mark.parametrize("age, cat", [(0, "0-5"), (5, "0-5"), (6, "6-11"), (18, "12-18"), (19, "19-35"), (36, "36+")])
def test_age_category(age, cat):
    assert age_category(age) == cat


def test_composition_parse_and_match():
    assert CompositionType.parse("1") is CompositionType.TYPE1
    assert CompositionType.parse("type_4") is CompositionType.TYPE4
    with pytest.raises(ValueError):
        CompositionType.parse("9")
    assert CompositionType.TYPE1.matches([1, 4, 31, 34])
    assert not CompositionType.TYPE1.matches([1, 7, 31, 34])
    assert CompositionType.TYPE5.matches([14, 22, 40, 45])


def test_classify_examples():
    roster = HouseholdRoster("r", 36, "M", (4, 7, 34, 36))
    assert classify_household_contacts([rec(4)], roster).matched == {0}
    assert classify_household_contacts([rec(34, location="work")], roster).matched == frozenset()
    assert classify_household_contacts([rec(34, frequency="weekly")], roster).matched == frozenset()


def test_greedy_tolerance_trace():
    roster = HouseholdRoster("r", 2, "F", (2, 3, 34, 36))
    result = classify_household_contacts([rec(35), rec(36)], roster, tolerance=1)
    # 36 -> 36 (gap 0) first, then 35 -> 34 (gap 1)
    assert result.matched == {2, 3}
    exact = classify_household_contacts([rec(35), rec(36)], roster, tolerance=0)
    assert exact.matched == {3}


def test_respondent_never_matched():
    roster = HouseholdRoster("r", 34, "F", (1, 4, 34, 36))
    assert classify_household_contacts([rec(34)], roster).matched == frozenset()


def test_duplicate_records_collapse():
    roster = HouseholdRoster("r", 36, "M", (4, 4, 34, 36))
    result = classify_household_contacts([rec(4, sex="F"), rec(4, sex="F")], roster)
    assert len(result.matched) == 1
    assert result.warnings  # two members aged 4


def test_match_count_bounded():
    roster = HouseholdRoster("r", 34, "F", (1, 4, 34, 36))
    many = [rec(a, sex=s) for a in (1, 4, 36, 34, 1) for s in "FM"]
    assert len(classify_household_contacts(many, roster, tolerance=2).matched) <= 3


def test_assign_roles():
    roles, note = assign_roles(HouseholdRoster("r", 34, "M", (34, 1, 31, 4)))
    assert roles == {1: Role.C1, 3: Role.C2, 0: Role.A2, 2: Role.A1} and note is None
    roles, note = assign_roles(HouseholdRoster("r", 1, "F", (34, 1, 31, 4)))
    assert roles[2] == Role.A1 and roles[0] == Role.A2 and note


def test_type1_fixture(tmp_path):
    hh, ct = type1_survey()
    obs, report = ingest(*write_survey(tmp_path, hh, ct), composition=1)
    assert len(obs) == 30 and not report.excluded
    for o in obs:
        assert {j for j, _ in o.reports} == incident_dyads(o.respondent)
    # household 0: respondent C1 did not report the oldest member (A2)
    assert obs[0].respondent == Role.C1 and obs[0].report_dict() == {0: 1, 1: 1, 2: 0}
    assert obs[1].respondent == Role.C2 and obs[1].report_dict() == {0: 1, 3: 1, 4: 1}


def test_exclusions_and_counts(tmp_path):
    hh, ct = type1_survey(6)
    hh.append(("small", 30, "F", (2, 30, 33)))
    hh.append(("older", 30, "F", (8, 9, 30, 33)))
    hh.append(("ghost", 40, "F", (2, 4, 30, 33)))
    paths = write_survey(tmp_path, hh, ct)
    obs, report = ingest(*paths, composition="1")
    reasons = sorted(r.reason for r in report.excluded)
    assert reasons == ["composition", "respondent_not_in_roster", "size"]
    assert len(obs) + len(report.excluded) == len(hh)


def test_first_day_only(tmp_path):
    hh = [("a", 1, "M", (1, 4, 31, 34))]
    ct = [["a", 2, 4, "F", "home", "daily", 1], ["a", 1, 31, "F", "home", "daily", 1]]
    obs, report = ingest(*write_survey(tmp_path, hh, ct), composition=1)
    assert obs[0].report_dict() == {0: 0, 1: 1, 2: 0}
    assert [n.reason for n in report.notes] == ["later_days_dropped", "role_fallback"]


def test_parse_errors_reported(tmp_path):
    hh, ct = type1_survey(4)
    hh.append(("bad", "x", "F", (1, 4, 31, 34)))
    ct.append(["h00", 1, 4, "F", "moon", "daily", 1])
    survey = read_survey(*write_survey(tmp_path, hh, ct))
    obs, report = build_observations(survey, 1)
    assert len(obs) == 4
    assert [r.reason for r in report.excluded] == ["parse"]
    assert any(r.reason == "parse_contact" for r in report.notes)


def test_missing_column(tmp_path):
    ct, path = write_survey(tmp_path, [], [])
    path.write_text("respondent_id,member_ages\n")
    with pytest.raises(ValueError, match="missing columns"):
        read_survey(ct, path)


def test_reingest_identical(tmp_path):
    hh, ct = type1_survey(12)
    paths = write_survey(tmp_path, hh, ct)
    a = ingest(*paths, composition=1, options=IngestOptions(tolerance=1))
    b = ingest(*paths, composition=1, options=IngestOptions(tolerance=1))
    assert a[0] == b[0] and a[1].rows() == b[1].rows()
