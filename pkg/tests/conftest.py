"""Shared builders for small hand-made matches and constant models."""

from __future__ import annotations

import pytest

from inningsmdp.match_data import DeliveryRecord, build_match
from inningsmdp.policy import TransitionModel
from inningsmdp.simulator import generate_corpus

TYPICAL_RUNS = {0: 0.5, 1: 0.3, 2: 0.08, 3: 0.01, 4: 0.08, 6: 0.03}


def legal_innings(k: int, runs, wickets=()):
    """Legal deliveries in order; ``wickets`` holds the indices that dismiss."""
    wickets = set(wickets)
    return [
        DeliveryRecord(k, i // 6, i % 6, r, False, i in wickets)
        for i, r in enumerate(runs)
    ]


def simple_match(match_id="m1", runs_1=(1,) * 60, runs_2=(1,) * 30, winner="A", wickets_1=(), wickets_2=()):
    innings = [legal_innings(1, runs_1, wickets_1)]
    if runs_2 is not None:
        innings.append(legal_innings(2, runs_2, wickets_2))
    return build_match(match_id, "A", "B", winner, innings)


def constant_models(wicket_prob=0.03, run_dist=None):
    run_dist = run_dist or TYPICAL_RUNS
    return (
        TransitionModel.constant(1, wicket_prob, run_dist),
        TransitionModel.constant(2, wicket_prob, run_dist),
    )


@pytest.fixture(scope="session")
def synthetic_corpus():
    m1, m2 = constant_models()
    return generate_corpus(m1, m2, 120, seed=3)


def pytest_terminal_summary(terminalreporter):
    """One line per acceptance criterion, in order."""
    lines = {}
    for reports in terminalreporter.stats.values():
        for rep in reports:
            props = dict(getattr(rep, "user_properties", ()))
            if "criterion" not in props:
                continue
            if hasattr(rep, "wasxfail"):
                verdict = "FAIL (known, see ledger)"
            elif rep.skipped:
                verdict = "SKIP"
            elif rep.when == "call" and rep.passed:
                verdict = "PASS"
            elif rep.failed:
                verdict = "FAIL"
            else:
                continue
            detail = props.get("detail", "")
            if rep.skipped and not hasattr(rep, "wasxfail"):
                detail = str(rep.longrepr[-1]) if isinstance(rep.longrepr, tuple) else detail
            lines[props["criterion"]] = f"criterion {props['criterion']:>2}: {verdict:<24} {detail}".rstrip()
    if lines:
        terminalreporter.section("acceptance")
        for k in sorted(lines):
            terminalreporter.write_line(lines[k])


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            item.user_properties.append(("criterion", mark.args[0]))
