"""Shared test helpers.

test_acceptance.py stores a short detail string per criterion in ACCEPTANCE;
the terminal-summary hook below prints one explicit pass/fail line per
criterion at the end of the run.
"""

import re

ACCEPTANCE = {}

_NAMES = {
    1: "static null tests",
    2: "Thouless pump quantization",
    3: "adiabatic current epsilon-scaling",
    4: "super-adiabatic residuals",
    5: "gauge and representation identities",
    6: "symmetry propositions",
    7: "wavepacket semiclassics",
    8: "2d separable sanity",
}


def pytest_terminal_summary(terminalreporter):
    tr = terminalreporter
    rows = {}
    for outcome, label in (("passed", "PASS"), ("failed", "FAIL"),
                           ("error", "FAIL")):
        for rep in tr.stats.get(outcome, []):
            m = re.search(r"test_acceptance\.py::test_criterion_(\d+)",
                          rep.nodeid)
            if m:
                rows[int(m.group(1))] = label
    if not rows:
        return
    tr.write_sep("=", "acceptance criteria")
    for num in sorted(rows):
        line = f"criterion {num} ({_NAMES.get(num, '?')}): {rows[num]}"
        detail = ACCEPTANCE.get(num)
        if detail:
            line += f"  [{detail}]"
        tr.write_line(line)
