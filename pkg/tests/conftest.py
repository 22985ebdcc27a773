import pytest

from driftlab.records import StreamRecord, Stream

# one "criterion N PASS|FAIL ..." line per acceptance check, echoed in the summary
ACCEPTANCE_LINES = []


def report_criterion(number, passed, detail):
    line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)


def make_record(i, ts, tokens=("a",), label="benign", **kw):
    return StreamRecord(id=f"r{i:04d}", timestamp=ts, tokens=tuple(tokens), true_label=label, **kw)


@pytest.fixture
def tiny_stream():
    rows = [
        make_record(0, 1, ("good", "lib"), "benign"),
        make_record(1, 2, ("bad", "lib"), "malicious"),
        make_record(2, 3, ("good", "ui"), "benign"),
        make_record(3, 4, ("bad", "net"), "malicious"),
        make_record(4, 5, ("good", "net"), "benign"),
    ]
    return Stream(tuple(rows))
