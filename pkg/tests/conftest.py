import pytest

# (criterion id, passed, detail) lines collected by the acceptance suite
ACCEPTANCE = []


@pytest.fixture(scope="session")
def record():
    def add(cid, passed, detail):
        ACCEPTANCE.append((cid, bool(passed), detail))
        print(f"[{'PASS' if passed else 'FAIL'}] {cid}: {detail}", flush=True)
        return bool(passed)
    return add


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid, passed, detail in sorted(ACCEPTANCE, key=lambda r: (int(r[0].split(".")[0][1:]), r[0])):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {cid}: {detail}")
