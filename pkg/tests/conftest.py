import pytest

# criterion number -> list of (check name, passed, detail)
ACCEPTANCE = {}


@pytest.fixture
def record():
    def add(criterion, name, passed, detail=""):
        ACCEPTANCE.setdefault(criterion, []).append((name, bool(passed), detail))
        print(f"criterion {criterion} / {name}: {'PASS' if passed else 'FAIL'} {detail}")
    return add


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        checks = ACCEPTANCE[k]
        ok = all(p for _, p, _ in checks)
        failed = [f"{n} ({d})" for n, p, d in checks if not p]
        tail = f"; failing: {'; '.join(failed)}" if failed else f"; all {len(checks)} checked"
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}{tail}")
