
# criterion number -> list of CriterionResult / Check objects produced by test_acceptance
ACCEPTANCE: dict[int, list] = {}


def record(number: int, result) -> None:
    ACCEPTANCE.setdefault(number, []).append(result)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE:
        return
    from boolcov.verification import CriterionResult

    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in range(1, 14):
        items = ACCEPTANCE.get(n)
        if not items:
            tr.write_line(f"criterion {n:2d}: NOT RUN")
            continue
        checks, name, secs = [], items[0].name, 0.0
        for r in items:
            checks.extend(r.checks)
            secs += r.seconds
        merged = CriterionResult(n, name, checks, secs)
        bad = [f"{c.label} (measured {c.measured!r}, expected {c.expected})" for c in checks if not c.ok]
        status = "PASS" if merged.passed else "FAIL"
        tail = "; ".join(bad) if bad else f"{len(checks)} checks"
        tr.write_line(f"criterion {n:2d}: {status} {name} [{secs:.1f} s] {tail}")


