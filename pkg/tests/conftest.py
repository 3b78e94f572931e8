from criteria_log import RESULTS, TITLES


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number, title in TITLES.items():
        entries = RESULTS.get(number)
        if not entries:
            tr.write_line(f"criterion {number:>2} NOT RUN  {title}")
            continue
        ok = all(passed for passed, _ in entries)
        failed = [detail for passed, detail in entries if not passed]
        detail = "; ".join(failed) if failed else entries[-1][1]
        tr.write_line(f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
