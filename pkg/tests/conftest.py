import re

CRITERIA = {
    1: "reduction soundness sweep",
    2: "schuler width and leaf bound",
    3: "bounded tuple branching invariants",
    4: "branching root exactness",
    5: "solver equivalence",
    6: "treewidth exactness",
    7: "merge correctness",
    8: "degree gadget",
    9: "clique and coloring encodings",
    10: "format round-trips and CLI exit codes",
}


def pytest_terminal_summary(terminalreporter):
    outcomes = {}
    for key in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(key, []):
            match = re.search(r"test_acceptance\.py::test_criterion_(\d+)", rep.nodeid)
            if match is None:
                continue
            num = int(match.group(1))
            if outcomes.get(num) != "FAIL":
                outcomes[num] = "PASS" if key == "passed" else "FAIL"
    if not outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for num, label in CRITERIA.items():
        status = outcomes.get(num, "NOT RUN")
        terminalreporter.write_line(f"criterion {num:2d} {label}: {status}")
