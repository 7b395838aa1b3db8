"""Shared test configuration: acceptance criterion summary lines."""

CRITERIA = {
    1: "key assembly: trace rule order, one residual solid, chamber-center "
       "heights (exact rationals, zero tolerance; wall time < 1 s)",
    2: "inverted case order: 1/2 constant clash, FAILURE, backtracking "
       "recovers an identical final result (exact equality)",
    3: "worked bitting values: opens, induced arrays, implementation check "
       "(exact integer/set equality)",
    4: "masterkeying end-to-end: engine success with 3 key + 2 lock solids, "
       "decoded bindings check out, solution set equals the native "
       "enumeration (set equality; wall time < 10 s)",
    5: "punch membership equals the ring closed form on a 21x21 rational "
       "grid (exact, zero tolerance); invalid punches rejected",
    6: "interpolant boundary conditions on 100 random rational vectors, "
       "midpoint-policy target vector closed form, 32-sample validation, "
       "snap lags linear at every interior sample (all exact)",
    7: "200 randomized mark/apply/rollback cycles restore engine and solid "
       "state exactly; trace replay reproduces terminal hashes "
       "(deep equality / hash equality)",
    8: "enumeration: 4 distinct keys from a 2-element unbound list; fully "
       "unbound input yields the 0-bit key first, then 1-bit keys in "
       "order (exact)",
    9: "structural simplification agrees with a reference unifier on 500 "
       "random term pairs, including variable partitions (exact)",
}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    outcomes = {}
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            if getattr(rep, "when", "call") != "call":
                continue
            if "test_acceptance.py" not in rep.nodeid:
                continue
            marker = "criterion_"
            if marker not in rep.nodeid:
                continue
            num = int(rep.nodeid.split(marker)[1].split("_")[0])
            outcomes[num] = rep.outcome
    if not outcomes:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for num in sorted(CRITERIA):
        outcome = outcomes.get(num)
        if outcome is None:
            word = "NOT RUN"
        else:
            word = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(
            "criterion %d: %s — %s" % (num, word, CRITERIA[num]))
