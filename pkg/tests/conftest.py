import functools

from feasrepair.harness import ExperimentSpec, run_experiment

VERDICTS = []


@functools.lru_cache(maxsize=None)
def experiment(spec: ExperimentSpec):
    """Run an experiment once per session; anchors and criteria share results."""
    return run_experiment(spec)


def record(label: str, passed: bool, detail: str) -> None:
    line = f"{label}: {'PASS' if passed else 'FAIL'} ({detail})"
    VERDICTS.append(line)
    print(line, flush=True)


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance and anchor verdicts")
        for line in VERDICTS:
            terminalreporter.write_line(line)
