"""Shared record of acceptance verdicts, printed in the pytest terminal summary."""

RESULTS = {}


def verdict(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})"
    RESULTS[number] = line
    print(line)
    assert ok, line
