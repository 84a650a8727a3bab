"""Per-criterion pass/fail lines collected by the acceptance tests."""
RESULTS = {}


def record(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.setdefault(n, []).append((ok, line))
    print(line)
