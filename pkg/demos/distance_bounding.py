"""A relay can only make a pre-authenticated round trip longer.

A client ranges a navaid 3 km away over Protocol 4 while an attacker halfway
between them re-emits everything it hears after a growing delay. The
measured range never drops below the true one.
"""

from navsec.simnet import run


def scenario(delay_ns: int | None) -> dict:
    nodes = [
        {"id": "n1", "role": "navaid", "position": [0, 0, 0], "protocols": ["p4"], "processing_delay_ns": 2000},
        {"id": "c1", "role": "client", "position": [3000, 0, 0],
         "ranging": [{"protocol": "p4", "navaid": "n1", "at_ns": 10_000}]},
    ]
    if delay_ns is not None:
        nodes.append({"id": "m1", "role": "attacker", "position": [1500, 200, 0],
                      "capabilities": [{"type": "delay_meacon", "delay_ns": delay_ns}]})
    return {"name": "p4_demo", "duration_ns": 2_000_000, "nodes": nodes}


if __name__ == "__main__":
    print(f"{'relay delay':>12}  {'measured':>10}  {'true':>8}  lower bound holds")
    for delay in (None, 0, 100, 1_000, 10_000):
        for r in run(scenario(delay)).of_kind("range"):
            label = "none" if delay is None else f"{delay} ns"
            print(f"{label:>12}  {r['range_m']:>9.1f}m  {r['true_range_m']:>7.1f}m  {r['bound_ok']}")
