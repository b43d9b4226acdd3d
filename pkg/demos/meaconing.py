"""What a pseudorange client can and cannot tell about a meaconer.

Runs three bundled scenarios and prints the client's fixes:

* one of five navaids relayed late: the solver names it and the delay
* every navaid relayed by the same amount: the fix looks clean, and the
  delay hides in the clock bias
* the same attack against a client that trusts its clock to 100 ns
"""

from importlib.resources import files

from navsec.scenario import Scenario
from navsec.simnet import run


def show(name: str) -> None:
    sc = Scenario.load(files("navsec") / "scenarios" / f"{name}.json")
    trace = run(sc)
    print(f"\n== {name}")
    if sc.description:
        print(f"   {sc.description}")
    for f in trace.of_kind("fix"):
        line = f"   t={f['t'] / 1e6:6.2f} ms  {f['verdict']:<19}"
        if f.get("accused"):
            line += f" accused={f['accused']} delay={f['delay_ns']:.0f} ns"
        if f.get("clock_bias_ns") is not None:
            line += f" bias={f['clock_bias_ns']:.0f} ns"
        if f.get("error_m") is not None:
            line += f" error={f['error_m']:.2f} m"
        print(line)


if __name__ == "__main__":
    for name in ("single_meacon_5nav", "allstation_meacon", "allstation_meacon_known_clock"):
        show(name)
