"""How stale an after-the-fact authenticated range is, and what that costs.

A client closes on a Protocol 5 navaid at 1000 m/s. The round trip is
measured at once, but the range is only usable after the signed answer has
been requested, signed, encrypted, decrypted and verified. Everything the
client moves meanwhile is position error.
"""

from navsec.simnet import run

SLOW = {}  # default signing and public-key latencies
VERIFY_ONLY = {"sign_latency_ns": 0, "pk_encrypt_latency_ns": 0, "pk_decrypt_latency_ns": 0}


def closing(params: dict, speed: float) -> dict:
    return {
        "name": "p5_budget", "duration_ns": 20_000_000, "params": params,
        "nodes": [
            {"id": "n1", "role": "navaid", "position": [0, 0, 0], "protocols": ["p5"]},
            {"id": "c1", "role": "client", "position": [2000, 0, 0], "velocity": [-speed, 0, 0],
             "ranging": [{"protocol": "p5", "navaid": "n1", "at_ns": 100_000}]},
        ],
    }


if __name__ == "__main__":
    print(f"{'latencies':<22} {'speed':>9} {'stale':>9} {'error':>8}")
    for label, params in (("verification only", VERIFY_ONLY), ("all defaults", SLOW)):
        for speed in (10.0, 100.0, 1000.0):
            for r in run(closing(params, speed)).of_kind("auth_range"):
                print(f"{label:<22} {speed:>6.0f}m/s {r['staleness_ns'] / 1e6:>7.3f}ms {r['uncertainty_m']:>7.3f}m")
