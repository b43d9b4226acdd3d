from __future__ import annotations

import pytest

from navsec import certs, protocols as P
from navsec.core import AntennaSchedule, ClockModel, Direction, NodeId, Position, PositionFunction
from navsec.crypto import make_backend


class World:
    """A root CA plus certified stations sharing one backend."""

    def __init__(self, backend="test", seed=7, window=(0, 10**12)):
        self.be = make_backend(backend, seed)
        self.root = self.be.generate_keypair()
        self.policy = certs.TrustPolicy.create([self.root.public])
        self.window = window
        self.chains = {}
        self.stations = {}

    def station(self, name, position=(0, 0, 0), velocity=(0, 0, 0), clock=None, antenna=None,
                processing_delay=0, certify=True) -> P.Station:
        keys = self.be.generate_keypair()
        traj = PositionFunction(Position.of(position), Position.of(velocity))
        if isinstance(antenna, Direction):
            antenna = AntennaSchedule(antenna)
        st = P.Station(NodeId.from_name(name), keys, clock or ClockModel(), traj, self.be, antenna,
                       processing_delay)
        if certify:
            assertions = [certs.key_delegation(keys.public), certs.position_assertion(traj),
                          certs.processing_delay_assertion(processing_delay)]
            if antenna is not None:
                assertions.append(certs.antenna_assertion(antenna))
            self.chains[st.id] = [certs.cert_issue(self.root.private, st.id, assertions, self.window, self.be)]
        self.stations[name] = st
        return st

    def directory(self) -> certs.KeyDirectory:
        return certs.KeyDirectory(self.policy, {k: list(v) for k, v in self.chains.items()}, self.be)


@pytest.fixture
def world():
    return World()


@pytest.fixture(params=["test", "real"])
def any_world(request):
    return World(request.param)
