class ProtocolReject(Exception):
    """A protocol gate refused a message. ``reason`` is the class name."""

    @property
    def reason(self) -> str:
        return type(self).__name__


class BadSignature(ProtocolReject):
    pass


class StaleTimestamp(ProtocolReject):
    pass


class FutureTimestamp(ProtocolReject):
    pass


class UnknownCommitment(ProtocolReject):
    pass


class ReplayedReveal(ProtocolReject):
    pass


class BadCommitSignature(ProtocolReject):
    pass


class NonceMismatch(ProtocolReject):
    pass


class Timeout(ProtocolReject):
    pass


class DegenerateGeometry(ProtocolReject):
    pass
