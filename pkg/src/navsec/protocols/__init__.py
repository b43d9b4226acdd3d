"""Protocol state machines for navaids and clients."""

from .active import (NONCE_BYTES, AuthenticatedRange, NonceCache, PendingAuth, RangingSession, SessionState,
                     expire_session, p4_complete, p4_interrogate, p4_key_accept, p4_key_confirm,
                     p4_key_offer, p4_respond, p5_auth_message, p5_authenticate, p5_complete,
                     p5_accept_auth, p5_exchange, p5_interrogate, p5_open_auth, p5_respond, seal,
                     unseal)
from .combine import (ConstraintPair, DaisyChainResult, combine_daisy_chain, combine_p1_p2,
                      combine_timing_angle, constraints_from_range, make_range_report,
                      open_range_report, sign_range_report)
from .errors import (BadCommitSignature, BadSignature, DegenerateGeometry, FutureTimestamp,
                     NonceMismatch, ProtocolReject, ReplayedReveal, StaleTimestamp, Timeout,
                     UnknownCommitment)
from .passive import (BearingFix, BeaconObservation, Commitment, CommitmentStore, TimingSample,
                      commitment_digest, observe_beacon, p1_accept, p1_bearing_fix, p1_emit,
                      p2_collect, p3_commit, p3_commit_accept, p3_reveal, p3_reveal_accept,
                      timing_samples_to_set)
from .station import Station
