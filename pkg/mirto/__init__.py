from mirto.client import ClientSession, open_session
from mirto.contracts import ContractViolation, SpeedAccumulator, guard
from mirto.protocol import decode, encode
