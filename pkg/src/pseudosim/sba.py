"""Simulated 5G service-based core for vehicular credential management.

Models the control-plane actors a connected vehicle talks to before it may
broadcast: identity concealment toward the home network, enrolment with an
Enrolment Authority, OAuth2-style access tokens minted by the NF Repository
Function, token-verified service requests between network functions, and batch
provisioning of pseudonymous authorization tickets by an Authorization
Authority.

Everything is deterministic: key material and opaque identifiers derive from
the run seed, and no wall-clock time is consulted. Simulation time is a float
in seconds, supplied by the caller.
"""

from __future__ import annotations

import base64
import hashlib
import hmac as hmac_mod
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.asymmetric.x25519 import (
    X25519PrivateKey,
    X25519PublicKey,
)
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

from .seeds import derive_bytes

SUPI_LEN = 16
X25519_PUBLIC_LEN = 32

SCHEME_MAC = "mac-shared-secret"
SCHEME_ASYMMETRIC = "asymmetric"

SERVICE_V2X_MESSAGING = "v2x-msg"
SERVICE_AT_PROVISION = "at-provision"


class AppScope(str, Enum):
    """Application an authorization ticket (and its pseudonym) is bound to."""

    CAM = "CAM"
    DENM = "DENM"


class NfType(str, Enum):
    NRF = "NRF"
    AMF = "AMF"
    V2X_AF = "V2X_AF"
    EA = "EA"
    AA = "AA"


class NfStatus(str, Enum):
    AVAILABLE = "available"
    SUSPENDED = "suspended"
    UNDISCOVERABLE = "undiscoverable"


# --- errors -----------------------------------------------------------------


class SbaError(Exception):
    """Base class; every instance carries a stable machine-readable reason."""

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        self.detail = detail
        super().__init__(f"{reason}: {detail}" if detail else reason)


class ConcealmentError(SbaError):
    pass


class EnrollmentError(SbaError):
    pass


class RegistrationError(SbaError):
    pass


class AuthorizationError(SbaError):
    """Token grant refused by the repository function."""


class VerificationError(SbaError):
    """Producer-side token check failed.

    Reasons: ``malformed``, ``bad_signature``, ``expired``,
    ``audience_mismatch``, ``scope_mismatch``.
    """


class ProvisioningError(SbaError):
    pass


# --- subscriber identity ----------------------------------------------------


@dataclass(frozen=True)
class Supi:
    """Permanent subscription identifier. Never sent over the air in clear."""

    value: bytes

    def __post_init__(self):
        if len(self.value) != SUPI_LEN:
            raise ValueError(f"SUPI must be {SUPI_LEN} bytes")

    def digest(self) -> str:
        return hashlib.sha256(self.value).hexdigest()


@dataclass(frozen=True)
class Suci:
    """Concealed SUPI: ephemeral public key followed by the masked identifier."""

    ciphertext: bytes
    key_id: str


@dataclass(frozen=True)
class HomeKey:
    """Public handle to one home-network concealment key."""

    key_id: str
    public_bytes: bytes


class HomeNetworkKeystore:
    """Holds the home network's concealment key pairs.

    Concealment is ECIES-shaped: an ephemeral X25519 key (derived from the
    caller's nonce) is exchanged against the home public key and the shared
    secret keys an XOR stream over the SUPI. The ephemeral public key rides in
    front of the ciphertext so the home network can deconceal.
    """

    def __init__(self, seed: int):
        self._keys: dict[str, X25519PrivateKey] = {}
        self._seed = seed

    def create_key(self, key_id: str) -> HomeKey:
        if key_id in self._keys:
            raise ConcealmentError("duplicate_key_id", key_id)
        priv = X25519PrivateKey.from_private_bytes(
            derive_bytes(self._seed, f"home-key:{key_id}", 32)
        )
        self._keys[key_id] = priv
        return self.public_key(key_id)

    def public_key(self, key_id: str) -> HomeKey:
        if key_id not in self._keys:
            raise ConcealmentError("unknown_key_id", key_id)
        raw = self._keys[key_id].public_key().public_bytes(
            Encoding.Raw, PublicFormat.Raw
        )
        return HomeKey(key_id=key_id, public_bytes=raw)

    def conceal_supi(self, supi: Supi, home_key: HomeKey, nonce: bytes) -> Suci:
        """Conceal ``supi`` under ``home_key`` using a caller-chosen nonce.

        Reusing a nonce reuses the ephemeral key, which the enrolment replay
        ledger will reject downstream.
        """
        if home_key.key_id not in self._keys:
            raise ConcealmentError("unknown_key_id", home_key.key_id)
        if not nonce:
            raise ConcealmentError("empty_nonce")
        eph_priv = X25519PrivateKey.from_private_bytes(
            hashlib.sha256(b"ephemeral:" + nonce).digest()
        )
        eph_pub = eph_priv.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)
        shared = eph_priv.exchange(
            X25519PublicKey.from_public_bytes(home_key.public_bytes)
        )
        stream = hashlib.sha256(shared + eph_pub).digest()[:SUPI_LEN]
        masked = bytes(a ^ b for a, b in zip(supi.value, stream))
        return Suci(ciphertext=eph_pub + masked, key_id=home_key.key_id)

    def deconceal_supi(self, suci: Suci) -> Supi:
        if suci.key_id not in self._keys:
            raise ConcealmentError("unknown_key_id", suci.key_id)
        if len(suci.ciphertext) != X25519_PUBLIC_LEN + SUPI_LEN:
            raise ConcealmentError("malformed_ciphertext")
        eph_pub = suci.ciphertext[:X25519_PUBLIC_LEN]
        masked = suci.ciphertext[X25519_PUBLIC_LEN:]
        shared = self._keys[suci.key_id].exchange(
            X25519PublicKey.from_public_bytes(eph_pub)
        )
        stream = hashlib.sha256(shared + eph_pub).digest()[:SUPI_LEN]
        return Supi(bytes(a ^ b for a, b in zip(masked, stream)))


# --- token signing ----------------------------------------------------------


class MacTokenSigner:
    """HMAC-SHA256 over the signing input; secret shared issuer/producers."""

    scheme = SCHEME_MAC

    def __init__(self, secret: bytes):
        self._secret = secret

    def sign(self, data: bytes) -> bytes:
        return hmac_mod.new(self._secret, data, hashlib.sha256).digest()

    def verify(self, data: bytes, signature: bytes) -> bool:
        return hmac_mod.compare_digest(self.sign(data), signature)


class AsymmetricTokenSigner:
    """Ed25519; producers only need the public half."""

    scheme = SCHEME_ASYMMETRIC

    def __init__(self, private_bytes: bytes):
        self._priv = Ed25519PrivateKey.from_private_bytes(private_bytes)
        self._pub = self._priv.public_key()

    def sign(self, data: bytes) -> bytes:
        return self._priv.sign(data)

    def verify(self, data: bytes, signature: bytes) -> bool:
        try:
            self._pub.verify(signature, data)
            return True
        except InvalidSignature:
            return False


TokenSigner = Union[MacTokenSigner, AsymmetricTokenSigner]


# --- access tokens ----------------------------------------------------------


@dataclass(frozen=True)
class AdditionalScope:
    """Finer-grained grant: one resource and the operations allowed on it."""

    resource: str
    allowed_operations: tuple[str, ...]

    def to_obj(self) -> dict:
        return {
            "resource": self.resource,
            "allowed_operations": list(self.allowed_operations),
        }

    @staticmethod
    def from_obj(obj: dict) -> "AdditionalScope":
        return AdditionalScope(
            resource=obj["resource"],
            allowed_operations=tuple(obj["allowed_operations"]),
        )


@dataclass(frozen=True)
class TokenClaims:
    """Claim set carried by an access token.

    issuer      NRF instance that minted the token
    subject     consumer NF instance the token was granted to
    audience    NF type of the intended producer
    scope       service names the consumer may invoke
    expiration  absolute simulation time; token is dead at and after this
    additional_scope  optional resource-level grants
    """

    issuer: str
    subject: str
    audience: str
    scope: tuple[str, ...]
    expiration: float
    additional_scope: tuple[AdditionalScope, ...] = ()

    def to_json(self) -> str:
        obj = {
            "issuer": self.issuer,
            "subject": self.subject,
            "audience": self.audience,
            "scope": list(self.scope),
            "expiration": self.expiration,
        }
        if self.additional_scope:
            obj["additional_scope"] = [a.to_obj() for a in self.additional_scope]
        return json.dumps(obj, sort_keys=True, separators=(",", ":"))

    @staticmethod
    def from_json(text: str) -> "TokenClaims":
        obj = json.loads(text)
        extra = tuple(
            AdditionalScope.from_obj(a) for a in obj.get("additional_scope", [])
        )
        return TokenClaims(
            issuer=obj["issuer"],
            subject=obj["subject"],
            audience=obj["audience"],
            scope=tuple(obj["scope"]),
            expiration=float(obj["expiration"]),
            additional_scope=extra,
        )


def _b64e(raw: bytes) -> str:
    return base64.urlsafe_b64encode(raw).rstrip(b"=").decode("ascii")


def _b64d(text: str) -> bytes:
    pad = "=" * (-len(text) % 4)
    return base64.urlsafe_b64decode(text + pad)


@dataclass(frozen=True)
class AccessToken:
    """Issued token plus the exact wire bytes the signature covers.

    ``signing_input`` is the ASCII of ``b64(header).b64(claims)``; keeping it
    alongside the parsed claims means verification always checks the bytes
    that actually travelled, not a re-serialization.
    """

    claims: TokenClaims
    signature: bytes
    sig_scheme: str
    signing_input: bytes

    def serialize(self) -> str:
        return self.signing_input.decode("ascii") + "." + _b64e(self.signature)


def issue_token(claims: TokenClaims, signer: TokenSigner) -> AccessToken:
    header = json.dumps({"alg": signer.scheme}, sort_keys=True, separators=(",", ":"))
    signing_input = (_b64e(header.encode()) + "." + _b64e(claims.to_json().encode())).encode(
        "ascii"
    )
    return AccessToken(
        claims=claims,
        signature=signer.sign(signing_input),
        sig_scheme=signer.scheme,
        signing_input=signing_input,
    )


def parse_token(wire: str) -> AccessToken:
    """Parse the three-segment wire form without trusting its contents.

    Only splits and base64-decodes; claim bytes are not interpreted until the
    signature over them has been checked. Raises ``VerificationError
    ('malformed')`` for anything that is not three base64url segments.
    """
    parts = wire.split(".")
    if len(parts) != 3:
        raise VerificationError("malformed", "expected three segments")
    header_b64, claims_b64, sig_b64 = parts
    try:
        header = json.loads(_b64d(header_b64).decode("utf-8"))
        signature = _b64d(sig_b64)
    except Exception as exc:
        raise VerificationError("malformed", str(exc)) from exc
    # base64 leaves slack bits in the last char; without a canonical-form check
    # two different wire strings could decode to the same signature bytes
    if _b64e(signature) != sig_b64:
        raise VerificationError("malformed", "non-canonical signature encoding")
    scheme = header.get("alg") if isinstance(header, dict) else None
    if scheme not in (SCHEME_MAC, SCHEME_ASYMMETRIC):
        raise VerificationError("malformed", f"unknown alg {scheme!r}")
    signing_input = (header_b64 + "." + claims_b64).encode("ascii")
    # Claims stay unparsed until the signature passes; stash a placeholder.
    return AccessToken(
        claims=_UNPARSED,
        signature=signature,
        sig_scheme=scheme,
        signing_input=signing_input,
    )


_UNPARSED = TokenClaims(
    issuer="", subject="", audience="", scope=(), expiration=float("-inf")
)


@dataclass(frozen=True)
class NfProfile:
    """Registry entry for one network function instance."""

    nf_instance_id: str
    nf_type: NfType
    services: tuple[str, ...]
    status: NfStatus = NfStatus.AVAILABLE
    additional_scope: tuple[AdditionalScope, ...] = ()


def verify_access_token(
    token: Union[AccessToken, str],
    producer: NfProfile,
    service: str,
    now: float,
    verifiers: dict[str, TokenSigner],
) -> TokenClaims:
    """Producer-side verification. Checks run strictly in this order:

    1. signature over the received header/claims bytes,
    2. expiration (``now`` at or past ``expiration`` is dead),
    3. audience against the producer's NF type,
    4. requested service against the token scope.

    Returns the verified claims, or raises ``VerificationError`` whose reason
    names the first check that failed.
    """
    if isinstance(token, str):
        token = parse_token(token)
    verifier = verifiers.get(token.sig_scheme)
    if verifier is None:
        raise VerificationError("bad_signature", "no key for scheme")
    if not verifier.verify(token.signing_input, token.signature):
        raise VerificationError("bad_signature")
    if token.claims is _UNPARSED:
        try:
            claims_b64 = token.signing_input.decode("ascii").split(".")[1]
            claims = TokenClaims.from_json(_b64d(claims_b64).decode("utf-8"))
        except Exception as exc:  # signed-yet-unparseable means issuer bug
            raise VerificationError("malformed", str(exc)) from exc
    else:
        claims = token.claims
    if now >= claims.expiration:
        raise VerificationError("expired")
    if claims.audience != producer.nf_type.value:
        raise VerificationError("audience_mismatch")
    if service not in claims.scope:
        raise VerificationError("scope_mismatch")
    return claims


@dataclass(frozen=True)
class ServiceAccept:
    claims: TokenClaims


@dataclass(frozen=True)
class ServiceReject:
    cause: str
    reregister: bool


# Whether a rejected consumer should fetch a fresh token and come back.
REJECT_POLICY = {
    "expired": True,
    "bad_signature": True,
    "malformed": True,
    "audience_mismatch": False,
    "scope_mismatch": False,
}


def authorize_service_request(
    token: Union[AccessToken, str],
    service: str,
    producer: NfProfile,
    now: float,
    verifiers: dict[str, TokenSigner],
) -> Union[ServiceAccept, ServiceReject]:
    """Gate one service invocation on token verification."""
    try:
        claims = verify_access_token(token, producer, service, now, verifiers)
    except VerificationError as exc:
        return ServiceReject(cause=exc.reason, reregister=REJECT_POLICY[exc.reason])
    return ServiceAccept(claims=claims)


# --- NF repository ----------------------------------------------------------


@dataclass(frozen=True)
class AccessPolicy:
    """One grant row: a consumer type may call services on a producer type."""

    consumer_type: NfType
    target_type: NfType
    services: tuple[str, ...]
    additional_scope: tuple[AdditionalScope, ...] = ()


class NetworkRepository:
    """NF registry plus OAuth2-style authorization server.

    Registration is taken to happen over a mutually authenticated transport;
    instances registered through :meth:`register_nf` are therefore eligible
    token subjects. Discovery never returns suspended or undiscoverable
    instances, and its order is fixed (instance id) for reproducibility.
    """

    def __init__(
        self,
        instance_id: str,
        signer: TokenSigner,
        policies: list[AccessPolicy],
        token_ttl_s: float,
    ):
        self.instance_id = instance_id
        self._signer = signer
        self._policies = list(policies)
        self._token_ttl_s = float(token_ttl_s)
        self._profiles: dict[str, NfProfile] = {}
        self._authenticated: set[str] = set()

    def register_nf(self, profile: NfProfile) -> NfProfile:
        existing = self._profiles.get(profile.nf_instance_id)
        if existing is not None and existing.status == NfStatus.AVAILABLE:
            raise RegistrationError("duplicate_instance", profile.nf_instance_id)
        self._profiles[profile.nf_instance_id] = profile
        self._authenticated.add(profile.nf_instance_id)
        return profile

    def set_status(self, nf_instance_id: str, status: NfStatus) -> None:
        profile = self._profiles.get(nf_instance_id)
        if profile is None:
            raise RegistrationError("unknown_instance", nf_instance_id)
        self._profiles[nf_instance_id] = NfProfile(
            nf_instance_id=profile.nf_instance_id,
            nf_type=profile.nf_type,
            services=profile.services,
            status=status,
            additional_scope=profile.additional_scope,
        )

    def get_profile(self, nf_instance_id: str) -> NfProfile:
        profile = self._profiles.get(nf_instance_id)
        if profile is None:
            raise RegistrationError("unknown_instance", nf_instance_id)
        return profile

    def discover(self, nf_type: NfType, service: str) -> list[NfProfile]:
        hits = [
            p
            for p in self._profiles.values()
            if p.nf_type == nf_type
            and p.status == NfStatus.AVAILABLE
            and service in p.services
        ]
        return sorted(hits, key=lambda p: p.nf_instance_id)

    def request_access_token(
        self,
        consumer_id: str,
        scope: list[str],
        target_nf_type: Union[NfType, str],
        now: float,
    ) -> AccessToken:
        """Grant an access token or raise ``AuthorizationError``.

        Reasons: ``unknown_consumer``, ``unauthenticated_consumer``,
        ``unknown_target_type``, ``empty_scope``, ``scope_not_granted``.
        """
        consumer = self._profiles.get(consumer_id)
        if consumer is None:
            raise AuthorizationError("unknown_consumer", consumer_id)
        if consumer_id not in self._authenticated:
            raise AuthorizationError("unauthenticated_consumer", consumer_id)
        if isinstance(target_nf_type, str):
            try:
                target_nf_type = NfType(target_nf_type)
            except ValueError:
                raise AuthorizationError("unknown_target_type", str(target_nf_type))
        if not scope:
            raise AuthorizationError("empty_scope")
        granted: set[str] = set()
        extra: tuple[AdditionalScope, ...] = ()
        for policy in self._policies:
            if (
                policy.consumer_type == consumer.nf_type
                and policy.target_type == target_nf_type
            ):
                granted.update(policy.services)
                if policy.additional_scope:
                    extra = policy.additional_scope
        missing = [s for s in scope if s not in granted]
        if missing:
            raise AuthorizationError("scope_not_granted", ",".join(missing))
        seen: list[str] = []
        for s in scope:
            if s not in seen:
                seen.append(s)
        claims = TokenClaims(
            issuer=self.instance_id,
            subject=consumer_id,
            audience=target_nf_type.value,
            scope=tuple(seen),
            expiration=now + self._token_ttl_s,
            additional_scope=extra,
        )
        return issue_token(claims, self._signer)


# --- enrolment and ticket provisioning --------------------------------------


@dataclass(frozen=True)
class EnrollmentCertificate:
    """Long-lived credential binding a hashed SUPI to a certificate id."""

    ec_id: str
    subject_digest: str
    issued_at: float
    valid_until: float
    issuer_signature: bytes

    def signed_payload(self) -> bytes:
        return f"{self.ec_id}|{self.subject_digest}|{self.issued_at:.6f}|{self.valid_until:.6f}".encode()


@dataclass(frozen=True)
class AuthorizationTicket:
    """Short-lived pseudonymous credential; at_id is the over-the-air handle."""

    at_id: str
    app_permissions: tuple[str, ...]
    valid_from: float
    valid_until: float
    issuer_signature: bytes

    def signed_payload(self) -> bytes:
        perms = ",".join(self.app_permissions)
        return f"{self.at_id}|{perms}|{self.valid_from:.6f}|{self.valid_until:.6f}".encode()

    def is_valid_at(self, now: float) -> bool:
        return self.valid_from <= now < self.valid_until


class EnrolmentAuthority:
    """Deconceals subscriber identity and issues enrolment certificates.

    Keeps the only SUPI-to-certificate mapping in the system, plus a replay
    ledger of seen concealment ephemerals so a recorded SUCI cannot be
    enrolled twice.
    """

    def __init__(
        self,
        keystore: HomeNetworkKeystore,
        signer: AsymmetricTokenSigner,
        ec_lifetime_s: float,
    ):
        self._keystore = keystore
        self._signer = signer
        self._ec_lifetime_s = float(ec_lifetime_s)
        self._subscribers: set[str] = set()
        self._seen_ephemerals: set[bytes] = set()
        self._issued: dict[str, str] = {}  # ec_id -> subject digest, never exported
        self._counter = 0

    def add_subscriber(self, supi: Supi) -> None:
        self._subscribers.add(supi.digest())

    def enroll(self, suci: Suci, now: float) -> EnrollmentCertificate:
        """Issue a certificate for a concealed identity.

        Raises ``EnrollmentError`` with reason ``unknown_subscriber`` or
        ``replayed_concealment``; concealment problems propagate as
        ``ConcealmentError``.
        """
        supi = self._keystore.deconceal_supi(suci)
        if supi.digest() not in self._subscribers:
            raise EnrollmentError("unknown_subscriber")
        ephemeral = suci.ciphertext[:X25519_PUBLIC_LEN]
        if ephemeral in self._seen_ephemerals:
            raise EnrollmentError("replayed_concealment")
        self._seen_ephemerals.add(ephemeral)
        self._counter += 1
        cert = EnrollmentCertificate(
            ec_id=f"ec-{self._counter:06d}",
            subject_digest=hashlib.sha256(b"subject:" + supi.value).hexdigest()[:32],
            issued_at=now,
            valid_until=now + self._ec_lifetime_s,
            issuer_signature=b"",
        )
        cert = EnrollmentCertificate(
            ec_id=cert.ec_id,
            subject_digest=cert.subject_digest,
            issued_at=cert.issued_at,
            valid_until=cert.valid_until,
            issuer_signature=self._signer.sign(cert.signed_payload()),
        )
        self._issued[cert.ec_id] = cert.subject_digest
        return cert

    def issued_count(self) -> int:
        return len(self._issued)


class AuthorizationAuthority:
    """Issues batches of authorization tickets against a valid certificate."""

    def __init__(
        self,
        ea_verifier: AsymmetricTokenSigner,
        signer: AsymmetricTokenSigner,
        id_salt: str,
        batch_cap: int,
        at_lifetime_s: float,
        at_stagger_s: float = 0.0,
    ):
        self._ea_verifier = ea_verifier
        self._signer = signer
        self._id_salt = id_salt
        self._batch_cap = int(batch_cap)
        self._at_lifetime_s = float(at_lifetime_s)
        self._at_stagger_s = float(at_stagger_s)
        self._counter = 0
        self._ledger: dict[str, str] = {}  # at_id -> ec_id, stays inside the AA

    def _next_at_id(self) -> str:
        self._counter += 1
        raw = f"{self._id_salt}:at:{self._counter}".encode()
        return hashlib.sha256(raw).hexdigest()[:16]

    def provision_batch(
        self,
        cert: EnrollmentCertificate,
        count: int,
        app_permissions: tuple[str, ...],
        now: float,
    ) -> list[AuthorizationTicket]:
        """Mint ``count`` tickets bound to ``app_permissions``.

        Ticket ids are opaque (salted hashes) so over-the-air identifiers
        carry no issue order. All tickets start now; the i-th expires at
        ``now + lifetime + i*stagger``.

        Raises ``ProvisioningError``: ``bad_certificate_signature``,
        ``certificate_expired``, ``invalid_count``, ``batch_cap_exceeded``,
        ``empty_permissions``.
        """
        if not self._ea_verifier.verify(cert.signed_payload(), cert.issuer_signature):
            raise ProvisioningError("bad_certificate_signature", cert.ec_id)
        if not (cert.issued_at <= now < cert.valid_until):
            raise ProvisioningError("certificate_expired", cert.ec_id)
        if count < 1:
            raise ProvisioningError("invalid_count", str(count))
        if count > self._batch_cap:
            raise ProvisioningError("batch_cap_exceeded", str(count))
        if not app_permissions:
            raise ProvisioningError("empty_permissions")
        batch: list[AuthorizationTicket] = []
        for i in range(count):
            at_id = self._next_at_id()
            ticket = AuthorizationTicket(
                at_id=at_id,
                app_permissions=tuple(app_permissions),
                valid_from=now,
                valid_until=now + self._at_lifetime_s + i * self._at_stagger_s,
                issuer_signature=b"",
            )
            ticket = AuthorizationTicket(
                at_id=ticket.at_id,
                app_permissions=ticket.app_permissions,
                valid_from=ticket.valid_from,
                valid_until=ticket.valid_until,
                issuer_signature=self._signer.sign(ticket.signed_payload()),
            )
            self._ledger[at_id] = cert.ec_id
            batch.append(ticket)
        return batch

    def verify_ticket(self, ticket: AuthorizationTicket) -> bool:
        return self._signer.verify(ticket.signed_payload(), ticket.issuer_signature)

    def issued_count(self) -> int:
        return len(self._ledger)


# --- facade -----------------------------------------------------------------


@dataclass
class SbaConfig:
    """Knobs for the simulated core; defaults mirror common deployments."""

    token_ttl_s: float = 300.0
    sig_scheme: str = SCHEME_MAC
    ec_lifetime_s: float = 86400.0
    at_lifetime_s: float = 600.0
    at_stagger_s: float = 0.0
    at_batch_cap: int = 64


class ServiceBasedCore:
    """Wires keystore, NRF, EA, AA and the V2X application function together.

    One instance per simulation run. All key material is derived from the run
    seed, so two cores built with the same seed and config behave identically.
    The object is self-contained (no process-global state) and can be handed
    between threads, though its methods are not themselves thread-safe.
    """

    def __init__(self, seed: int, config: Optional[SbaConfig] = None):
        self.config = config or SbaConfig()
        self.counters: dict[str, int] = {}

        if self.config.sig_scheme == SCHEME_MAC:
            token_signer: TokenSigner = MacTokenSigner(
                derive_bytes(seed, "token-mac-secret", 32)
            )
        elif self.config.sig_scheme == SCHEME_ASYMMETRIC:
            token_signer = AsymmetricTokenSigner(
                derive_bytes(seed, "token-ed25519", 32)
            )
        else:
            raise ValueError(f"unknown sig scheme {self.config.sig_scheme!r}")
        self.token_verifiers: dict[str, TokenSigner] = {
            token_signer.scheme: token_signer
        }

        policies = [
            AccessPolicy(
                consumer_type=NfType.AMF,
                target_type=NfType.V2X_AF,
                services=(SERVICE_V2X_MESSAGING,),
                additional_scope=(
                    AdditionalScope(
                        resource="v2x-sessions",
                        allowed_operations=("create", "notify"),
                    ),
                ),
            ),
            AccessPolicy(
                consumer_type=NfType.EA,
                target_type=NfType.AA,
                services=(SERVICE_AT_PROVISION,),
            ),
        ]
        self.nrf = NetworkRepository(
            instance_id="nrf-1",
            signer=token_signer,
            policies=policies,
            token_ttl_s=self.config.token_ttl_s,
        )

        self.keystore = HomeNetworkKeystore(seed)
        self.home_key = self.keystore.create_key("hk-1")
        ea_signer = AsymmetricTokenSigner(derive_bytes(seed, "ea-ed25519", 32))
        aa_signer = AsymmetricTokenSigner(derive_bytes(seed, "aa-ed25519", 32))
        self.ea = EnrolmentAuthority(
            self.keystore, ea_signer, self.config.ec_lifetime_s
        )
        self.aa = AuthorizationAuthority(
            ea_verifier=ea_signer,
            signer=aa_signer,
            id_salt=f"run-{seed}",
            batch_cap=self.config.at_batch_cap,
            at_lifetime_s=self.config.at_lifetime_s,
            at_stagger_s=self.config.at_stagger_s,
        )

        self.amf_profile = self.nrf.register_nf(
            NfProfile("amf-1", NfType.AMF, services=())
        )
        self.v2x_af_profile = self.nrf.register_nf(
            NfProfile("v2x-af-1", NfType.V2X_AF, services=(SERVICE_V2X_MESSAGING,))
        )
        self.ea_profile = self.nrf.register_nf(
            NfProfile("ea-1", NfType.EA, services=())
        )
        self.aa_profile = self.nrf.register_nf(
            NfProfile("aa-1", NfType.AA, services=(SERVICE_AT_PROVISION,))
        )

        self._ea_token: Optional[AccessToken] = None

    def bump(self, counter: str, by: int = 1) -> None:
        self.counters[counter] = self.counters.get(counter, 0) + by

    # - subscriber lifecycle -

    def add_subscriber(self, supi: Supi) -> None:
        self.ea.add_subscriber(supi)

    def enroll_vehicle(self, supi: Supi, nonce: bytes, now: float) -> EnrollmentCertificate:
        """Conceal, then enroll. Counts successes and each failure reason."""
        try:
            suci = self.keystore.conceal_supi(supi, self.home_key, nonce)
            cert = self.ea.enroll(suci, now)
        except SbaError as exc:
            self.bump(f"enroll_denied_{exc.reason}")
            raise
        self.bump("enrollments_ok")
        return cert

    # - token flows -

    def request_v2x_token(self, now: float) -> AccessToken:
        """AMF-side token for the V2X messaging service."""
        try:
            token = self.nrf.request_access_token(
                consumer_id=self.amf_profile.nf_instance_id,
                scope=[SERVICE_V2X_MESSAGING],
                target_nf_type=NfType.V2X_AF,
                now=now,
            )
        except AuthorizationError as exc:
            self.bump(f"token_denied_{exc.reason}")
            raise
        self.bump("tokens_issued")
        return token

    def invoke_v2x_service(
        self, token: Union[AccessToken, str], now: float
    ) -> Union[ServiceAccept, ServiceReject]:
        result = authorize_service_request(
            token, SERVICE_V2X_MESSAGING, self.v2x_af_profile, now, self.token_verifiers
        )
        if isinstance(result, ServiceAccept):
            self.bump("service_accepts")
        else:
            self.bump(f"service_reject_{result.cause}")
        return result

    # - ticket provisioning (EA invokes AA under a token of its own) -

    def _ea_access_token(self, now: float) -> AccessToken:
        if self._ea_token is None or now >= self._ea_token.claims.expiration:
            self._ea_token = self.nrf.request_access_token(
                consumer_id=self.ea_profile.nf_instance_id,
                scope=[SERVICE_AT_PROVISION],
                target_nf_type=NfType.AA,
                now=now,
            )
            self.bump("tokens_issued")
        return self._ea_token

    def provision_ticket_batch(
        self,
        cert: EnrollmentCertificate,
        count: int,
        app_permissions: tuple[str, ...],
        now: float,
    ) -> list[AuthorizationTicket]:
        token = self._ea_access_token(now)
        decision = authorize_service_request(
            token, SERVICE_AT_PROVISION, self.aa_profile, now, self.token_verifiers
        )
        if isinstance(decision, ServiceReject):
            self.bump(f"service_reject_{decision.cause}")
            if decision.reregister:
                self._ea_token = None
                token = self._ea_access_token(now)
                decision = authorize_service_request(
                    token, SERVICE_AT_PROVISION, self.aa_profile, now, self.token_verifiers
                )
            if isinstance(decision, ServiceReject):
                raise ProvisioningError("service_rejected", decision.cause)
        self.bump("service_accepts")
        try:
            batch = self.aa.provision_batch(cert, count, app_permissions, now)
        except ProvisioningError as exc:
            self.bump(f"provision_denied_{exc.reason}")
            raise
        self.bump("tickets_issued", by=len(batch))
        return batch
