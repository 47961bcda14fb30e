#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "g5/identity.hpp"
#include "g5/secctx.hpp"

namespace g5::proto {

using secctx::Direction;
using secctx::Layer;

/// Radio access capabilities reported over RRC.
struct RadioCapabilities {
    std::vector<uint16_t> bands;     // non-empty
    uint8_t generation_mask = 0;     // bit0=2G .. bit3=5G
    bool operator==(const RadioCapabilities&) const = default;

    static constexpr uint8_t k2G = 1, k3G = 2, k4G = 4, k5G = 8;
    bool supports_5g() const { return generation_mask & k5G; }
};

using SubscriberIdentity =
    std::variant<identity::Supi, identity::Suci, identity::Guti, identity::Pei>;

enum class RegistrationType : uint8_t { Initial, Mobility, Periodic };
enum class IdentityKind : uint8_t { Suci, Imsi, Imei };

const char* to_string(RegistrationType t);
const char* to_string(IdentityKind k);

// --- NAS messages ---------------------------------------------------------

struct RegistrationRequest {
    SubscriberIdentity id;
    secctx::SecurityCapabilities ue_caps;
    RegistrationType reg_type = RegistrationType::Initial;
    bool operator==(const RegistrationRequest&) const = default;
};

struct IdentityRequest {
    IdentityKind requested = IdentityKind::Suci;
    bool operator==(const IdentityRequest&) const = default;
};

struct IdentityResponse {
    SubscriberIdentity id;
    bool operator==(const IdentityResponse&) const = default;
};

struct AuthChallenge {
    std::vector<uint8_t> nonce;
    bool operator==(const AuthChallenge&) const = default;
};

struct AuthResponse {
    std::vector<uint8_t> proof;
    bool operator==(const AuthResponse&) const = default;
};

/// Enhanced NAS security activation: the received capabilities are replayed
/// verbatim and, when the deployment implements it, a MAC covers the whole
/// command so in-flight tampering is detectable.
struct SecurityModeCommand {
    secctx::SecurityCapabilities replayed_caps;
    secctx::Selection selected;
    bool request_pei = false;
    std::optional<secctx::MacTag> mac;
    bool operator==(const SecurityModeCommand&) const = default;
};

struct SecurityModeComplete {
    std::optional<identity::Pei> pei;
    bool operator==(const SecurityModeComplete&) const = default;
};

struct ConfigurationUpdateCommand {
    std::optional<identity::Guti> new_guti;
    bool ack_requested = true;
    bool operator==(const ConfigurationUpdateCommand&) const = default;
};

struct ConfigurationUpdateComplete {
    bool operator==(const ConfigurationUpdateComplete&) const = default;
};

struct ServiceRequest {
    identity::STmsi stmsi;
    bool operator==(const ServiceRequest&) const = default;
};

struct RegistrationAccept {
    std::optional<identity::Guti> guti;
    bool operator==(const RegistrationAccept&) const = default;
};

using NasMessage =
    std::variant<RegistrationRequest, IdentityRequest, IdentityResponse, AuthChallenge,
                 AuthResponse, SecurityModeCommand, SecurityModeComplete,
                 ConfigurationUpdateCommand, ConfigurationUpdateComplete, ServiceRequest,
                 RegistrationAccept>;

// --- RRC messages ----------------------------------------------------------

struct RrcSetup {
    identity::Crnti crnti;
    bool operator==(const RrcSetup&) const = default;
};

struct RrcSecurityModeCommand {
    secctx::Selection selected;
    bool operator==(const RrcSecurityModeCommand&) const = default;
};

struct RrcSecurityModeComplete {
    bool operator==(const RrcSecurityModeComplete&) const = default;
};

struct UeCapabilityEnquiry {
    bool operator==(const UeCapabilityEnquiry&) const = default;
};

struct UeCapabilityInformation {
    RadioCapabilities radio_caps;
    bool operator==(const UeCapabilityInformation&) const = default;
};

struct NeighborMeasurement {
    uint32_t cell_id = 0;
    int32_t signal_dbm = 0;
    bool operator==(const NeighborMeasurement&) const = default;
};

struct MeasurementReport {
    std::vector<NeighborMeasurement> neighbor_cells;
    bool operator==(const MeasurementReport&) const = default;
};

struct RrcReconfiguration {
    bool up_security = true;
    bool operator==(const RrcReconfiguration&) const = default;
};

using PagingId = std::variant<identity::STmsi, identity::Supi>;

struct Paging {
    PagingId id;
    bool operator==(const Paging&) const = default;
};

using RrcMessage =
    std::variant<RrcSetup, RrcSecurityModeCommand, RrcSecurityModeComplete, UeCapabilityEnquiry,
                 UeCapabilityInformation, MeasurementReport, RrcReconfiguration, Paging>;

using Message = std::variant<NasMessage, RrcMessage>;

/// Stable wire name of the payload variant ("registration_request", ...).
std::string message_kind(const Message& msg);

// --- Security envelope ------------------------------------------------------

/// A transmitted message together with its protection status. The C-RNTI
/// header models the MAC-layer identifier that rides outside any ciphering;
/// paging broadcasts carry none. `cipher_alg` records the algorithm in force
/// when `ciphered` is set: NEA0 ciphering is accounted as plaintext.
struct SecurityEnvelope {
    Layer layer = Layer::Nas;
    bool integrity_protected = false;
    bool ciphered = false;
    secctx::Nea cipher_alg = secctx::Nea::NEA0;
    std::optional<secctx::MacTag> mac;
    uint32_t count = 0;
    std::optional<identity::Crnti> crnti;
    Message payload;
    bool operator==(const SecurityEnvelope&) const = default;
};

bool effectively_ciphered(const SecurityEnvelope& env);

/// Wraps a message for transmission, consuming one protection count when a
/// context is used. For a SecurityModeCommand with integrity, the computed
/// tag also surfaces in the message's own mac field. Throws Error when
/// protection is requested without a context.
SecurityEnvelope protect(Message msg, Layer layer, Direction dir, secctx::SecurityContext* ctx,
                         bool integrity, bool want_cipher);

/// Canonical byte image of a message, used for MAC computation and keystream
/// accounting. For a SecurityModeCommand the mac field itself is excluded.
std::vector<uint8_t> mac_bytes(const Message& msg);

// --- Exposure accounting ----------------------------------------------------

enum class ExposureKind : uint8_t { Supi, Suci, Pei, Guti, STmsi, Crnti };

const char* to_string(ExposureKind k);
ExposureKind exposure_kind_from_string(const std::string& s);

struct Exposure {
    ExposureKind kind;
    std::string text;
    bool operator==(const Exposure&) const = default;
    auto operator<=>(const Exposure&) const = default;
};

/// Every identifier a passive radio observer can read from the envelope:
/// header identifiers always, payload identifiers unless effective ciphering
/// hides them. A null-scheme SUCI additionally exposes the underlying SUPI.
std::vector<Exposure> exposed_fields(const SecurityEnvelope& env);

// --- Trace -------------------------------------------------------------------

struct TraceEvent {
    uint64_t seq = 0;
    uint64_t sim_time_s = 0;
    Direction direction = Direction::UeToNet;
    SecurityEnvelope envelope;
    std::vector<Exposure> exposed;
    bool operator==(const TraceEvent&) const = default;
};

using Trace = std::vector<TraceEvent>;

/// One structured-text record per line; an empty trace encodes to an empty
/// stream. decode_trace(encode_trace(t)) == t for every reachable trace.
std::string encode_trace(const Trace& trace);

/// Throws ParseError naming the offending line.
Trace decode_trace(std::string_view text);

}  // namespace g5::proto
