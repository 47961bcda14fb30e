#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "g5/rng.hpp"

namespace g5::identity {

/// Subscription Permanent Identifier. The permanent identity of the USIM;
/// a compliant network never serializes it into over-the-air plaintext.
struct Supi {
    std::string mcc;   // 3 decimal digits
    std::string mnc;   // 2-3 decimal digits
    std::string msin;  // 9-10 decimal digits
    bool operator==(const Supi&) const = default;
};

/// Validates digit lengths; throws std::invalid_argument on bad input.
Supi make_supi(std::string mcc, std::string mnc, std::string msin);
bool valid(const Supi& s);

/// Canonical trace form: "imsi-<mcc><mnc><msin>".
std::string canonical(const Supi& s);

enum class SuciScheme : uint8_t {
    Null = 0,      // msin carried verbatim
    SimEcies = 1,  // ephemeral key agreement + authenticated stream cipher
};

const char* to_string(SuciScheme s);
SuciScheme suci_scheme_from_string(const std::string& s);

/// Subscription Concealed Identifier. mcc/mnc/routing indicator ride in
/// plaintext; the msin is recoverable only with the home-network private key
/// (except under the Null scheme, which exposes it verbatim).
struct Suci {
    std::string mcc;
    std::string mnc;
    std::string routing_indicator;  // 1-4 decimal digits
    SuciScheme scheme_id = SuciScheme::SimEcies;
    uint8_t hn_key_id = 0;
    std::vector<uint8_t> scheme_output;
    bool operator==(const Suci&) const = default;
};

/// Labeled field list: "suci-<mcc>-<mnc>-<ri>-<scheme>-<keyid>-<output>".
std::string canonical(const Suci& s);

/// Home-network concealment key pair (X25519, 32 bytes each side).
struct HnKeyPair {
    std::vector<uint8_t> public_key;
    std::vector<uint8_t> private_key;
    uint8_t key_id = 1;
};

HnKeyPair make_hn_keys(Rng& rng, uint8_t key_id = 1);

/// Conceals a SUPI under the home-network public key. The ephemeral value is
/// drawn from `rng`, so two concealments of the same SUPI differ.
/// Throws ConcealmentError on malformed key material.
Suci conceal_supi(const Supi& supi, const std::vector<uint8_t>& hn_public_key, Rng& rng,
                  SuciScheme scheme = SuciScheme::SimEcies,
                  const std::string& routing_indicator = "0", uint8_t hn_key_id = 1);

/// Core-side resolution. Throws IntegrityError on any corruption of
/// scheme_output or a wrong private key; never returns a wrong SUPI.
Supi deconceal_suci(const Suci& suci, const std::vector<uint8_t>& hn_private_key);

/// Permanent Equipment Identity, 8-6-1 digit layout with a Luhn check digit.
struct Pei {
    std::string tac;  // 8 digits
    std::string snr;  // 6 digits
    std::string check_digit;  // 1 digit, Luhn over the first 14
    bool operator==(const Pei&) const = default;
};

/// Computes the check digit. Throws std::invalid_argument on bad lengths.
Pei make_pei(std::string tac, std::string snr);
bool luhn_ok(const Pei& p);
std::string canonical(const Pei& p);

/// 5G Globally Unique Temporary Identifier.
struct Guti {
    std::string mcc;
    std::string mnc;
    uint8_t amf_region = 0;
    uint16_t amf_set = 0;    // 10 bits
    uint8_t amf_pointer = 0; // 6 bits
    uint32_t tmsi5g = 0;
    bool operator==(const Guti&) const = default;
};

/// 14 hex chars of (region << 48 | set << 38 | pointer << 32 | tmsi5g).
std::string canonical(const Guti& g);

/// Shortened GUTI used on the paging channel.
struct STmsi {
    uint16_t amf_set = 0;
    uint8_t amf_pointer = 0;
    uint32_t tmsi5g = 0;
    bool operator==(const STmsi&) const = default;
};

STmsi s_tmsi_of(const Guti& g);

/// 12 hex chars of (set << 38 | pointer << 32 | tmsi5g).
std::string canonical(const STmsi& s);

/// Cell Radio Network Temporary Identity; 0x0000 and 0xffff are reserved.
struct Crnti {
    uint16_t value = 0x0001;
    bool operator==(const Crnti&) const = default;
};

std::string canonical(const Crnti& c);

enum class GutiEvent {
    InitialRegistration,
    MobilityRegistration,
    ServiceRequestAfterPaging,
    PeriodicRegistration,
    TimerExpiry,
};

struct GutiUpdatePolicy {
    bool on_initial_registration = true;
    bool on_mobility_registration = true;
    bool on_service_request_after_paging = true;
    bool on_periodic_registration = true;
    std::optional<uint64_t> periodic_refresh_interval_s;
    bool operator==(const GutiUpdatePolicy&) const = default;
};

/// True iff the policy covers the event. TimerExpiry consults the refresh
/// interval against `elapsed_s` (seconds since the last reallocation).
bool guti_update_due(GutiEvent event, const GutiUpdatePolicy& policy, uint64_t elapsed_s = 0);

/// Clause 6.12.3 behavior: the four event-driven flags all enabled.
bool compliant(const GutiUpdatePolicy& policy);

/// Core-side GUTI allocation state. One registry per simulated core; the
/// AMF identifiers are fixed per core, the 32-bit TMSI varies.
class GutiRegistry {
public:
    GutiRegistry(std::string mcc, std::string mnc, uint8_t amf_region = 0x11,
                 uint16_t amf_set = 0x02, uint8_t amf_pointer = 0x01);

    /// Compliant allocation: tmsi5g drawn uniformly, distinct from every
    /// live GUTI and from `replacing`. Throws AllocationError when the
    /// space is exhausted.
    Guti allocate(Rng& rng, const std::optional<Guti>& replacing = std::nullopt);

    /// Broken-core model: reuses the previous TMSI or picks one a small
    /// increment away. First allocation behaves like allocate().
    Guti allocate_near(Rng& rng, const std::optional<Guti>& previous);

    void release(const Guti& g);
    bool live(const Guti& g) const;
    std::size_t live_count() const { return live_.size(); }

private:
    Guti with_tmsi(uint32_t tmsi) const;
    std::string mcc_, mnc_;
    uint8_t amf_region_;
    uint16_t amf_set_;
    uint8_t amf_pointer_;
    std::set<uint32_t> live_;
};

/// Mean fraction of tmsi5g bits flipped between consecutive GUTIs, in [0,1].
/// Compliant allocators stay above kUnpredictabilityThreshold; constant and
/// counter-like sequences fall well below it. Throws Error for history < 2.
double unpredictability_score(const std::vector<Guti>& history);

/// Tunable floor a healthy allocator clears with wide margin (uniform draws
/// score ~0.5, increment-style allocators ~0.05).
inline constexpr double kUnpredictabilityThreshold = 0.3;

}  // namespace g5::identity
