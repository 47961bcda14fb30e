#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "g5/endpoints.hpp"
#include "g5/profiles.hpp"
#include "g5/proto.hpp"

namespace g5::adversary {

enum class Capability : uint8_t {
    Observe = 1,
    InjectAsNetwork = 2,  // fake base station
    ModifyInFlight = 4,   // interception / overshadowing
    Drop = 8,
};

struct AdversaryClass {
    uint8_t caps = 0;

    bool has(Capability c) const { return caps & static_cast<uint8_t>(c); }

    static AdversaryClass passive() { return {static_cast<uint8_t>(Capability::Observe)}; }
    static AdversaryClass fake_base_station() {
        return {static_cast<uint8_t>(Capability::Observe) |
                static_cast<uint8_t>(Capability::InjectAsNetwork)};
    }
    static AdversaryClass mitm() {
        return {static_cast<uint8_t>(Capability::Observe) |
                static_cast<uint8_t>(Capability::InjectAsNetwork) |
                static_cast<uint8_t>(Capability::ModifyInFlight) |
                static_cast<uint8_t>(Capability::Drop)};
    }
};

struct Hooks {
    endpoints::Channel::Observer observe;
    endpoints::Channel::Modifier modify;
    endpoints::Channel::Dropper drop;
};

/// Installs the hooks on the channel after checking each against the declared
/// capability set; throws CapabilityError on any hook beyond it.
void interpose(endpoints::Channel& channel, const AdversaryClass& cls, Hooks hooks);

/// Transmits a forged network-side message; requires InjectAsNetwork.
std::optional<proto::SecurityEnvelope> inject_as_network(endpoints::Channel& channel,
                                                         const AdversaryClass& cls,
                                                         proto::SecurityEnvelope env);

enum class AttackId : uint8_t {
    ImsiCatching,
    ImsiPagingProbe,
    ImeiCatching,
    TmsiLinkability,
    CrntiTracking,
    UeMeasurementReports,
    SecurityCapsBiddingDown,
    SecurityCapsBiddingDownExtended,
    RadioCapsBiddingDown,
    GutiReallocDos,
    GutiReallocTracking,
    GutiRefreshNeutralization,
};

const char* to_string(AttackId id);
AttackId attack_from_string(const std::string& s);
const std::vector<AttackId>& all_attack_ids();

enum class Outcome : uint8_t { Vulnerable, PartiallyMitigated, Mitigated };
const char* to_string(Outcome o);

enum class ConfidentialityProperty : uint8_t { IdentityPrivacy, LocationPrivacy, Untraceability };
const char* to_string(ConfidentialityProperty p);

struct AttackVerdict {
    AttackId attack = AttackId::ImsiCatching;
    std::string profile;
    Outcome outcome = Outcome::Mitigated;
    std::vector<uint64_t> evidence;  // trace seq refs; non-empty when Vulnerable
    ConfidentialityProperty property_violated = ConfidentialityProperty::IdentityPrivacy;
    std::string note;
};

struct ScenarioParams {
    int paging_epochs = 3;             // silent pages in the linkability window
    uint64_t epoch_interval_s = 86400; // one page per simulated day
    endpoints::UePolicy ue_policy = endpoints::UePolicy::Permissive;
};

struct AttackRun {
    AttackVerdict verdict;
    proto::Trace trace;
};

/// Executes the named procedure against the profile and judges the result.
/// Deterministic per seed; throws Error on an unknown id only via
/// attack_from_string.
AttackRun run_attack(AttackId id, const profiles::NetworkProfile& profile,
                     const ScenarioParams& params, uint64_t seed);

}  // namespace g5::adversary
