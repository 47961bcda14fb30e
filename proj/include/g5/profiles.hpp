#pragma once

#include <string>
#include <vector>

#include "g5/identity.hpp"
#include "g5/secctx.hpp"

namespace g5::profiles {

enum class GutiAllocator : uint8_t { UniformRandom, StickyOrNearEqual };

const char* to_string(GutiAllocator a);
GutiAllocator guti_allocator_from_string(const std::string& s);

struct ConfigUpdateProtection {
    bool integrity = false;
    bool cipher = false;
    bool operator==(const ConfigUpdateProtection&) const = default;
};

/// Per-deployment feature flags. Every combination is constructible; the
/// attack procedures probe non-compliant combinations on purpose.
struct NetworkProfile {
    std::string name;
    bool supports_suci = true;
    identity::GutiUpdatePolicy guti_policy;
    GutiAllocator guti_allocator = GutiAllocator::UniformRandom;
    secctx::Nea nas_ciphering = secctx::Nea::NEA0;
    secctx::Nea rrc_ciphering = secctx::Nea::NEA0;
    bool include_mac_in_smc = false;
    ConfigUpdateProtection protect_config_update;
    bool config_update_ack = true;
    bool pei_only_in_secure = true;
    bool radio_caps_after_rrc_security = true;
    bool context_survives_idle = false;
    bool operator==(const NetworkProfile&) const = default;
};

/// The five measured deployments.
const std::vector<std::string>& preset_names();

/// Throws Error listing the valid names on an unknown one.
NetworkProfile preset(const std::string& name);

/// Every protection enabled; the reference point audits and attack verdicts
/// are checked against.
NetworkProfile hardened();

/// Structured-text profile file, one field per NetworkProfile member.
/// Parse failures name the offending field path.
NetworkProfile load_profile(const std::string& path);
NetworkProfile profile_from_json_text(const std::string& text);
std::string profile_to_json_text(const NetworkProfile& p);

/// One finding per protection mechanism the profile does not implement.
struct ComplianceFinding {
    std::string mechanism;
    std::string detail;
    bool operator==(const ComplianceFinding&) const = default;
};

/// Checks the seven protection mechanisms: supi-concealment, paging-by-stmsi,
/// pei-in-secure-channel, guti-reallocation, rrc-ciphering,
/// radio-caps-after-rrc-security, smc-mac. Empty result means fully compliant.
std::vector<ComplianceFinding> validate(const NetworkProfile& p);

}  // namespace g5::profiles
