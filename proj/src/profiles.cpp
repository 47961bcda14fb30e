#include "g5/profiles.hpp"

#include <fstream>
#include <sstream>

#include "g5/errors.hpp"
#include "json.hpp"

namespace g5::profiles {

using nlohmann::json;
using identity::GutiUpdatePolicy;
using secctx::Nea;

const char* to_string(GutiAllocator a) {
    return a == GutiAllocator::UniformRandom ? "uniform_random" : "sticky_or_near_equal";
}

GutiAllocator guti_allocator_from_string(const std::string& s) {
    if (s == "uniform_random") return GutiAllocator::UniformRandom;
    if (s == "sticky_or_near_equal") return GutiAllocator::StickyOrNearEqual;
    throw ParseError("guti_allocator", "unknown allocator '" + s + "'");
}

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {"operator-nsa", "operator-sa-a", "operator-sa-b",
                                                   "operator-sa-c", "oai"};
    return names;
}

namespace {

GutiUpdatePolicy sticky_policy() {
    // New value at initial attach only; nothing refreshes it afterwards.
    GutiUpdatePolicy p;
    p.on_initial_registration = true;
    p.on_mobility_registration = false;
    p.on_service_request_after_paging = false;
    p.on_periodic_registration = false;
    return p;
}

GutiUpdatePolicy refreshing_policy(uint64_t interval_s) {
    GutiUpdatePolicy p;  // all four event flags default to true
    p.periodic_refresh_interval_s = interval_s;
    return p;
}

}  // namespace

NetworkProfile preset(const std::string& name) {
    NetworkProfile p;
    p.name = name;

    if (name == "operator-nsa") {
        p.supports_suci = false;
        p.guti_policy = sticky_policy();
        p.guti_allocator = GutiAllocator::UniformRandom;
        p.nas_ciphering = Nea::NEA0;
        p.rrc_ciphering = Nea::NEA0;
        p.include_mac_in_smc = false;
        p.protect_config_update = {false, false};
        p.config_update_ack = true;
        p.context_survives_idle = false;
        return p;
    }
    if (name == "operator-sa-a") {
        p.supports_suci = true;
        p.guti_policy = sticky_policy();  // same value observed for days
        p.guti_allocator = GutiAllocator::UniformRandom;
        p.nas_ciphering = Nea::NEA0;
        p.rrc_ciphering = Nea::NEA0;
        p.include_mac_in_smc = false;
        p.protect_config_update = {false, false};
        p.config_update_ack = true;
        p.context_survives_idle = false;
        return p;
    }
    if (name == "operator-sa-b" || name == "operator-sa-c") {
        p.supports_suci = true;
        p.guti_policy = refreshing_policy(name == "operator-sa-b" ? 90 * 60 : 120 * 60);
        p.guti_allocator = GutiAllocator::UniformRandom;
        p.nas_ciphering = Nea::NEA0;
        p.rrc_ciphering = Nea::NEA0;
        p.include_mac_in_smc = false;
        // Reallocated identifier delivered with no protection at all.
        p.protect_config_update = {false, false};
        p.config_update_ack = true;
        p.context_survives_idle = false;
        return p;
    }
    if (name == "oai") {
        p.supports_suci = true;
        p.guti_policy.on_initial_registration = true;
        p.guti_policy.on_mobility_registration = true;
        p.guti_policy.on_service_request_after_paging = false;
        p.guti_policy.on_periodic_registration = true;
        p.guti_allocator = GutiAllocator::StickyOrNearEqual;
        p.nas_ciphering = Nea::NEA0;
        p.rrc_ciphering = Nea::NEA0;
        p.include_mac_in_smc = true;
        p.protect_config_update = {true, false};
        p.config_update_ack = true;
        p.context_survives_idle = true;
        return p;
    }

    std::string valid;
    for (const auto& n : preset_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw Error("unknown profile preset '" + name + "' (valid: " + valid + ")");
}

NetworkProfile hardened() {
    NetworkProfile p;
    p.name = "hardened";
    p.supports_suci = true;
    p.guti_policy = refreshing_policy(60 * 60);
    p.guti_allocator = GutiAllocator::UniformRandom;
    p.nas_ciphering = Nea::NEA2;
    p.rrc_ciphering = Nea::NEA2;
    p.include_mac_in_smc = true;
    p.protect_config_update = {true, true};
    p.config_update_ack = true;
    p.pei_only_in_secure = true;
    p.radio_caps_after_rrc_security = true;
    p.context_survives_idle = true;
    return p;
}

namespace {

template <typename T>
T field(const json& j, const std::string& path) {
    const json* cur = &j;
    std::string consumed;
    std::size_t start = 0;
    while (true) {
        std::size_t dot = path.find('.', start);
        std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
        consumed += (consumed.empty() ? "" : ".") + key;
        auto it = cur->find(key);
        if (it == cur->end()) throw ParseError(consumed, "missing field");
        cur = &*it;
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    try {
        return cur->get<T>();
    } catch (const json::exception& e) {
        throw ParseError(consumed, e.what());
    }
}

}  // namespace

NetworkProfile profile_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError("profile", e.what());
    }

    NetworkProfile p;
    p.name = field<std::string>(j, "name");
    p.supports_suci = field<bool>(j, "supports_suci");
    p.guti_policy.on_initial_registration = field<bool>(j, "guti_policy.on_initial_registration");
    p.guti_policy.on_mobility_registration = field<bool>(j, "guti_policy.on_mobility_registration");
    p.guti_policy.on_service_request_after_paging =
        field<bool>(j, "guti_policy.on_service_request_after_paging");
    p.guti_policy.on_periodic_registration = field<bool>(j, "guti_policy.on_periodic_registration");
    {
        const json& policy = j.at("guti_policy");
        auto it = policy.find("periodic_refresh_interval_s");
        if (it != policy.end() && !it->is_null()) {
            try {
                p.guti_policy.periodic_refresh_interval_s = it->get<uint64_t>();
            } catch (const json::exception& e) {
                throw ParseError("guti_policy.periodic_refresh_interval_s", e.what());
            }
        }
    }
    p.guti_allocator = guti_allocator_from_string(field<std::string>(j, "guti_allocator"));
    p.nas_ciphering = secctx::nea_from_string(field<std::string>(j, "nas_ciphering"));
    p.rrc_ciphering = secctx::nea_from_string(field<std::string>(j, "rrc_ciphering"));
    p.include_mac_in_smc = field<bool>(j, "include_mac_in_smc");
    p.protect_config_update.integrity = field<bool>(j, "protect_config_update.integrity");
    p.protect_config_update.cipher = field<bool>(j, "protect_config_update.cipher");
    p.config_update_ack = field<bool>(j, "config_update_ack");
    p.pei_only_in_secure = field<bool>(j, "pei_only_in_secure");
    p.radio_caps_after_rrc_security = field<bool>(j, "radio_caps_after_rrc_security");
    p.context_survives_idle = field<bool>(j, "context_survives_idle");
    return p;
}

std::string profile_to_json_text(const NetworkProfile& p) {
    json policy{{"on_initial_registration", p.guti_policy.on_initial_registration},
                {"on_mobility_registration", p.guti_policy.on_mobility_registration},
                {"on_service_request_after_paging", p.guti_policy.on_service_request_after_paging},
                {"on_periodic_registration", p.guti_policy.on_periodic_registration}};
    if (p.guti_policy.periodic_refresh_interval_s)
        policy["periodic_refresh_interval_s"] = *p.guti_policy.periodic_refresh_interval_s;
    else
        policy["periodic_refresh_interval_s"] = nullptr;

    json j{{"name", p.name},
           {"supports_suci", p.supports_suci},
           {"guti_policy", policy},
           {"guti_allocator", to_string(p.guti_allocator)},
           {"nas_ciphering", secctx::to_string(p.nas_ciphering)},
           {"rrc_ciphering", secctx::to_string(p.rrc_ciphering)},
           {"include_mac_in_smc", p.include_mac_in_smc},
           {"protect_config_update",
            json{{"integrity", p.protect_config_update.integrity},
                 {"cipher", p.protect_config_update.cipher}}},
           {"config_update_ack", p.config_update_ack},
           {"pei_only_in_secure", p.pei_only_in_secure},
           {"radio_caps_after_rrc_security", p.radio_caps_after_rrc_security},
           {"context_survives_idle", p.context_survives_idle}};
    return j.dump(2) + "\n";
}

NetworkProfile load_profile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open profile file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return profile_from_json_text(buf.str());
}

std::vector<ComplianceFinding> validate(const NetworkProfile& p) {
    std::vector<ComplianceFinding> findings;

    if (!p.supports_suci)
        findings.push_back({"supi-concealment",
                            "network identifies subscribers by plaintext IMSI instead of SUCI"});

    // paging-by-stmsi: paging always uses the shortened temporary identifier
    // in this model, so no profile flag can violate it.

    if (!p.pei_only_in_secure)
        findings.push_back({"pei-in-secure-channel",
                            "equipment identity requested before NAS security is established"});

    if (!identity::compliant(p.guti_policy) || p.guti_allocator != GutiAllocator::UniformRandom)
        findings.push_back({"guti-reallocation",
                            "temporary identifier is not refreshed on every mandated event with "
                            "unpredictable values"});

    if (p.rrc_ciphering == Nea::NEA0)
        findings.push_back({"rrc-ciphering", "RRC messages use null ciphering"});

    if (!p.radio_caps_after_rrc_security)
        findings.push_back({"radio-caps-after-rrc-security",
                            "radio capabilities requested before RRC security activation"});

    if (!p.include_mac_in_smc)
        findings.push_back({"smc-mac", "NAS security mode command carries no MAC"});

    return findings;
}

}  // namespace g5::profiles
