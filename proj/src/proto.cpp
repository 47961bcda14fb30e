#include "g5/proto.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "g5/errors.hpp"
#include "g5/hex.hpp"
#include "json.hpp"

namespace g5::proto {

using nlohmann::json;

const char* to_string(RegistrationType t) {
    switch (t) {
        case RegistrationType::Initial: return "initial";
        case RegistrationType::Mobility: return "mobility";
        case RegistrationType::Periodic: return "periodic";
    }
    return "?";
}

const char* to_string(IdentityKind k) {
    switch (k) {
        case IdentityKind::Suci: return "suci";
        case IdentityKind::Imsi: return "imsi";
        case IdentityKind::Imei: return "imei";
    }
    return "?";
}

const char* to_string(ExposureKind k) {
    switch (k) {
        case ExposureKind::Supi: return "supi";
        case ExposureKind::Suci: return "suci";
        case ExposureKind::Pei: return "pei";
        case ExposureKind::Guti: return "guti";
        case ExposureKind::STmsi: return "s-tmsi";
        case ExposureKind::Crnti: return "c-rnti";
    }
    return "?";
}

ExposureKind exposure_kind_from_string(const std::string& s) {
    if (s == "supi") return ExposureKind::Supi;
    if (s == "suci") return ExposureKind::Suci;
    if (s == "pei") return ExposureKind::Pei;
    if (s == "guti") return ExposureKind::Guti;
    if (s == "s-tmsi") return ExposureKind::STmsi;
    if (s == "c-rnti") return ExposureKind::Crnti;
    throw ParseError("exposure", "unknown identifier kind '" + s + "'");
}

namespace {

RegistrationType reg_type_from_string(const std::string& s) {
    if (s == "initial") return RegistrationType::Initial;
    if (s == "mobility") return RegistrationType::Mobility;
    if (s == "periodic") return RegistrationType::Periodic;
    throw ParseError("reg_type", "unknown registration type '" + s + "'");
}

IdentityKind identity_kind_from_string(const std::string& s) {
    if (s == "suci") return IdentityKind::Suci;
    if (s == "imsi") return IdentityKind::Imsi;
    if (s == "imei") return IdentityKind::Imei;
    throw ParseError("requested", "unknown identity kind '" + s + "'");
}

// --- json builders ---------------------------------------------------------

json js(const identity::Supi& s) {
    return json{{"type", "supi"}, {"mcc", s.mcc}, {"mnc", s.mnc}, {"msin", s.msin}};
}

json js(const identity::Suci& s) {
    return json{{"type", "suci"},
                {"mcc", s.mcc},
                {"mnc", s.mnc},
                {"routing_indicator", s.routing_indicator},
                {"scheme", identity::to_string(s.scheme_id)},
                {"hn_key_id", s.hn_key_id},
                {"output", to_hex(s.scheme_output)}};
}

json js(const identity::Guti& g) {
    return json{{"type", "guti"},    {"mcc", g.mcc},
                {"mnc", g.mnc},      {"amf_region", g.amf_region},
                {"amf_set", g.amf_set}, {"amf_pointer", g.amf_pointer},
                {"tmsi", g.tmsi5g}};
}

json js(const identity::Pei& p) {
    return json{{"type", "pei"}, {"tac", p.tac}, {"snr", p.snr}, {"check_digit", p.check_digit}};
}

json js(const identity::STmsi& s) {
    return json{{"type", "s-tmsi"},
                {"amf_set", s.amf_set},
                {"amf_pointer", s.amf_pointer},
                {"tmsi", s.tmsi5g}};
}

json js(const SubscriberIdentity& id) {
    return std::visit([](const auto& v) { return js(v); }, id);
}

json js(const secctx::SecurityCapabilities& caps) {
    json nea = json::array(), nia = json::array();
    for (uint8_t i = 0; i < 4; ++i) {
        if (caps.nea_mask & (1u << i)) nea.push_back(i);
        if (caps.nia_mask & (1u << i)) nia.push_back(i);
    }
    return json{{"nea", nea}, {"nia", nia}};
}

json js(const secctx::Selection& sel) {
    return json{{"nea", secctx::to_string(sel.nea)}, {"nia", secctx::to_string(sel.nia)}};
}

json js(const RadioCapabilities& rc) {
    json gens = json::array();
    if (rc.generation_mask & RadioCapabilities::k2G) gens.push_back("2g");
    if (rc.generation_mask & RadioCapabilities::k3G) gens.push_back("3g");
    if (rc.generation_mask & RadioCapabilities::k4G) gens.push_back("4g");
    if (rc.generation_mask & RadioCapabilities::k5G) gens.push_back("5g");
    return json{{"bands", rc.bands}, {"generations", gens}};
}

std::string mac_hex(const secctx::MacTag& tag) {
    uint8_t b[4] = {static_cast<uint8_t>(tag.value >> 24), static_cast<uint8_t>(tag.value >> 16),
                    static_cast<uint8_t>(tag.value >> 8), static_cast<uint8_t>(tag.value)};
    return to_hex(b);
}

secctx::MacTag mac_from_hex(const std::string& s) {
    auto b = from_hex(s);
    if (b.size() != 4) throw ParseError("mac", "tag must be 8 hex chars");
    return secctx::MacTag{static_cast<uint32_t>(b[0]) << 24 | static_cast<uint32_t>(b[1]) << 16 |
                          static_cast<uint32_t>(b[2]) << 8 | static_cast<uint32_t>(b[3])};
}

struct MessageToJson {
    json operator()(const NasMessage& nas) const {
        return std::visit(*this, nas);
    }
    json operator()(const RrcMessage& rrc) const {
        return std::visit(*this, rrc);
    }

    json operator()(const RegistrationRequest& m) const {
        return json{{"kind", "registration_request"},
                    {"identity", js(m.id)},
                    {"caps", js(m.ue_caps)},
                    {"reg_type", to_string(m.reg_type)}};
    }
    json operator()(const IdentityRequest& m) const {
        return json{{"kind", "identity_request"}, {"requested", to_string(m.requested)}};
    }
    json operator()(const IdentityResponse& m) const {
        return json{{"kind", "identity_response"}, {"identity", js(m.id)}};
    }
    json operator()(const AuthChallenge& m) const {
        return json{{"kind", "auth_challenge"}, {"nonce", to_hex(m.nonce)}};
    }
    json operator()(const AuthResponse& m) const {
        return json{{"kind", "auth_response"}, {"proof", to_hex(m.proof)}};
    }
    json operator()(const SecurityModeCommand& m) const {
        json j{{"kind", "security_mode_command"},
               {"replayed_caps", js(m.replayed_caps)},
               {"selected", js(m.selected)},
               {"request_pei", m.request_pei}};
        if (m.mac) j["mac"] = mac_hex(*m.mac);
        return j;
    }
    json operator()(const SecurityModeComplete& m) const {
        json j{{"kind", "security_mode_complete"}};
        if (m.pei) j["pei"] = js(*m.pei);
        return j;
    }
    json operator()(const ConfigurationUpdateCommand& m) const {
        json j{{"kind", "config_update_command"}, {"ack_requested", m.ack_requested}};
        if (m.new_guti) j["new_guti"] = js(*m.new_guti);
        return j;
    }
    json operator()(const ConfigurationUpdateComplete&) const {
        return json{{"kind", "config_update_complete"}};
    }
    json operator()(const ServiceRequest& m) const {
        return json{{"kind", "service_request"}, {"stmsi", js(m.stmsi)}};
    }
    json operator()(const RegistrationAccept& m) const {
        json j{{"kind", "registration_accept"}};
        if (m.guti) j["guti"] = js(*m.guti);
        return j;
    }

    json operator()(const RrcSetup& m) const {
        return json{{"kind", "rrc_setup"}, {"crnti", m.crnti.value}};
    }
    json operator()(const RrcSecurityModeCommand& m) const {
        return json{{"kind", "rrc_security_mode_command"}, {"selected", js(m.selected)}};
    }
    json operator()(const RrcSecurityModeComplete&) const {
        return json{{"kind", "rrc_security_mode_complete"}};
    }
    json operator()(const UeCapabilityEnquiry&) const {
        return json{{"kind", "ue_capability_enquiry"}};
    }
    json operator()(const UeCapabilityInformation& m) const {
        return json{{"kind", "ue_capability_information"}, {"radio_caps", js(m.radio_caps)}};
    }
    json operator()(const MeasurementReport& m) const {
        json cells = json::array();
        for (const auto& c : m.neighbor_cells)
            cells.push_back(json{{"cell_id", c.cell_id}, {"signal_dbm", c.signal_dbm}});
        return json{{"kind", "measurement_report"}, {"neighbor_cells", cells}};
    }
    json operator()(const RrcReconfiguration& m) const {
        return json{{"kind", "rrc_reconfiguration"}, {"up_security", m.up_security}};
    }
    json operator()(const Paging& m) const {
        json id = std::visit([](const auto& v) { return js(v); }, m.id);
        return json{{"kind", "paging"}, {"id", id}};
    }
};

json message_to_json(const Message& msg) { return std::visit(MessageToJson{}, msg); }

// --- json parsers ----------------------------------------------------------

const json& req(const json& j, const char* field) {
    auto it = j.find(field);
    if (it == j.end()) throw ParseError(field, "missing field");
    return *it;
}

identity::Supi parse_supi(const json& j) {
    return identity::Supi{req(j, "mcc").get<std::string>(), req(j, "mnc").get<std::string>(),
                          req(j, "msin").get<std::string>()};
}

identity::Guti parse_guti(const json& j) {
    identity::Guti g;
    g.mcc = req(j, "mcc").get<std::string>();
    g.mnc = req(j, "mnc").get<std::string>();
    g.amf_region = req(j, "amf_region").get<uint8_t>();
    g.amf_set = req(j, "amf_set").get<uint16_t>();
    g.amf_pointer = req(j, "amf_pointer").get<uint8_t>();
    g.tmsi5g = req(j, "tmsi").get<uint32_t>();
    return g;
}

identity::STmsi parse_stmsi(const json& j) {
    identity::STmsi s;
    s.amf_set = req(j, "amf_set").get<uint16_t>();
    s.amf_pointer = req(j, "amf_pointer").get<uint8_t>();
    s.tmsi5g = req(j, "tmsi").get<uint32_t>();
    return s;
}

identity::Pei parse_pei(const json& j) {
    return identity::Pei{req(j, "tac").get<std::string>(), req(j, "snr").get<std::string>(),
                         req(j, "check_digit").get<std::string>()};
}

identity::Suci parse_suci(const json& j) {
    identity::Suci s;
    s.mcc = req(j, "mcc").get<std::string>();
    s.mnc = req(j, "mnc").get<std::string>();
    s.routing_indicator = req(j, "routing_indicator").get<std::string>();
    s.scheme_id = identity::suci_scheme_from_string(req(j, "scheme").get<std::string>());
    s.hn_key_id = req(j, "hn_key_id").get<uint8_t>();
    s.scheme_output = from_hex(req(j, "output").get<std::string>());
    return s;
}

SubscriberIdentity parse_identity(const json& j) {
    const std::string type = req(j, "type").get<std::string>();
    if (type == "supi") return parse_supi(j);
    if (type == "suci") return parse_suci(j);
    if (type == "guti") return parse_guti(j);
    if (type == "pei") return parse_pei(j);
    throw ParseError("identity", "unknown identity type '" + type + "'");
}

secctx::SecurityCapabilities parse_caps(const json& j) {
    secctx::SecurityCapabilities caps;
    for (uint8_t i : req(j, "nea").get<std::vector<uint8_t>>()) caps.nea_mask |= (1u << (i & 7));
    for (uint8_t i : req(j, "nia").get<std::vector<uint8_t>>()) caps.nia_mask |= (1u << (i & 7));
    return caps;
}

secctx::Selection parse_selection(const json& j) {
    return secctx::Selection{secctx::nea_from_string(req(j, "nea").get<std::string>()),
                             secctx::nia_from_string(req(j, "nia").get<std::string>())};
}

RadioCapabilities parse_radio_caps(const json& j) {
    RadioCapabilities rc;
    rc.bands = req(j, "bands").get<std::vector<uint16_t>>();
    for (const auto& g : req(j, "generations")) {
        const std::string s = g.get<std::string>();
        if (s == "2g") rc.generation_mask |= RadioCapabilities::k2G;
        else if (s == "3g") rc.generation_mask |= RadioCapabilities::k3G;
        else if (s == "4g") rc.generation_mask |= RadioCapabilities::k4G;
        else if (s == "5g") rc.generation_mask |= RadioCapabilities::k5G;
        else throw ParseError("generations", "unknown generation '" + s + "'");
    }
    return rc;
}

Message message_from_json(const json& j) {
    const std::string kind = req(j, "kind").get<std::string>();

    if (kind == "registration_request") {
        RegistrationRequest m;
        m.id = parse_identity(req(j, "identity"));
        m.ue_caps = parse_caps(req(j, "caps"));
        m.reg_type = reg_type_from_string(req(j, "reg_type").get<std::string>());
        return NasMessage{m};
    }
    if (kind == "identity_request")
        return NasMessage{IdentityRequest{identity_kind_from_string(req(j, "requested").get<std::string>())}};
    if (kind == "identity_response") return NasMessage{IdentityResponse{parse_identity(req(j, "identity"))}};
    if (kind == "auth_challenge")
        return NasMessage{AuthChallenge{from_hex(req(j, "nonce").get<std::string>())}};
    if (kind == "auth_response")
        return NasMessage{AuthResponse{from_hex(req(j, "proof").get<std::string>())}};
    if (kind == "security_mode_command") {
        SecurityModeCommand m;
        m.replayed_caps = parse_caps(req(j, "replayed_caps"));
        m.selected = parse_selection(req(j, "selected"));
        m.request_pei = req(j, "request_pei").get<bool>();
        if (j.contains("mac")) m.mac = mac_from_hex(j["mac"].get<std::string>());
        return NasMessage{m};
    }
    if (kind == "security_mode_complete") {
        SecurityModeComplete m;
        if (j.contains("pei")) m.pei = parse_pei(j["pei"]);
        return NasMessage{m};
    }
    if (kind == "config_update_command") {
        ConfigurationUpdateCommand m;
        m.ack_requested = req(j, "ack_requested").get<bool>();
        if (j.contains("new_guti")) m.new_guti = parse_guti(j["new_guti"]);
        return NasMessage{m};
    }
    if (kind == "config_update_complete") return NasMessage{ConfigurationUpdateComplete{}};
    if (kind == "service_request") return NasMessage{ServiceRequest{parse_stmsi(req(j, "stmsi"))}};
    if (kind == "registration_accept") {
        RegistrationAccept m;
        if (j.contains("guti")) m.guti = parse_guti(j["guti"]);
        return NasMessage{m};
    }

    if (kind == "rrc_setup")
        return RrcMessage{RrcSetup{identity::Crnti{req(j, "crnti").get<uint16_t>()}}};
    if (kind == "rrc_security_mode_command")
        return RrcMessage{RrcSecurityModeCommand{parse_selection(req(j, "selected"))}};
    if (kind == "rrc_security_mode_complete") return RrcMessage{RrcSecurityModeComplete{}};
    if (kind == "ue_capability_enquiry") return RrcMessage{UeCapabilityEnquiry{}};
    if (kind == "ue_capability_information")
        return RrcMessage{UeCapabilityInformation{parse_radio_caps(req(j, "radio_caps"))}};
    if (kind == "measurement_report") {
        MeasurementReport m;
        for (const auto& c : req(j, "neighbor_cells"))
            m.neighbor_cells.push_back(NeighborMeasurement{req(c, "cell_id").get<uint32_t>(),
                                                           req(c, "signal_dbm").get<int32_t>()});
        return RrcMessage{m};
    }
    if (kind == "rrc_reconfiguration")
        return RrcMessage{RrcReconfiguration{req(j, "up_security").get<bool>()}};
    if (kind == "paging") {
        const json& id = req(j, "id");
        const std::string type = req(id, "type").get<std::string>();
        if (type == "s-tmsi") return RrcMessage{Paging{parse_stmsi(id)}};
        if (type == "supi") return RrcMessage{Paging{parse_supi(id)}};
        throw ParseError("paging", "unknown paging identity type '" + type + "'");
    }

    throw ParseError("msg", "unknown message kind '" + kind + "'");
}

Layer layer_from_string(const std::string& s) {
    if (s == "nas") return Layer::Nas;
    if (s == "rrc") return Layer::Rrc;
    if (s == "paging") return Layer::Paging;
    throw ParseError("layer", "unknown layer '" + s + "'");
}

Direction direction_from_string(const std::string& s) {
    if (s == "ue->net") return Direction::UeToNet;
    if (s == "net->ue") return Direction::NetToUe;
    throw ParseError("dir", "unknown direction '" + s + "'");
}

}  // namespace

std::string message_kind(const Message& msg) {
    return message_to_json(msg)["kind"].get<std::string>();
}

bool effectively_ciphered(const SecurityEnvelope& env) {
    return env.ciphered && env.cipher_alg != secctx::Nea::NEA0;
}

std::vector<uint8_t> mac_bytes(const Message& msg) {
    if (const auto* nas = std::get_if<NasMessage>(&msg)) {
        if (const auto* smc = std::get_if<SecurityModeCommand>(nas)) {
            SecurityModeCommand stripped = *smc;
            stripped.mac.reset();
            std::string s = message_to_json(Message{NasMessage{stripped}}).dump();
            return {s.begin(), s.end()};
        }
    }
    std::string s = message_to_json(msg).dump();
    return {s.begin(), s.end()};
}

namespace {

bool is_activation_command(const Message& msg) {
    if (const auto* nas = std::get_if<NasMessage>(&msg))
        return std::holds_alternative<SecurityModeCommand>(*nas);
    if (const auto* rrc = std::get_if<RrcMessage>(&msg))
        return std::holds_alternative<RrcSecurityModeCommand>(*rrc);
    return false;
}

}  // namespace

SecurityEnvelope protect(Message msg, Layer layer, Direction dir, secctx::SecurityContext* ctx,
                         bool integrity, bool want_cipher) {
    if ((integrity || want_cipher) && ctx == nullptr)
        throw Error("protection requested without a security context");

    SecurityEnvelope env;
    env.layer = layer;
    if (ctx && (integrity || want_cipher)) env.count = ctx->consume(layer, dir);
    if (integrity) {
        env.integrity_protected = true;
        env.mac = is_activation_command(msg)
                      ? secctx::compute_activation_mac(*ctx, layer, dir, env.count, mac_bytes(msg))
                      : secctx::compute_mac(*ctx, layer, dir, env.count, mac_bytes(msg));
        if (auto* nas = std::get_if<NasMessage>(&msg))
            if (auto* smc = std::get_if<SecurityModeCommand>(nas)) smc->mac = env.mac;
    }
    if (want_cipher) {
        env.ciphered = true;
        env.cipher_alg = ctx->cipher_alg(layer);
    }
    env.payload = std::move(msg);
    return env;
}

namespace {

void add_identity_exposure(std::set<Exposure>& out, const SubscriberIdentity& id) {
    if (const auto* supi = std::get_if<identity::Supi>(&id)) {
        out.insert({ExposureKind::Supi, identity::canonical(*supi)});
    } else if (const auto* suci = std::get_if<identity::Suci>(&id)) {
        out.insert({ExposureKind::Suci, identity::canonical(*suci)});
        if (suci->scheme_id == identity::SuciScheme::Null) {
            std::string msin(suci->scheme_output.begin(), suci->scheme_output.end());
            out.insert({ExposureKind::Supi, "imsi-" + suci->mcc + suci->mnc + msin});
        }
    } else if (const auto* guti = std::get_if<identity::Guti>(&id)) {
        out.insert({ExposureKind::Guti, identity::canonical(*guti)});
    } else if (const auto* pei = std::get_if<identity::Pei>(&id)) {
        out.insert({ExposureKind::Pei, identity::canonical(*pei)});
    }
}

struct PayloadExposures {
    std::set<Exposure>& out;

    void operator()(const NasMessage& nas) { std::visit(*this, nas); }
    void operator()(const RrcMessage& rrc) { std::visit(*this, rrc); }

    void operator()(const RegistrationRequest& m) { add_identity_exposure(out, m.id); }
    void operator()(const IdentityResponse& m) { add_identity_exposure(out, m.id); }
    void operator()(const SecurityModeComplete& m) {
        if (m.pei) out.insert({ExposureKind::Pei, identity::canonical(*m.pei)});
    }
    void operator()(const ConfigurationUpdateCommand& m) {
        if (m.new_guti) out.insert({ExposureKind::Guti, identity::canonical(*m.new_guti)});
    }
    void operator()(const ServiceRequest& m) {
        out.insert({ExposureKind::STmsi, identity::canonical(m.stmsi)});
    }
    void operator()(const RegistrationAccept& m) {
        if (m.guti) out.insert({ExposureKind::Guti, identity::canonical(*m.guti)});
    }
    void operator()(const RrcSetup& m) {
        out.insert({ExposureKind::Crnti, identity::canonical(m.crnti)});
    }
    void operator()(const Paging& m) {
        if (const auto* stmsi = std::get_if<identity::STmsi>(&m.id))
            out.insert({ExposureKind::STmsi, identity::canonical(*stmsi)});
        else if (const auto* supi = std::get_if<identity::Supi>(&m.id))
            out.insert({ExposureKind::Supi, identity::canonical(*supi)});
    }

    // No identifiers beyond the header in the remaining kinds.
    template <typename T>
    void operator()(const T&) {}
};

}  // namespace

std::vector<Exposure> exposed_fields(const SecurityEnvelope& env) {
    std::set<Exposure> out;
    if (env.crnti) out.insert({ExposureKind::Crnti, identity::canonical(*env.crnti)});
    if (!effectively_ciphered(env)) std::visit(PayloadExposures{out}, env.payload);
    return {out.begin(), out.end()};
}

std::string encode_trace(const Trace& trace) {
    std::string out;
    for (const TraceEvent& ev : trace) {
        json j;
        j["seq"] = ev.seq;
        j["t"] = ev.sim_time_s;
        j["dir"] = secctx::to_string(ev.direction);
        j["layer"] = secctx::to_string(ev.envelope.layer);
        j["integrity"] = ev.envelope.integrity_protected;
        j["ciphered"] = ev.envelope.ciphered;
        j["alg"] = secctx::to_string(ev.envelope.cipher_alg);
        j["count"] = ev.envelope.count;
        if (ev.envelope.mac) j["mac"] = mac_hex(*ev.envelope.mac);
        if (ev.envelope.crnti) j["crnti"] = ev.envelope.crnti->value;
        j["msg"] = message_to_json(ev.envelope.payload);
        json exposed = json::array();
        for (const Exposure& e : ev.exposed)
            exposed.push_back(json::array({to_string(e.kind), e.text}));
        j["exposed"] = exposed;
        out += j.dump();
        out += '\n';
    }
    return out;
}

Trace decode_trace(std::string_view text) {
    Trace trace;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.empty()) continue;

        const std::string where = "line " + std::to_string(line_no);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(where, e.what());
        }
        try {
            TraceEvent ev;
            ev.seq = req(j, "seq").get<uint64_t>();
            ev.sim_time_s = req(j, "t").get<uint64_t>();
            ev.direction = direction_from_string(req(j, "dir").get<std::string>());
            ev.envelope.layer = layer_from_string(req(j, "layer").get<std::string>());
            ev.envelope.integrity_protected = req(j, "integrity").get<bool>();
            ev.envelope.ciphered = req(j, "ciphered").get<bool>();
            ev.envelope.cipher_alg = secctx::nea_from_string(req(j, "alg").get<std::string>());
            ev.envelope.count = req(j, "count").get<uint32_t>();
            if (j.contains("mac")) ev.envelope.mac = mac_from_hex(j["mac"].get<std::string>());
            if (j.contains("crnti"))
                ev.envelope.crnti = identity::Crnti{j["crnti"].get<uint16_t>()};
            ev.envelope.payload = message_from_json(req(j, "msg"));
            for (const auto& e : req(j, "exposed")) {
                if (!e.is_array() || e.size() != 2)
                    throw ParseError("exposed", "expected [kind, text] pairs");
                ev.exposed.push_back(Exposure{exposure_kind_from_string(e[0].get<std::string>()),
                                              e[1].get<std::string>()});
            }
            trace.push_back(std::move(ev));
        } catch (const ParseError& e) {
            throw ParseError(where, e.what());
        } catch (const json::exception& e) {
            throw ParseError(where, e.what());
        }
    }
    return trace;
}

}  // namespace g5::proto
