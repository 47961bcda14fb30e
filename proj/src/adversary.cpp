#include "g5/adversary.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <set>

#include "g5/errors.hpp"

namespace g5::adversary {

using namespace proto;
using endpoints::Channel;
using endpoints::RunOutcome;
using endpoints::Simulation;
using endpoints::UePhase;
using secctx::Nea;
using secctx::Nia;

void interpose(Channel& channel, const AdversaryClass& cls, Hooks hooks) {
    if (hooks.observe && !cls.has(Capability::Observe))
        throw CapabilityError("observe hook exceeds the declared capability set");
    if (hooks.modify && !cls.has(Capability::ModifyInFlight))
        throw CapabilityError("modify hook exceeds the declared capability set");
    if (hooks.drop && !cls.has(Capability::Drop))
        throw CapabilityError("drop hook exceeds the declared capability set");
    if (hooks.observe) channel.set_observer(std::move(hooks.observe));
    if (hooks.modify) channel.set_modifier(std::move(hooks.modify));
    if (hooks.drop) channel.set_dropper(std::move(hooks.drop));
}

std::optional<proto::SecurityEnvelope> inject_as_network(Channel& channel,
                                                         const AdversaryClass& cls,
                                                         proto::SecurityEnvelope env) {
    if (!cls.has(Capability::InjectAsNetwork))
        throw CapabilityError("injection exceeds the declared capability set");
    return channel.transmit(Direction::NetToUe, std::move(env));
}

namespace {

const std::map<AttackId, const char*>& attack_names() {
    static const std::map<AttackId, const char*> names = {
        {AttackId::ImsiCatching, "imsi_catching"},
        {AttackId::ImsiPagingProbe, "imsi_paging_probe"},
        {AttackId::ImeiCatching, "imei_catching"},
        {AttackId::TmsiLinkability, "tmsi_linkability"},
        {AttackId::CrntiTracking, "crnti_tracking"},
        {AttackId::UeMeasurementReports, "ue_measurement_reports"},
        {AttackId::SecurityCapsBiddingDown, "security_caps_bidding_down"},
        {AttackId::SecurityCapsBiddingDownExtended, "security_caps_bidding_down_extended"},
        {AttackId::RadioCapsBiddingDown, "radio_caps_bidding_down"},
        {AttackId::GutiReallocDos, "guti_realloc_dos"},
        {AttackId::GutiReallocTracking, "guti_realloc_tracking"},
        {AttackId::GutiRefreshNeutralization, "guti_refresh_neutralization"},
    };
    return names;
}

}  // namespace

const char* to_string(AttackId id) { return attack_names().at(id); }

AttackId attack_from_string(const std::string& s) {
    for (const auto& [id, name] : attack_names())
        if (s == name) return id;
    std::string valid;
    for (const auto& [id, name] : attack_names()) valid += std::string(valid.empty() ? "" : ", ") + name;
    throw Error("unknown attack id '" + s + "' (valid: " + valid + ")");
}

const std::vector<AttackId>& all_attack_ids() {
    static const std::vector<AttackId> ids = {
        AttackId::ImsiCatching,
        AttackId::ImsiPagingProbe,
        AttackId::ImeiCatching,
        AttackId::TmsiLinkability,
        AttackId::CrntiTracking,
        AttackId::UeMeasurementReports,
        AttackId::SecurityCapsBiddingDown,
        AttackId::SecurityCapsBiddingDownExtended,
        AttackId::RadioCapsBiddingDown,
        AttackId::GutiReallocDos,
        AttackId::GutiReallocTracking,
        AttackId::GutiRefreshNeutralization,
    };
    return ids;
}

const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::Vulnerable: return "Vulnerable";
        case Outcome::PartiallyMitigated: return "PartiallyMitigated";
        case Outcome::Mitigated: return "Mitigated";
    }
    return "?";
}

const char* to_string(ConfidentialityProperty p) {
    switch (p) {
        case ConfidentialityProperty::IdentityPrivacy: return "identity-privacy";
        case ConfidentialityProperty::LocationPrivacy: return "location-privacy";
        case ConfidentialityProperty::Untraceability: return "untraceability";
    }
    return "?";
}

namespace {

bool exposes(const TraceEvent& ev, ExposureKind kind) {
    return std::any_of(ev.exposed.begin(), ev.exposed.end(),
                       [kind](const Exposure& e) { return e.kind == kind; });
}

template <typename T>
const T* nas_payload(const TraceEvent& ev) {
    const auto* nas = std::get_if<NasMessage>(&ev.envelope.payload);
    return nas ? std::get_if<T>(nas) : nullptr;
}

template <typename T>
const T* rrc_payload(const TraceEvent& ev) {
    const auto* rrc = std::get_if<RrcMessage>(&ev.envelope.payload);
    return rrc ? std::get_if<T>(rrc) : nullptr;
}

AttackVerdict verdict_base(AttackId id, const profiles::NetworkProfile& profile,
                           ConfidentialityProperty prop) {
    AttackVerdict v;
    v.attack = id;
    v.profile = profile.name;
    v.property_violated = prop;
    return v;
}

// Fake base station lures the victim and asks for an identity pre-security.
AttackRun catching_attack(AttackId id, IdentityKind requested,
                          const profiles::NetworkProfile& profile, const ScenarioParams& params,
                          uint64_t seed) {
    Simulation sim(profile, seed, params.ue_policy);
    AdversaryClass cls = AdversaryClass::fake_base_station();

    // The victim camps on the strongest cell and starts an attach.
    sim.ue.start_registration(RegistrationType::Initial, !profile.supports_suci);
    for (auto& env : sim.ue.step(std::nullopt)) sim.channel.transmit(Direction::UeToNet, env);

    auto request = protect(NasMessage{IdentityRequest{requested}}, Layer::Nas, Direction::NetToUe,
                           nullptr, false, false);
    if (auto delivered = inject_as_network(sim.channel, cls, std::move(request))) {
        for (auto& env : sim.ue.step(*delivered)) sim.channel.transmit(Direction::UeToNet, env);
    }

    AttackVerdict v = verdict_base(id, profile, ConfidentialityProperty::IdentityPrivacy);
    const ExposureKind want =
        requested == IdentityKind::Imei ? ExposureKind::Pei : ExposureKind::Supi;
    for (const auto& ev : sim.channel.trace()) {
        const bool from_response = nas_payload<IdentityResponse>(ev) != nullptr;
        if (from_response && exposes(ev, want)) v.evidence.push_back(ev.seq);
    }
    v.outcome = v.evidence.empty() ? Outcome::Mitigated : Outcome::Vulnerable;
    v.note = v.evidence.empty() ? "identity request answered without the permanent identifier"
                                : "permanent identifier disclosed to a fake base station";
    return {v, sim.channel.take_trace()};
}

AttackRun imsi_paging_probe(const profiles::NetworkProfile& profile, const ScenarioParams& params,
                            uint64_t seed) {
    Simulation sim(profile, seed, params.ue_policy);
    endpoints::run_registration(sim.ue, sim.net, sim.channel);
    sim.ue.go_idle();
    sim.net.session_idle();
    sim.channel.advance(30);
    endpoints::run_paging_cycle(sim.net, sim.ue, {}, sim.channel);

    AttackVerdict v = verdict_base(AttackId::ImsiPagingProbe, profile,
                                   ConfidentialityProperty::IdentityPrivacy);
    for (const auto& ev : sim.channel.trace())
        if (ev.envelope.layer == Layer::Paging && exposes(ev, ExposureKind::Supi))
            v.evidence.push_back(ev.seq);
    v.outcome = v.evidence.empty() ? Outcome::Mitigated : Outcome::Vulnerable;
    v.note = v.evidence.empty() ? "paging addressed by temporary identifier only"
                                : "permanent identifier broadcast on the paging channel";
    return {v, sim.channel.take_trace()};
}

AttackRun tmsi_linkability(const profiles::NetworkProfile& profile, const ScenarioParams& params,
                           uint64_t seed) {
    Simulation sim(profile, seed, params.ue_policy);
    endpoints::run_registration(sim.ue, sim.net, sim.channel);

    // Silent pages spaced across the observation window.
    for (int epoch = 0; epoch < params.paging_epochs; ++epoch) {
        sim.ue.go_idle();
        sim.net.session_idle();
        sim.channel.advance(params.epoch_interval_s);
        endpoints::run_paging_cycle(sim.net, sim.ue, {}, sim.channel);
    }

    AttackVerdict v =
        verdict_base(AttackId::TmsiLinkability, profile, ConfidentialityProperty::Untraceability);
    std::map<std::string, std::vector<uint64_t>> sightings;
    for (const auto& ev : sim.channel.trace()) {
        if (ev.envelope.layer != Layer::Paging) continue;
        for (const auto& e : ev.exposed)
            if (e.kind == ExposureKind::STmsi) sightings[e.text].push_back(ev.seq);
    }
    for (const auto& [text, seqs] : sightings) {
        if (seqs.size() >= 2) v.evidence.insert(v.evidence.end(), seqs.begin(), seqs.end());
    }
    std::sort(v.evidence.begin(), v.evidence.end());
    v.outcome = v.evidence.empty() ? Outcome::Mitigated : Outcome::Vulnerable;
    v.note = v.evidence.empty()
                 ? "temporary identifier changed between paging epochs"
                 : "same temporary identifier observed across paging epochs";
    return {v, sim.channel.take_trace()};
}

AttackRun rrc_ciphering_attack(AttackId id, const profiles::NetworkProfile& profile,
                               const ScenarioParams& params, uint64_t seed) {
    Simulation sim(profile, seed, params.ue_policy);
    endpoints::run_registration(sim.ue, sim.net, sim.channel);
    sim.ue.go_idle();
    sim.net.session_idle();
    sim.channel.advance(60);
    endpoints::run_paging_cycle(sim.net, sim.ue, {}, sim.channel);

    const auto prop = ConfidentialityProperty::LocationPrivacy;
    AttackVerdict v = verdict_base(id, profile, prop);
    const bool null_rrc = profile.rrc_ciphering == Nea::NEA0;
    for (const auto& ev : sim.channel.trace()) {
        if (effectively_ciphered(ev.envelope)) continue;
        if (id == AttackId::CrntiTracking) {
            if (ev.envelope.layer == Layer::Rrc && ev.envelope.crnti) v.evidence.push_back(ev.seq);
        } else {
            if (rrc_payload<MeasurementReport>(ev)) v.evidence.push_back(ev.seq);
        }
    }
    v.outcome = (null_rrc && !v.evidence.empty()) ? Outcome::Vulnerable : Outcome::Mitigated;
    if (v.outcome == Outcome::Mitigated) v.evidence.clear();
    v.note = v.outcome == Outcome::Vulnerable
                 ? "RRC traffic readable under null ciphering allows content linkage"
                 : "RRC ciphering hides message content from the observer";
    return {v, sim.channel.take_trace()};
}

AttackRun caps_bidding_down(bool extended, const profiles::NetworkProfile& profile,
                            const ScenarioParams& params, uint64_t seed) {
    Simulation sim(profile, seed, params.ue_policy);
    AdversaryClass cls = AdversaryClass::mitm();

    auto original_caps = std::make_shared<std::optional<secctx::SecurityCapabilities>>();
    Hooks hooks;
    hooks.modify = [original_caps, extended](Direction dir, SecurityEnvelope env) {
        if (dir == Direction::UeToNet) {
            if (auto* nas = std::get_if<NasMessage>(&env.payload)) {
                if (auto* req = std::get_if<RegistrationRequest>(nas)) {
                    *original_caps = req->ue_caps;
                    req->ue_caps = secctx::SecurityCapabilities::null_only();
                }
            }
        } else if (extended && *original_caps) {
            // Second tamper: make the replayed capabilities match what the UE
            // believes it sent. The MAC, when present, cannot be fixed up.
            if (auto* nas = std::get_if<NasMessage>(&env.payload)) {
                if (auto* smc = std::get_if<SecurityModeCommand>(nas))
                    smc->replayed_caps = **original_caps;
            }
        }
        return env;
    };
    interpose(sim.channel, cls, std::move(hooks));

    const AttackId id =
        extended ? AttackId::SecurityCapsBiddingDownExtended : AttackId::SecurityCapsBiddingDown;
    AttackVerdict v = verdict_base(id, profile, ConfidentialityProperty::IdentityPrivacy);

    RunOutcome outcome = endpoints::run_registration(sim.ue, sim.net, sim.channel);
    const auto& ue_state = sim.ue.state();
    const bool downgraded = outcome == RunOutcome::Connected && ue_state.ctx &&
                            ue_state.ctx->selected_nea == Nea::NEA0 &&
                            ue_state.ctx->selected_nia == Nia::NIA0;
    if (downgraded) {
        v.outcome = Outcome::Vulnerable;
        for (const auto& ev : sim.channel.trace())
            if (nas_payload<SecurityModeCommand>(ev)) v.evidence.push_back(ev.seq);
        v.note = "tampered security-mode command accepted; null algorithms in force";
    } else {
        v.outcome = Outcome::Mitigated;
        v.note = outcome == RunOutcome::SmcRejected
                     ? "UE rejected the security-mode command"
                     : "negotiation completed with the genuine capabilities";
    }
    return {v, sim.channel.take_trace()};
}

AttackRun radio_caps_bidding_down(const profiles::NetworkProfile& profile,
                                  const ScenarioParams& params, uint64_t seed) {
    Simulation sim(profile, seed, params.ue_policy);
    AdversaryClass cls = AdversaryClass::mitm();

    Hooks hooks;
    hooks.modify = [](Direction dir, SecurityEnvelope env) {
        if (dir == Direction::UeToNet) {
            if (auto* rrc = std::get_if<RrcMessage>(&env.payload)) {
                if (auto* info = std::get_if<UeCapabilityInformation>(rrc)) {
                    info->radio_caps.bands = {3};
                    info->radio_caps.generation_mask = RadioCapabilities::k2G |
                                                       RadioCapabilities::k3G |
                                                       RadioCapabilities::k4G;
                }
            }
        }
        return env;
    };
    interpose(sim.channel, cls, std::move(hooks));

    AttackVerdict v = verdict_base(AttackId::RadioCapsBiddingDown, profile,
                                   ConfidentialityProperty::IdentityPrivacy);
    try {
        endpoints::run_registration(sim.ue, sim.net, sim.channel);
        const auto& session = sim.net.session();
        const bool downgraded = session && session->radio_caps &&
                                !(*session->radio_caps == sim.ue.config().radio_caps);
        if (downgraded) {
            v.outcome = Outcome::Vulnerable;
            for (const auto& ev : sim.channel.trace())
                if (rrc_payload<UeCapabilityInformation>(ev)) v.evidence.push_back(ev.seq);
            v.note = "capabilities tampered before RRC security; downgrade accepted";
        } else {
            v.outcome = Outcome::Mitigated;
            v.note = "capabilities delivered intact over the secured channel";
        }
    } catch (const StallError&) {
        // Integrity failure on the secured capability message halts the
        // exchange instead of letting the downgrade through.
        v.outcome = Outcome::Mitigated;
        v.note = "tampering detected by RRC integrity; registration aborted";
    }
    return {v, sim.channel.take_trace()};
}

AttackRun guti_realloc_dos(const profiles::NetworkProfile& profile, const ScenarioParams& params,
                           uint64_t seed) {
    Simulation sim(profile, seed, params.ue_policy);
    AdversaryClass cls = AdversaryClass::mitm();

    Hooks hooks;
    hooks.modify = [](Direction dir, SecurityEnvelope env) {
        if (dir == Direction::NetToUe) {
            if (auto* nas = std::get_if<NasMessage>(&env.payload)) {
                if (auto* cuc = std::get_if<ConfigurationUpdateCommand>(nas); cuc && cuc->new_guti)
                    cuc->new_guti->tmsi5g ^= 0x00020008u;  // flip two bits in flight
            }
        }
        return env;
    };
    interpose(sim.channel, cls, std::move(hooks));

    endpoints::run_registration(sim.ue, sim.net, sim.channel);
    sim.ue.go_idle();
    sim.net.session_idle();
    sim.channel.advance(60);
    endpoints::run_paging_cycle(sim.net, sim.ue, {}, sim.channel);

    AttackVerdict v =
        verdict_base(AttackId::GutiReallocDos, profile, ConfidentialityProperty::Untraceability);
    std::vector<uint64_t> cuc_seqs;
    for (const auto& ev : sim.channel.trace())
        if (nas_payload<ConfigurationUpdateCommand>(ev)) cuc_seqs.push_back(ev.seq);

    if (cuc_seqs.empty()) {
        v.outcome = Outcome::Mitigated;
        v.note = "no reallocation command on the air to corrupt";
        return {v, sim.channel.take_trace()};
    }

    const std::size_t before = sim.channel.trace().size();
    const bool recognized = endpoints::run_service_attempt(sim.ue, sim.net, sim.channel);
    if (!recognized) {
        v.outcome = Outcome::Vulnerable;
        v.evidence = cuc_seqs;
        for (std::size_t i = before; i < sim.channel.trace().size(); ++i)
            if (nas_payload<ServiceRequest>(sim.channel.trace()[i]))
                v.evidence.push_back(sim.channel.trace()[i].seq);
        v.note = "UE adopted a corrupted identifier; the network no longer recognizes it";
    } else {
        v.outcome = Outcome::Mitigated;
        v.note = "corrupted command rejected; old identifier still valid";
    }
    return {v, sim.channel.take_trace()};
}

AttackRun guti_realloc_tracking(const profiles::NetworkProfile& profile,
                                const ScenarioParams& params, uint64_t seed) {
    Simulation sim(profile, seed, params.ue_policy);
    endpoints::run_registration(sim.ue, sim.net, sim.channel);
    sim.ue.go_idle();
    sim.net.session_idle();
    sim.channel.advance(60);
    endpoints::run_paging_cycle(sim.net, sim.ue, {}, sim.channel);

    AttackVerdict v = verdict_base(AttackId::GutiReallocTracking, profile,
                                   ConfidentialityProperty::LocationPrivacy);
    for (const auto& ev : sim.channel.trace())
        if (nas_payload<ConfigurationUpdateCommand>(ev) && exposes(ev, ExposureKind::Guti))
            v.evidence.push_back(ev.seq);
    v.outcome = v.evidence.empty() ? Outcome::Mitigated : Outcome::Vulnerable;
    v.note = v.evidence.empty()
                 ? "no readable identifier reallocation after the silent page"
                 : "fresh identifier readable in the unciphered update after a silent page";
    return {v, sim.channel.take_trace()};
}

AttackRun guti_refresh_neutralization(const profiles::NetworkProfile& profile,
                                      const ScenarioParams& params, uint64_t seed) {
    Simulation sim(profile, seed, params.ue_policy);
    AdversaryClass cls = AdversaryClass::mitm();

    Hooks hooks;
    hooks.drop = [](Direction dir, const SecurityEnvelope& env) {
        if (dir != Direction::NetToUe) return false;
        const auto* nas = std::get_if<NasMessage>(&env.payload);
        return nas && std::holds_alternative<ConfigurationUpdateCommand>(*nas);
    };
    interpose(sim.channel, cls, std::move(hooks));

    endpoints::run_registration(sim.ue, sim.net, sim.channel);
    sim.ue.go_idle();
    sim.net.session_idle();
    sim.channel.advance(60);
    auto outcome = endpoints::run_paging_cycle(sim.net, sim.ue, {}, sim.channel);

    AttackVerdict v = verdict_base(AttackId::GutiRefreshNeutralization, profile,
                                   ConfidentialityProperty::Untraceability);
    std::vector<uint64_t> cuc_seqs;
    bool ack_requested = false;
    for (const auto& ev : sim.channel.trace()) {
        if (const auto* cuc = nas_payload<ConfigurationUpdateCommand>(ev)) {
            cuc_seqs.push_back(ev.seq);
            ack_requested = ack_requested || cuc->ack_requested;
        }
    }

    if (cuc_seqs.empty()) {
        v.outcome = Outcome::Mitigated;
        v.note = "no reallocation command on the air to suppress";
    } else if (ack_requested && outcome.network_noticed_missing_ack) {
        v.outcome = Outcome::Mitigated;
        v.note = "missing acknowledgment detected; suppression is not silent";
    } else {
        v.outcome = Outcome::Vulnerable;
        v.evidence = cuc_seqs;
        v.note = "update suppressed without detection; identifier stays stale";
    }
    return {v, sim.channel.take_trace()};
}

}  // namespace

AttackRun run_attack(AttackId id, const profiles::NetworkProfile& profile,
                     const ScenarioParams& params, uint64_t seed) {
    switch (id) {
        case AttackId::ImsiCatching:
            return catching_attack(id, IdentityKind::Imsi, profile, params, seed);
        case AttackId::ImeiCatching:
            return catching_attack(id, IdentityKind::Imei, profile, params, seed);
        case AttackId::ImsiPagingProbe:
            return imsi_paging_probe(profile, params, seed);
        case AttackId::TmsiLinkability:
            return tmsi_linkability(profile, params, seed);
        case AttackId::CrntiTracking:
        case AttackId::UeMeasurementReports:
            return rrc_ciphering_attack(id, profile, params, seed);
        case AttackId::SecurityCapsBiddingDown:
            return caps_bidding_down(false, profile, params, seed);
        case AttackId::SecurityCapsBiddingDownExtended:
            return caps_bidding_down(true, profile, params, seed);
        case AttackId::RadioCapsBiddingDown:
            return radio_caps_bidding_down(profile, params, seed);
        case AttackId::GutiReallocDos:
            return guti_realloc_dos(profile, params, seed);
        case AttackId::GutiReallocTracking:
            return guti_realloc_tracking(profile, params, seed);
        case AttackId::GutiRefreshNeutralization:
            return guti_refresh_neutralization(profile, params, seed);
    }
    throw Error("unknown attack id");
}

}  // namespace g5::adversary
