#include "g5/endpoints.hpp"

#include <sodium.h>

#include <algorithm>
#include <cstring>

#include "g5/errors.hpp"

namespace g5::endpoints {

using namespace proto;
using identity::Guti;
using identity::STmsi;
using secctx::Nea;
using secctx::Nia;
using secctx::SecurityContext;

namespace {

constexpr const char* kMcc = "001";
constexpr const char* kMnc = "01";

secctx::MasterKey hash32(const secctx::MasterKey& key, std::span<const uint8_t> data,
                         const char* label) {
    secctx::MasterKey out{};
    crypto_generichash_state st;
    crypto_generichash_init(&st, key.data(), key.size(), out.size());
    crypto_generichash_update(&st, data.data(), data.size());
    crypto_generichash_update(&st, reinterpret_cast<const uint8_t*>(label), std::strlen(label));
    crypto_generichash_final(&st, out.data(), out.size());
    return out;
}

// Opaque challenge-response: proof of knowledge of the long-term secret.
std::vector<uint8_t> auth_proof(const secctx::MasterKey& k, const std::vector<uint8_t>& nonce) {
    auto h = hash32(k, nonce, "res");
    return {h.begin(), h.begin() + 16};
}

secctx::MasterKey session_master(const secctx::MasterKey& k, const std::vector<uint8_t>& nonce) {
    return hash32(k, nonce, "kamf");
}

bool is_nas_smc(const Message& msg) {
    const auto* nas = std::get_if<NasMessage>(&msg);
    return nas && std::holds_alternative<SecurityModeCommand>(*nas);
}

bool is_rrc_smc(const Message& msg) {
    const auto* rrc = std::get_if<RrcMessage>(&msg);
    return rrc && std::holds_alternative<RrcSecurityModeCommand>(*rrc);
}

}  // namespace

const char* to_string(UePhase p) {
    switch (p) {
        case UePhase::Idle: return "idle";
        case UePhase::Registering: return "registering";
        case UePhase::Authenticated: return "authenticated";
        case UePhase::NasSecure: return "nas-secure";
        case UePhase::RrcSecure: return "rrc-secure";
        case UePhase::Connected: return "connected";
    }
    return "?";
}

const char* to_string(RunOutcome o) {
    switch (o) {
        case RunOutcome::Connected: return "connected";
        case RunOutcome::SmcRejected: return "smc-rejected";
        case RunOutcome::RegistrationRejected: return "registration-rejected";
        case RunOutcome::IdentityRefused: return "identity-refused";
    }
    return "?";
}

// --- Ue ----------------------------------------------------------------------

Ue::Ue(UeConfig cfg, uint64_t seed) : cfg_(std::move(cfg)), rng_(seed) {}

void Ue::start_registration(proto::RegistrationType type, bool legacy_nas) {
    want_register_ = true;
    pending_type_ = type;
    st_.nas_legacy = legacy_nas;
    st_.fault = UeFault::None;
}

void Ue::go_idle() {
    st_.phase = UePhase::Idle;
    want_register_ = false;
    want_service_ = false;
}

void Ue::wake_service_request() { want_service_ = true; }

identity::Suci Ue::fresh_suci() {
    return identity::conceal_supi(cfg_.supi, cfg_.hn_public_key, rng_, cfg_.suci_scheme, "0",
                                  cfg_.hn_key_id);
}

void Ue::stamp(proto::SecurityEnvelope& env) const {
    if (env.layer != Layer::Paging && st_.crnti) env.crnti = st_.crnti;
}

proto::SecurityEnvelope Ue::plain(Message msg, Layer layer) const {
    auto env = protect(std::move(msg), layer, Direction::UeToNet, nullptr, false, false);
    stamp(env);
    return env;
}

proto::SecurityEnvelope Ue::secured(Message msg, Layer layer) {
    auto env = protect(std::move(msg), layer, Direction::UeToNet, &*st_.ctx, true, true);
    stamp(env);
    return env;
}

std::vector<proto::SecurityEnvelope> Ue::step(const std::optional<proto::SecurityEnvelope>& in) {
    if (!in) {
        std::vector<proto::SecurityEnvelope> out;
        if (want_register_) {
            want_register_ = false;
            RegistrationRequest req;
            if (st_.stored_guti)
                req.id = *st_.stored_guti;
            else if (!st_.nas_legacy)
                req.id = fresh_suci();
            else
                req.id = cfg_.supi;  // legacy NAS identifies by permanent id
            req.ue_caps = cfg_.caps;
            req.reg_type = pending_type_;
            st_.sent_caps = cfg_.caps;
            st_.phase = UePhase::Registering;
            out.push_back(plain(NasMessage{req}, Layer::Nas));
        }
        if (want_service_) {
            want_service_ = false;
            if (st_.stored_guti) {
                st_.phase = UePhase::Connected;
                out.push_back(plain(NasMessage{ServiceRequest{identity::s_tmsi_of(*st_.stored_guti)}},
                                    Layer::Nas));
            }
        }
        return out;
    }
    return handle(*in);
}

std::vector<proto::SecurityEnvelope> Ue::handle(const proto::SecurityEnvelope& env) {
    // The two security-mode commands activate the context they are verified
    // with and are checked inside their handlers.
    const bool activation = is_nas_smc(env.payload) || is_rrc_smc(env.payload);
    if (!activation && (env.integrity_protected || env.ciphered)) {
        if (!st_.ctx) {
            st_.fault = UeFault::IntegrityDiscard;
            return {};
        }
        if (env.count != st_.ctx->peek(env.layer, Direction::NetToUe)) {
            st_.fault = UeFault::IntegrityDiscard;
            return {};
        }
        if (env.integrity_protected &&
            (!env.mac || !secctx::verify_mac(*st_.ctx, env.layer, Direction::NetToUe, env.count,
                                             mac_bytes(env.payload), *env.mac))) {
            st_.fault = UeFault::IntegrityDiscard;
            return {};
        }
        st_.ctx->consume(env.layer, Direction::NetToUe);
    }

    if (const auto* nas = std::get_if<NasMessage>(&env.payload)) return handle_nas(env, *nas);
    if (const auto* rrc = std::get_if<RrcMessage>(&env.payload)) return handle_rrc(env, *rrc);
    return {};
}

std::vector<proto::SecurityEnvelope> Ue::handle_nas(const proto::SecurityEnvelope& env,
                                                    const proto::NasMessage& msg) {
    std::vector<proto::SecurityEnvelope> out;

    if (const auto* req = std::get_if<IdentityRequest>(&msg)) {
        switch (req->requested) {
            case IdentityKind::Suci:
                if (!st_.nas_legacy) {
                    out.push_back(plain(NasMessage{IdentityResponse{fresh_suci()}}, Layer::Nas));
                } else if (cfg_.policy == UePolicy::Permissive) {
                    out.push_back(plain(NasMessage{IdentityResponse{cfg_.supi}}, Layer::Nas));
                } else {
                    st_.fault = UeFault::IdentityRefused;
                }
                break;
            case IdentityKind::Imsi:
                // 5G NAS has no plaintext permanent-identity response; only a
                // legacy session can be talked into one, and a strict UE
                // refuses even there.
                if (!st_.nas_legacy) {
                    out.push_back(plain(NasMessage{IdentityResponse{fresh_suci()}}, Layer::Nas));
                } else if (cfg_.policy == UePolicy::Permissive) {
                    out.push_back(plain(NasMessage{IdentityResponse{cfg_.supi}}, Layer::Nas));
                } else {
                    st_.fault = UeFault::IdentityRefused;
                }
                break;
            case IdentityKind::Imei:
                // The equipment identity never leaves the UE before NAS
                // security is up.
                if (st_.phase >= UePhase::NasSecure && st_.ctx) {
                    out.push_back(secured(NasMessage{IdentityResponse{cfg_.pei}}, Layer::Nas));
                }
                break;
        }
        return out;
    }

    if (const auto* challenge = std::get_if<AuthChallenge>(&msg)) {
        session_master_ = session_master(cfg_.k, challenge->nonce);
        have_session_master_ = true;
        st_.phase = UePhase::Authenticated;
        out.push_back(plain(NasMessage{AuthResponse{auth_proof(cfg_.k, challenge->nonce)}},
                            Layer::Nas));
        return out;
    }

    if (const auto* smc = std::get_if<SecurityModeCommand>(&msg)) {
        if (!have_session_master_) return {};
        SecurityContext candidate = secctx::derive_context(session_master_, smc->selected);
        if (env.integrity_protected && env.count != candidate.peek(Layer::Nas, Direction::NetToUe)) {
            st_.fault = UeFault::IntegrityDiscard;
            return {};
        }
        if (smc->mac) {
            if (!secctx::verify_activation_mac(candidate, Layer::Nas, Direction::NetToUe,
                                               env.count, mac_bytes(env.payload), *smc->mac)) {
                st_.fault = UeFault::SmcMacInvalid;
                return {};
            }
        } else if (cfg_.policy == UePolicy::Strict) {
            st_.fault = UeFault::SmcMacMissing;
            return {};
        }
        if (!(smc->replayed_caps == st_.sent_caps)) {
            st_.fault = UeFault::SmcReplayMismatch;
            return {};
        }
        if (env.integrity_protected) candidate.consume(Layer::Nas, Direction::NetToUe);
        st_.ctx = candidate;
        if (st_.phase < UePhase::NasSecure) st_.phase = UePhase::NasSecure;
        SecurityModeComplete complete;
        if (smc->request_pei) complete.pei = cfg_.pei;
        out.push_back(secured(NasMessage{complete}, Layer::Nas));
        return out;
    }

    if (const auto* accept = std::get_if<RegistrationAccept>(&msg)) {
        if (accept->guti) st_.stored_guti = accept->guti;
        return out;
    }

    if (const auto* update = std::get_if<ConfigurationUpdateCommand>(&msg)) {
        if (update->new_guti) st_.stored_guti = update->new_guti;
        if (update->ack_requested) {
            // The acknowledgment mirrors the command's protection: a core
            // that lost its security context sent the command bare and could
            // not verify a protected reply.
            if ((env.integrity_protected || env.ciphered) && st_.ctx)
                out.push_back(secured(NasMessage{ConfigurationUpdateComplete{}}, Layer::Nas));
            else
                out.push_back(plain(NasMessage{ConfigurationUpdateComplete{}}, Layer::Nas));
        }
        return out;
    }

    return out;
}

std::vector<proto::SecurityEnvelope> Ue::handle_rrc(const proto::SecurityEnvelope& env,
                                                    const proto::RrcMessage& msg) {
    std::vector<proto::SecurityEnvelope> out;

    if (const auto* setup = std::get_if<RrcSetup>(&msg)) {
        st_.crnti = setup->crnti;
        return out;
    }

    if (const auto* rsmc = std::get_if<RrcSecurityModeCommand>(&msg)) {
        if (!st_.ctx) return {};
        SecurityContext candidate = *st_.ctx;
        candidate.rrc_nea = rsmc->selected.nea;
        candidate.rrc_nia = rsmc->selected.nia;
        if (env.integrity_protected) {
            if (env.count != candidate.peek(Layer::Rrc, Direction::NetToUe) || !env.mac ||
                !secctx::verify_activation_mac(candidate, Layer::Rrc, Direction::NetToUe,
                                               env.count, mac_bytes(env.payload), *env.mac)) {
                st_.fault = UeFault::IntegrityDiscard;
                return {};
            }
            candidate.consume(Layer::Rrc, Direction::NetToUe);
        }
        st_.ctx = candidate;
        if (st_.phase < UePhase::RrcSecure) st_.phase = UePhase::RrcSecure;
        out.push_back(secured(RrcMessage{RrcSecurityModeComplete{}}, Layer::Rrc));
        return out;
    }

    if (std::holds_alternative<UeCapabilityEnquiry>(msg)) {
        UeCapabilityInformation info{cfg_.radio_caps};
        if (st_.phase >= UePhase::RrcSecure && st_.ctx)
            out.push_back(secured(RrcMessage{info}, Layer::Rrc));
        else
            out.push_back(plain(RrcMessage{info}, Layer::Rrc));
        return out;
    }

    if (std::holds_alternative<RrcReconfiguration>(msg)) {
        st_.phase = UePhase::Connected;
        MeasurementReport report;
        for (int i = 0; i < 2; ++i)
            report.neighbor_cells.push_back(
                NeighborMeasurement{static_cast<uint32_t>(100 + rng_.below(100)),
                                    static_cast<int32_t>(-60 - static_cast<int32_t>(rng_.below(50)))});
        if (st_.ctx)
            out.push_back(secured(RrcMessage{report}, Layer::Rrc));
        else
            out.push_back(plain(RrcMessage{report}, Layer::Rrc));
        return out;
    }

    if (const auto* page = std::get_if<Paging>(&msg)) {
        bool mine = false;
        if (const auto* stmsi = std::get_if<STmsi>(&page->id))
            mine = st_.stored_guti && identity::s_tmsi_of(*st_.stored_guti) == *stmsi;
        else if (const auto* supi = std::get_if<identity::Supi>(&page->id))
            mine = *supi == cfg_.supi;
        if (mine && st_.stored_guti) {
            st_.phase = UePhase::Connected;
            out.push_back(plain(NasMessage{ServiceRequest{identity::s_tmsi_of(*st_.stored_guti)}},
                                Layer::Nas));
        }
        return out;
    }

    return out;
}

// --- Network -------------------------------------------------------------------

Network::Network(profiles::NetworkProfile profile, uint64_t seed)
    : profile_(std::move(profile)),
      rng_(seed),
      hn_(identity::make_hn_keys(rng_)),
      registry_(kMcc, kMnc) {}

void Network::add_subscriber(const identity::Supi& supi, const secctx::MasterKey& k) {
    subscribers_[identity::canonical(supi)] = k;
}

proto::SecurityEnvelope Network::stamped(proto::SecurityEnvelope env) const {
    if (env.layer != Layer::Paging && session_) env.crnti = session_->crnti;
    return env;
}

secctx::AlgorithmPreference Network::nas_preference() const {
    secctx::AlgorithmPreference pref;
    pref.ciphering.push_back(profile_.nas_ciphering);
    for (Nea a : {Nea::NEA2, Nea::NEA1, Nea::NEA0})
        if (a != profile_.nas_ciphering) pref.ciphering.push_back(a);
    if (profile_.nas_ciphering == Nea::NEA0) pref.ciphering = {Nea::NEA0};
    pref.integrity = {Nia::NIA2, Nia::NIA1, Nia::NIA0};
    return pref;
}

secctx::AlgorithmPreference Network::rrc_preference() const {
    secctx::AlgorithmPreference pref;
    pref.ciphering.push_back(profile_.rrc_ciphering);
    for (Nea a : {Nea::NEA2, Nea::NEA1, Nea::NEA0})
        if (a != profile_.rrc_ciphering) pref.ciphering.push_back(a);
    if (profile_.rrc_ciphering == Nea::NEA0) pref.ciphering = {Nea::NEA0};
    pref.integrity = {Nia::NIA2, Nia::NIA1, Nia::NIA0};
    return pref;
}

proto::SecurityEnvelope Network::begin_session(uint64_t now_s) {
    (void)now_s;
    if (!session_) {
        Session s;
        s.crnti = identity::Crnti{static_cast<uint16_t>(1 + rng_.below(0xFFFE))};
        session_ = std::move(s);
    }
    session_->nas_secure = false;
    session_->rrc_secure = false;
    return stamped(protect(RrcMessage{RrcSetup{session_->crnti}}, Layer::Rrc, Direction::NetToUe,
                           nullptr, false, false));
}

identity::Guti Network::allocate_guti(uint64_t now_s) {
    (void)now_s;
    Guti g = profile_.guti_allocator == profiles::GutiAllocator::UniformRandom
                 ? registry_.allocate(rng_, session_->guti)
                 : registry_.allocate_near(rng_, session_->guti);
    alloc_history_.push_back(g);
    return g;
}

void Network::commit_guti(const Guti& g, uint64_t now_s) {
    if (session_->guti && session_->guti->tmsi5g != g.tmsi5g) registry_.release(*session_->guti);
    session_->guti = g;
    session_->pending_guti.reset();
    session_->awaiting_config_ack = false;
    session_->last_guti_refresh_s = now_s;
}

std::vector<proto::SecurityEnvelope> Network::step(
    const std::optional<proto::SecurityEnvelope>& in, uint64_t now_s) {
    if (!in || !session_) return {};
    const proto::SecurityEnvelope& env = *in;

    if (env.integrity_protected || env.ciphered) {
        if (!session_->ctx) {
            fault_ = NetFault::IntegrityDiscard;
            return {};
        }
        if (env.count != session_->ctx->peek(env.layer, Direction::UeToNet)) {
            fault_ = NetFault::IntegrityDiscard;
            return {};
        }
        if (env.integrity_protected &&
            (!env.mac || !secctx::verify_mac(*session_->ctx, env.layer, Direction::UeToNet,
                                             env.count, mac_bytes(env.payload), *env.mac))) {
            fault_ = NetFault::IntegrityDiscard;
            return {};
        }
        session_->ctx->consume(env.layer, Direction::UeToNet);
    }

    if (const auto* nas = std::get_if<NasMessage>(&env.payload)) return handle_nas(env, *nas, now_s);
    if (const auto* rrc = std::get_if<RrcMessage>(&env.payload)) return handle_rrc(env, *rrc, now_s);
    return {};
}

std::vector<proto::SecurityEnvelope> Network::handle_nas(const proto::SecurityEnvelope& env,
                                                         const proto::NasMessage& msg,
                                                         uint64_t now_s) {
    (void)env;
    std::vector<proto::SecurityEnvelope> out;
    Session& s = *session_;

    if (const auto* req = std::get_if<RegistrationRequest>(&msg)) {
        s.received_caps = req->ue_caps;  // stored verbatim and replayed later
        s.reg_type = req->reg_type;
        s.registration_in_progress = true;

        bool resolved = false;
        if (const auto* guti = std::get_if<Guti>(&req->id)) {
            resolved = s.guti && s.guti->tmsi5g == guti->tmsi5g && s.authenticated;
        }
        if (resolved) {
            s.nonce = rng_.bytes(16);
            out.push_back(stamped(protect(NasMessage{AuthChallenge{s.nonce}}, Layer::Nas,
                                          Direction::NetToUe, nullptr, false, false)));
        } else {
            IdentityKind kind = profile_.supports_suci ? IdentityKind::Suci : IdentityKind::Imsi;
            out.push_back(stamped(protect(NasMessage{IdentityRequest{kind}}, Layer::Nas,
                                          Direction::NetToUe, nullptr, false, false)));
        }
        return out;
    }

    if (const auto* resp = std::get_if<IdentityResponse>(&msg)) {
        identity::Supi supi;
        if (const auto* suci = std::get_if<identity::Suci>(&resp->id)) {
            if (!profile_.supports_suci) {
                fault_ = NetFault::DeconcealFailed;
                return {};
            }
            try {
                supi = identity::deconceal_suci(*suci, hn_.private_key);
            } catch (const Error&) {
                fault_ = NetFault::DeconcealFailed;
                return {};
            }
        } else if (const auto* plain_supi = std::get_if<identity::Supi>(&resp->id)) {
            supi = *plain_supi;
        } else {
            return {};
        }
        auto it = subscribers_.find(identity::canonical(supi));
        if (it == subscribers_.end()) {
            fault_ = NetFault::UnknownSubscriber;
            return {};
        }
        s.supi = supi;
        s.nonce = rng_.bytes(16);
        if (!profile_.pei_only_in_secure) {
            // Non-compliant placement: asks for the equipment identity before
            // any security is up. A 5G UE ignores it.
            out.push_back(stamped(protect(NasMessage{IdentityRequest{IdentityKind::Imei}},
                                          Layer::Nas, Direction::NetToUe, nullptr, false, false)));
        }
        out.push_back(stamped(protect(NasMessage{AuthChallenge{s.nonce}}, Layer::Nas,
                                      Direction::NetToUe, nullptr, false, false)));
        return out;
    }

    if (const auto* resp = std::get_if<AuthResponse>(&msg)) {
        auto it = subscribers_.find(identity::canonical(s.supi));
        if (it == subscribers_.end() || resp->proof != auth_proof(it->second, s.nonce)) {
            fault_ = NetFault::AuthProofMismatch;
            return {};
        }
        s.authenticated = true;
        s.master = session_master(it->second, s.nonce);
        secctx::Selection sel = secctx::select_algorithms(s.received_caps, nas_preference());
        s.ctx = secctx::derive_context(s.master, sel);
        SecurityModeCommand smc;
        smc.replayed_caps = s.received_caps;
        smc.selected = sel;
        smc.request_pei = profile_.pei_only_in_secure;
        out.push_back(stamped(protect(NasMessage{smc}, Layer::Nas, Direction::NetToUe,
                                      &*s.ctx, profile_.include_mac_in_smc, false)));
        return out;
    }

    if (std::get_if<SecurityModeComplete>(&msg)) {
        s.nas_secure = true;
        // A mid-service re-establishment ends here; only a registration
        // continues into the RRC exchange.
        if (!s.registration_in_progress) return out;
        secctx::Selection rrc_sel = secctx::select_algorithms(s.received_caps, rrc_preference());
        s.ctx->rrc_nea = rrc_sel.nea;
        s.ctx->rrc_nia = rrc_sel.nia;
        if (!profile_.radio_caps_after_rrc_security && !s.radio_caps) {
            // Legacy ordering: capabilities requested before RRC security.
            out.push_back(stamped(protect(RrcMessage{UeCapabilityEnquiry{}}, Layer::Rrc,
                                          Direction::NetToUe, nullptr, false, false)));
        }
        out.push_back(stamped(protect(RrcMessage{RrcSecurityModeCommand{rrc_sel}}, Layer::Rrc,
                                      Direction::NetToUe, &*s.ctx, true, false)));
        return out;
    }

    if (const auto* sr = std::get_if<ServiceRequest>(&msg)) {
        bool known = (s.guti && identity::s_tmsi_of(*s.guti) == sr->stmsi) ||
                     (s.pending_guti && identity::s_tmsi_of(*s.pending_guti) == sr->stmsi);
        if (!known || !s.registered) {
            fault_ = NetFault::UnknownServiceRequest;
            return {};
        }
        bool after_paging = s.awaiting_page_response;
        s.awaiting_page_response = false;
        return service_continuation(after_paging, now_s);
    }

    if (std::get_if<ConfigurationUpdateComplete>(&msg)) {
        if (s.awaiting_config_ack && s.pending_guti) commit_guti(*s.pending_guti, now_s);
        return out;
    }

    return out;
}

std::vector<proto::SecurityEnvelope> Network::handle_rrc(const proto::SecurityEnvelope& env,
                                                         const proto::RrcMessage& msg,
                                                         uint64_t now_s) {
    (void)env;
    std::vector<proto::SecurityEnvelope> out;
    Session& s = *session_;

    if (std::holds_alternative<RrcSecurityModeComplete>(msg)) {
        s.rrc_secure = true;
        if (!s.radio_caps) {
            // In the legacy ordering the enquiry already went out and the
            // answer arrives on its own; otherwise ask now, over the secured
            // channel.
            if (profile_.radio_caps_after_rrc_security)
                out.push_back(stamped(protect(RrcMessage{UeCapabilityEnquiry{}}, Layer::Rrc,
                                              Direction::NetToUe, &*s.ctx, true, true)));
            return out;
        }
        return finish_registration(now_s);
    }

    if (const auto* info = std::get_if<UeCapabilityInformation>(&msg)) {
        s.radio_caps = info->radio_caps;
        if (s.rrc_secure) return finish_registration(now_s);
        return out;
    }

    if (std::holds_alternative<MeasurementReport>(msg)) return out;

    return out;
}

std::vector<proto::SecurityEnvelope> Network::finish_registration(uint64_t now_s) {
    std::vector<proto::SecurityEnvelope> out;
    Session& s = *session_;

    identity::GutiEvent ev = identity::GutiEvent::InitialRegistration;
    if (s.reg_type == RegistrationType::Mobility) ev = identity::GutiEvent::MobilityRegistration;
    if (s.reg_type == RegistrationType::Periodic) ev = identity::GutiEvent::PeriodicRegistration;

    bool due = !s.guti || identity::guti_update_due(ev, profile_.guti_policy) ||
               identity::guti_update_due(identity::GutiEvent::TimerExpiry, profile_.guti_policy,
                                         now_s - s.last_guti_refresh_s);
    RegistrationAccept accept;
    if (due) {
        Guti g = allocate_guti(now_s);
        commit_guti(g, now_s);
        accept.guti = g;
    }
    s.registered = true;
    s.registration_in_progress = false;
    out.push_back(stamped(protect(NasMessage{accept}, Layer::Nas, Direction::NetToUe, &*s.ctx,
                                  true, true)));
    out.push_back(stamped(protect(RrcMessage{RrcReconfiguration{true}}, Layer::Rrc,
                                  Direction::NetToUe, &*s.ctx, true, true)));
    return out;
}

std::vector<proto::SecurityEnvelope> Network::service_continuation(bool after_paging,
                                                                   uint64_t now_s) {
    std::vector<proto::SecurityEnvelope> out;
    Session& s = *session_;

    bool due = identity::guti_update_due(identity::GutiEvent::TimerExpiry, profile_.guti_policy,
                                         now_s - s.last_guti_refresh_s);
    if (after_paging)
        due = due || identity::guti_update_due(identity::GutiEvent::ServiceRequestAfterPaging,
                                               profile_.guti_policy);
    if (!due) return out;

    const bool want_integrity = profile_.protect_config_update.integrity;
    const bool want_cipher = profile_.protect_config_update.cipher;

    if ((want_integrity || want_cipher) && !s.ctx) {
        // The context was lost across idle; protection requires establishing
        // it again before the command goes out.
        secctx::Selection sel = secctx::select_algorithms(s.received_caps, nas_preference());
        s.ctx = secctx::derive_context(s.master, sel);
        SecurityModeCommand smc;
        smc.replayed_caps = s.received_caps;
        smc.selected = sel;
        smc.request_pei = false;
        out.push_back(stamped(protect(NasMessage{smc}, Layer::Nas, Direction::NetToUe, &*s.ctx,
                                      profile_.include_mac_in_smc, false)));
    }

    Guti g = allocate_guti(now_s);
    ConfigurationUpdateCommand update;
    update.new_guti = g;
    update.ack_requested = profile_.config_update_ack;

    secctx::SecurityContext* ctx = s.ctx ? &*s.ctx : nullptr;
    auto env = protect(NasMessage{update}, Layer::Nas, Direction::NetToUe, ctx, want_integrity,
                       want_cipher);
    // Opting into config-update ciphering means using a real algorithm even
    // when the session default is the null cipher.
    if (want_cipher && env.cipher_alg == Nea::NEA0) {
        if (s.received_caps.has(Nea::NEA2)) env.cipher_alg = Nea::NEA2;
        else if (s.received_caps.has(Nea::NEA1)) env.cipher_alg = Nea::NEA1;
    }
    out.push_back(stamped(std::move(env)));

    if (update.ack_requested) {
        s.pending_guti = g;
        s.awaiting_config_ack = true;
    } else {
        commit_guti(g, now_s);
    }
    return out;
}

proto::SecurityEnvelope Network::page(uint64_t now_s) {
    (void)now_s;
    if (!session_ || !session_->registered || !session_->guti)
        throw Error("paging target is not registered");
    session_->awaiting_page_response = true;
    Paging page{identity::s_tmsi_of(*session_->guti)};
    return protect(RrcMessage{page}, Layer::Paging, Direction::NetToUe, nullptr, false, false);
}

void Network::session_idle() {
    if (!session_) return;
    if (!profile_.context_survives_idle) session_->ctx.reset();
}

bool Network::end_of_cycle_checks() {
    if (!session_) return false;
    if (session_->awaiting_config_ack) {
        // No acknowledgment came back: the reallocation is rolled back and
        // the incident is visible to the operator.
        if (session_->pending_guti &&
            (!session_->guti || session_->guti->tmsi5g != session_->pending_guti->tmsi5g))
            registry_.release(*session_->pending_guti);
        session_->pending_guti.reset();
        session_->awaiting_config_ack = false;
        fault_ = NetFault::MissingConfigAck;
        return true;
    }
    return false;
}

// --- Channel ---------------------------------------------------------------------

std::optional<proto::SecurityEnvelope> Channel::transmit(Direction dir,
                                                         proto::SecurityEnvelope env) {
    if (observer_) observer_(dir, env);
    if (modifier_) env = modifier_(dir, std::move(env));

    TraceEvent ev;
    ev.seq = next_seq_++;
    ev.sim_time_s = now_;
    ev.direction = dir;
    ev.envelope = env;
    ev.exposed = exposed_fields(env);
    trace_.push_back(ev);

    if (dropper_ && dropper_(dir, env)) return std::nullopt;
    return env;
}

// --- Drivers -----------------------------------------------------------------------

namespace {

struct Pump {
    Ue& ue;
    Network& net;
    Channel& ch;
    std::deque<proto::SecurityEnvelope> to_ue, to_net;

    void route(Direction dir, std::vector<proto::SecurityEnvelope> envs) {
        for (auto& e : envs) {
            if (auto delivered = ch.transmit(dir, std::move(e))) {
                (dir == Direction::UeToNet ? to_net : to_ue).push_back(std::move(*delivered));
            }
        }
    }

    void drain() {
        while (!to_ue.empty() || !to_net.empty()) {
            if (!to_ue.empty()) {
                auto env = std::move(to_ue.front());
                to_ue.pop_front();
                route(Direction::UeToNet, ue.step(env));
                continue;
            }
            auto env = std::move(to_net.front());
            to_net.pop_front();
            route(Direction::NetToUe, net.step(env, ch.now()));
        }
    }
};

}  // namespace

RunOutcome run_registration(Ue& ue, Network& net, Channel& ch, proto::RegistrationType type) {
    if (ue.state().phase != UePhase::Idle) throw Error("run_registration requires an idle UE");
    net.clear_fault();

    Pump pump{ue, net, ch, {}, {}};
    pump.route(Direction::NetToUe, {net.begin_session(ch.now())});
    ue.start_registration(type, !net.profile().supports_suci);
    pump.drain();
    pump.route(Direction::UeToNet, ue.step(std::nullopt));
    pump.drain();

    if (ue.state().phase == UePhase::Connected) return RunOutcome::Connected;
    switch (ue.state().fault) {
        case UeFault::SmcReplayMismatch:
        case UeFault::SmcMacMissing:
        case UeFault::SmcMacInvalid:
            return RunOutcome::SmcRejected;
        case UeFault::IdentityRefused:
            return RunOutcome::IdentityRefused;
        default:
            break;
    }
    if (net.fault() == NetFault::AuthProofMismatch || net.fault() == NetFault::DeconcealFailed ||
        net.fault() == NetFault::UnknownSubscriber)
        return RunOutcome::RegistrationRejected;
    throw StallError(to_string(ue.state().phase));
}

PagingOutcome run_paging_cycle(Network& net, Ue& target, const std::vector<Ue*>& others,
                               Channel& ch) {
    PagingOutcome outcome;
    net.clear_fault();
    const std::size_t first = ch.trace().size();

    Pump pump{target, net, ch, {}, {}};
    auto page = ch.transmit(Direction::NetToUe, net.page(ch.now()));
    if (page) {
        for (Ue* other : others) {
            if (other) pump.route(Direction::UeToNet, other->step(*page));
        }
        pump.route(Direction::UeToNet, target.step(*page));
    }
    pump.drain();

    for (std::size_t i = first; i < ch.trace().size(); ++i) {
        const auto& ev = ch.trace()[i];
        const auto* nas = std::get_if<NasMessage>(&ev.envelope.payload);
        if (!nas) continue;
        if (std::holds_alternative<ServiceRequest>(*nas)) outcome.target_responded = true;
        if (const auto* cuc = std::get_if<ConfigurationUpdateCommand>(nas)) {
            outcome.config_update_sent = true;
            outcome.guti_reallocated = outcome.guti_reallocated || cuc->new_guti.has_value();
        }
        if (std::holds_alternative<ConfigurationUpdateComplete>(*nas)) outcome.config_acked = true;
    }
    outcome.network_noticed_missing_ack = net.end_of_cycle_checks();
    return outcome;
}

bool run_service_attempt(Ue& ue, Network& net, Channel& ch) {
    net.clear_fault();
    Pump pump{ue, net, ch, {}, {}};
    ue.wake_service_request();
    pump.route(Direction::UeToNet, ue.step(std::nullopt));
    pump.drain();
    return net.fault() != NetFault::UnknownServiceRequest;
}

// --- Simulation fixture ---------------------------------------------------------------

namespace {

UeConfig make_ue_config(const Network& net, uint64_t seed, UePolicy policy) {
    Rng rng(seed);
    UeConfig cfg;
    cfg.supi = identity::make_supi(kMcc, kMnc, rng.digits(10));
    cfg.pei = identity::make_pei(rng.digits(8), rng.digits(6));
    auto key_bytes = rng.bytes(32);
    std::copy(key_bytes.begin(), key_bytes.end(), cfg.k.begin());
    cfg.radio_caps.bands = {41, 78};
    cfg.radio_caps.generation_mask = proto::RadioCapabilities::k2G | proto::RadioCapabilities::k3G |
                                     proto::RadioCapabilities::k4G | proto::RadioCapabilities::k5G;
    cfg.hn_public_key = net.hn_keys().public_key;
    cfg.hn_key_id = net.hn_keys().key_id;
    cfg.policy = policy;
    return cfg;
}

}  // namespace

Simulation::Simulation(const profiles::NetworkProfile& profile, uint64_t seed, UePolicy policy)
    : net(profile, Rng::derive(seed, "net")),
      ue(make_ue_config(net, Rng::derive(seed, "ue"), policy), Rng::derive(seed, "ue-rng")),
      channel() {
    net.add_subscriber(ue.config().supi, ue.config().k);
}

}  // namespace g5::endpoints
