#pragma once

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "g5/profiles.hpp"
#include "g5/proto.hpp"
#include "g5/rng.hpp"

namespace g5::endpoints {

using proto::Direction;
using proto::Layer;

enum class UePhase : uint8_t { Idle, Registering, Authenticated, NasSecure, RrcSecure, Connected };
const char* to_string(UePhase p);

enum class UePolicy : uint8_t { Permissive, Strict };

enum class UeFault : uint8_t {
    None,
    SmcReplayMismatch,
    SmcMacMissing,
    SmcMacInvalid,
    IdentityRefused,
    IntegrityDiscard,
};

struct UeConfig {
    identity::Supi supi;
    identity::Pei pei;
    secctx::MasterKey k{};  // long-term secret shared with the core
    secctx::SecurityCapabilities caps = secctx::SecurityCapabilities::standard();
    proto::RadioCapabilities radio_caps;
    std::vector<uint8_t> hn_public_key;
    uint8_t hn_key_id = 1;
    identity::SuciScheme suci_scheme = identity::SuciScheme::SimEcies;
    UePolicy policy = UePolicy::Permissive;
};

struct UeState {
    UePhase phase = UePhase::Idle;
    std::optional<identity::Guti> stored_guti;
    std::optional<identity::Crnti> crnti;
    secctx::SecurityCapabilities sent_caps;
    std::optional<secctx::SecurityContext> ctx;
    bool nas_legacy = false;  // pre-5G NAS: plaintext IMSI identification
    UeFault fault = UeFault::None;
};

/// The subscriber side of the exchange. Drives one registration at a time;
/// state persists across registrations within a simulation.
class Ue {
public:
    Ue(UeConfig cfg, uint64_t seed);

    /// Prime an attach. The next step(nullopt) emits the RegistrationRequest
    /// carrying the stored GUTI if one exists, a fresh SUCI otherwise, or the
    /// plaintext SUPI when the serving network only speaks legacy NAS.
    void start_registration(proto::RegistrationType type, bool legacy_nas);

    void go_idle();

    /// Prime a subscriber-originated service request using the stored GUTI.
    void wake_service_request();

    std::vector<proto::SecurityEnvelope> step(const std::optional<proto::SecurityEnvelope>& in);

    const UeState& state() const { return st_; }
    const UeConfig& config() const { return cfg_; }
    void set_policy(UePolicy p) { cfg_.policy = p; }

private:
    std::vector<proto::SecurityEnvelope> handle(const proto::SecurityEnvelope& env);
    std::vector<proto::SecurityEnvelope> handle_nas(const proto::SecurityEnvelope& env,
                                                    const proto::NasMessage& msg);
    std::vector<proto::SecurityEnvelope> handle_rrc(const proto::SecurityEnvelope& env,
                                                    const proto::RrcMessage& msg);
    identity::Suci fresh_suci();
    proto::SecurityEnvelope plain(proto::Message msg, Layer layer) const;
    proto::SecurityEnvelope secured(proto::Message msg, Layer layer);
    void stamp(proto::SecurityEnvelope& env) const;

    UeConfig cfg_;
    UeState st_;
    Rng rng_;
    secctx::MasterKey session_master_{};
    bool have_session_master_ = false;
    bool want_register_ = false;
    bool want_service_ = false;
    proto::RegistrationType pending_type_ = proto::RegistrationType::Initial;
};

enum class NetFault : uint8_t {
    None,
    DeconcealFailed,
    UnknownSubscriber,
    AuthProofMismatch,
    UnknownServiceRequest,
    MissingConfigAck,
    IntegrityDiscard,
};

/// Per-UE connection record on the network side. A reallocated GUTI stays
/// pending until the configuration-update acknowledgment arrives (when one
/// was requested), so an unconfirmed UE keeps its old binding.
struct Session {
    identity::Supi supi;
    identity::Crnti crnti;
    secctx::MasterKey master{};
    bool authenticated = false;
    std::optional<secctx::SecurityContext> ctx;
    secctx::SecurityCapabilities received_caps;
    std::optional<proto::RadioCapabilities> radio_caps;
    std::optional<identity::Guti> guti;
    std::optional<identity::Guti> pending_guti;
    uint64_t last_guti_refresh_s = 0;
    std::vector<uint8_t> nonce;
    proto::RegistrationType reg_type = proto::RegistrationType::Initial;
    bool registration_in_progress = false;
    bool nas_secure = false;
    bool rrc_secure = false;
    bool registered = false;
    bool awaiting_page_response = false;
    bool awaiting_config_ack = false;
};

/// Combined gNB + core endpoint, driven by the deployment profile flags.
class Network {
public:
    Network(profiles::NetworkProfile profile, uint64_t seed);

    void add_subscriber(const identity::Supi& supi, const secctx::MasterKey& k);
    const identity::HnKeyPair& hn_keys() const { return hn_; }

    /// Opens (or resumes) the radio session and assigns the C-RNTI.
    proto::SecurityEnvelope begin_session(uint64_t now_s);

    std::vector<proto::SecurityEnvelope> step(const std::optional<proto::SecurityEnvelope>& in,
                                              uint64_t now_s);

    /// Pages the registered UE by the shortened temporary identifier.
    proto::SecurityEnvelope page(uint64_t now_s);

    /// Radio session released; the security context survives only when the
    /// profile says so.
    void session_idle();

    /// Post-cycle bookkeeping: a reallocation that was never acknowledged is
    /// detected here and rolled back to the old binding. Returns true when
    /// something was detected.
    bool end_of_cycle_checks();

    const profiles::NetworkProfile& profile() const { return profile_; }
    const std::optional<Session>& session() const { return session_; }
    const std::vector<identity::Guti>& allocation_history() const { return alloc_history_; }
    NetFault fault() const { return fault_; }
    void clear_fault() { fault_ = NetFault::None; }

private:
    std::vector<proto::SecurityEnvelope> handle_nas(const proto::SecurityEnvelope& env,
                                                    const proto::NasMessage& msg, uint64_t now_s);
    std::vector<proto::SecurityEnvelope> handle_rrc(const proto::SecurityEnvelope& env,
                                                    const proto::RrcMessage& msg, uint64_t now_s);
    std::vector<proto::SecurityEnvelope> finish_registration(uint64_t now_s);
    std::vector<proto::SecurityEnvelope> service_continuation(bool after_paging, uint64_t now_s);
    identity::Guti allocate_guti(uint64_t now_s);
    void commit_guti(const identity::Guti& g, uint64_t now_s);
    secctx::AlgorithmPreference nas_preference() const;
    secctx::AlgorithmPreference rrc_preference() const;
    proto::SecurityEnvelope stamped(proto::SecurityEnvelope env) const;

    profiles::NetworkProfile profile_;
    Rng rng_;
    identity::HnKeyPair hn_;
    identity::GutiRegistry registry_;
    std::map<std::string, secctx::MasterKey> subscribers_;  // canonical SUPI -> key
    std::optional<Session> session_;
    std::vector<identity::Guti> alloc_history_;
    NetFault fault_ = NetFault::None;
};

/// The radio medium. Every transmitted envelope passes through the adversary
/// hooks in transmission order and is recorded in the trace with its exposure
/// set; a dropped envelope is still on the air (and in the trace) but never
/// reaches the receiver.
class Channel {
public:
    using Observer = std::function<void(Direction, const proto::SecurityEnvelope&)>;
    using Modifier = std::function<proto::SecurityEnvelope(Direction, proto::SecurityEnvelope)>;
    using Dropper = std::function<bool(Direction, const proto::SecurityEnvelope&)>;

    explicit Channel(uint64_t start_time_s = 0) : now_(start_time_s) {}

    void advance(uint64_t seconds) { now_ += seconds; }
    uint64_t now() const { return now_; }

    std::optional<proto::SecurityEnvelope> transmit(Direction dir, proto::SecurityEnvelope env);

    const proto::Trace& trace() const { return trace_; }
    proto::Trace take_trace() { return std::move(trace_); }

    // Installed through adversary::interpose, which checks the declared
    // capability set first.
    void set_observer(Observer f) { observer_ = std::move(f); }
    void set_modifier(Modifier f) { modifier_ = std::move(f); }
    void set_dropper(Dropper f) { dropper_ = std::move(f); }

private:
    uint64_t now_ = 0;
    uint64_t next_seq_ = 1;
    proto::Trace trace_;
    Observer observer_;
    Modifier modifier_;
    Dropper dropper_;
};

enum class RunOutcome : uint8_t { Connected, SmcRejected, RegistrationRejected, IdentityRefused };
const char* to_string(RunOutcome o);

/// Drives one full registration. Throws StallError naming the last UE phase
/// when neither endpoint can make progress.
RunOutcome run_registration(Ue& ue, Network& net, Channel& ch,
                            proto::RegistrationType type = proto::RegistrationType::Initial);

struct PagingOutcome {
    bool target_responded = false;
    bool config_update_sent = false;
    bool guti_reallocated = false;
    bool config_acked = false;
    bool network_noticed_missing_ack = false;
};

/// Pages the target; non-matching UEs observe the paging channel and stay
/// silent. Throws Error when the target is not registered.
PagingOutcome run_paging_cycle(Network& net, Ue& target, const std::vector<Ue*>& others,
                               Channel& ch);

/// Subscriber-originated service attempt; true when the network recognized
/// the presented temporary identifier.
bool run_service_attempt(Ue& ue, Network& net, Channel& ch);

/// Deterministic single-UE fixture: subscriber, network and channel wired
/// from one seed.
class Simulation {
public:
    Simulation(const profiles::NetworkProfile& profile, uint64_t seed,
               UePolicy policy = UePolicy::Permissive);

    Network net;
    Ue ue;
    Channel channel;
};

}  // namespace g5::endpoints
