#include "g5/conformance.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "g5/endpoints.hpp"
#include "g5/errors.hpp"
#include "g5/rng.hpp"
#include "json.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace g5::conformance {

using adversary::AttackId;
using adversary::Outcome;
using namespace proto;

const std::vector<AttackId>& table_attacks() {
    static const std::vector<AttackId> ids = {
        AttackId::ImsiCatching,          AttackId::ImsiPagingProbe,
        AttackId::ImeiCatching,          AttackId::TmsiLinkability,
        AttackId::CrntiTracking,         AttackId::UeMeasurementReports,
        AttackId::SecurityCapsBiddingDown, AttackId::RadioCapsBiddingDown,
    };
    return ids;
}

const std::vector<AttackId>& extended_attacks() { return adversary::all_attack_ids(); }

namespace {

Outcome cell_outcome(AttackId attack, const profiles::NetworkProfile& profile, uint64_t seed) {
    adversary::ScenarioParams params;
    const uint64_t cell_seed = Rng::derive(seed, adversary::to_string(attack), profile.name);
    if (attack == AttackId::SecurityCapsBiddingDown) {
        Outcome original = adversary::run_attack(attack, profile, params, cell_seed).verdict.outcome;
        if (original == Outcome::Vulnerable) return Outcome::Vulnerable;
        const uint64_t ext_seed = Rng::derive(
            seed, adversary::to_string(AttackId::SecurityCapsBiddingDownExtended), profile.name);
        Outcome extended = adversary::run_attack(AttackId::SecurityCapsBiddingDownExtended,
                                                 profile, params, ext_seed)
                               .verdict.outcome;
        return extended == Outcome::Vulnerable ? Outcome::PartiallyMitigated : Outcome::Mitigated;
    }
    return adversary::run_attack(attack, profile, params, cell_seed).verdict.outcome;
}

}  // namespace

MatrixReport conformance_matrix(const std::vector<profiles::NetworkProfile>& profiles,
                                const std::vector<adversary::AttackId>& attacks, uint64_t seed,
                                Execution exec) {
    if (profiles.empty() || attacks.empty())
        throw Error("conformance_matrix needs at least one profile and one attack");

    MatrixReport report;
    report.seed = seed;
    report.generated_at = kReproducibleTimestamp;
    for (AttackId a : attacks) report.rows.emplace_back(adversary::to_string(a));
    for (const auto& p : profiles) report.columns.push_back(p.name);
    report.cells.assign(attacks.size(), std::vector<Outcome>(profiles.size(), Outcome::Mitigated));

    const int rows = static_cast<int>(attacks.size());
    const int cols = static_cast<int>(profiles.size());
    std::string first_error;

    if (exec == Execution::Parallel) {
#ifdef _OPENMP
#pragma omp parallel for collapse(2) schedule(dynamic)
#endif
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                try {
                    report.cells[r][c] = cell_outcome(attacks[r], profiles[c], seed);
                } catch (const std::exception& e) {
#ifdef _OPENMP
#pragma omp critical
#endif
                    if (first_error.empty()) first_error = e.what();
                }
            }
        }
    } else {
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
                report.cells[r][c] = cell_outcome(attacks[r], profiles[c], seed);
    }

    if (!first_error.empty()) throw Error("matrix cell failed: " + first_error);
    return report;
}

std::string render_matrix_text(const MatrixReport& report) {
    std::size_t name_w = 0;
    for (const auto& r : report.rows) name_w = std::max(name_w, r.size());
    std::vector<std::size_t> col_w;
    for (const auto& c : report.columns)
        col_w.push_back(std::max<std::size_t>(c.size(), 18));  // widest outcome word

    std::ostringstream out;
    out << std::string(name_w, ' ');
    for (std::size_t c = 0; c < report.columns.size(); ++c) {
        out << "  " << report.columns[c]
            << std::string(col_w[c] - report.columns[c].size(), ' ');
    }
    out << '\n';
    for (std::size_t r = 0; r < report.rows.size(); ++r) {
        out << report.rows[r] << std::string(name_w - report.rows[r].size(), ' ');
        for (std::size_t c = 0; c < report.columns.size(); ++c) {
            std::string cell = adversary::to_string(report.cells[r][c]);
            out << "  " << cell << std::string(col_w[c] - cell.size(), ' ');
        }
        out << '\n';
    }
    out << "seed: " << report.seed << "  generated_at: " << report.generated_at << '\n';
    return out.str();
}

std::string matrix_to_json_text(const MatrixReport& report) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& row : report.cells) {
        nlohmann::json jr = nlohmann::json::array();
        for (Outcome o : row) jr.push_back(adversary::to_string(o));
        cells.push_back(jr);
    }
    nlohmann::json j{{"rows", report.rows},
                     {"columns", report.columns},
                     {"cells", cells},
                     {"generated_at", report.generated_at},
                     {"seed", report.seed}};
    return j.dump(2) + "\n";
}

MatrixReport combine_operator_sa(const MatrixReport& report) {
    auto rank = [](Outcome o) {
        switch (o) {
            case Outcome::Mitigated: return 0;
            case Outcome::PartiallyMitigated: return 1;
            case Outcome::Vulnerable: return 2;
        }
        return 2;
    };

    MatrixReport out;
    out.rows = report.rows;
    out.seed = report.seed;
    out.generated_at = report.generated_at;

    bool sa_emitted = false;
    std::vector<std::size_t> sa_cols, kept_cols;
    for (std::size_t c = 0; c < report.columns.size(); ++c) {
        if (report.columns[c].rfind("operator-sa-", 0) == 0) {
            sa_cols.push_back(c);
        } else {
            kept_cols.push_back(c);
        }
    }
    if (sa_cols.empty()) return report;

    for (std::size_t c = 0; c < report.columns.size(); ++c) {
        if (report.columns[c].rfind("operator-sa-", 0) == 0) {
            if (!sa_emitted) out.columns.push_back("operator-sa*");
            sa_emitted = true;
        } else {
            out.columns.push_back(report.columns[c]);
        }
    }

    out.cells.assign(report.rows.size(), {});
    for (std::size_t r = 0; r < report.rows.size(); ++r) {
        sa_emitted = false;
        for (std::size_t c = 0; c < report.columns.size(); ++c) {
            if (report.columns[c].rfind("operator-sa-", 0) == 0) {
                if (!sa_emitted) {
                    Outcome best = report.cells[r][sa_cols.front()];
                    for (std::size_t sc : sa_cols)
                        if (rank(report.cells[r][sc]) < rank(best)) best = report.cells[r][sc];
                    out.cells[r].push_back(best);
                }
                sa_emitted = true;
            } else {
                out.cells[r].push_back(report.cells[r][c]);
            }
        }
    }
    return out;
}

proto::Trace registration_scenario(const profiles::NetworkProfile& profile, uint64_t seed,
                                   int re_registrations, uint64_t gap_s) {
    endpoints::Simulation sim(profile, seed);
    endpoints::run_registration(sim.ue, sim.net, sim.channel);
    for (int i = 0; i < re_registrations; ++i) {
        sim.ue.go_idle();
        sim.net.session_idle();
        sim.channel.advance(gap_s);
        endpoints::run_registration(sim.ue, sim.net, sim.channel,
                                    proto::RegistrationType::Periodic);
    }
    return sim.channel.take_trace();
}

proto::Trace paging_scenario(const profiles::NetworkProfile& profile, uint64_t seed, int epochs,
                             uint64_t interval_s) {
    endpoints::Simulation sim(profile, seed);
    endpoints::run_registration(sim.ue, sim.net, sim.channel);
    for (int e = 0; e < epochs; ++e) {
        sim.ue.go_idle();
        sim.net.session_idle();
        sim.channel.advance(interval_s);
        endpoints::run_paging_cycle(sim.net, sim.ue, {}, sim.channel);
    }
    return sim.channel.take_trace();
}

const char* to_string(Severity s) { return s == Severity::High ? "high" : "medium"; }

const std::vector<std::string>& all_rules() {
    static const std::vector<std::string> rules = {"R1", "R2", "R3", "R4", "R5",
                                                   "R6", "R7", "R8", "R9"};
    return rules;
}

namespace {

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

bool exposes(const TraceEvent& ev, ExposureKind kind) {
    return std::any_of(ev.exposed.begin(), ev.exposed.end(),
                       [kind](const Exposure& e) { return e.kind == kind; });
}

struct RuleHit {
    Severity severity;
    std::string explanation;
};

const std::map<std::string, RuleHit>& rule_table() {
    static const std::map<std::string, RuleHit> table = {
        {"R1", {Severity::High,
                "permanent subscriber identifier readable on the air; supi-concealment (SUCI) "
                "prevents this"}},
        {"R2", {Severity::High,
                "equipment identifier sent outside an established NAS security context; "
                "pei-in-secure-channel requires it inside the secured exchange"}},
        {"R3", {Severity::High,
                "paging addressed by permanent identifier; paging-by-stmsi requires the "
                "shortened temporary identifier"}},
        {"R4", {Severity::Medium,
                "null ciphering negotiated for a protected layer; rrc-ciphering (or NAS "
                "ciphering) leaves content readable"}},
        {"R5", {Severity::High,
                "NAS security-mode command carries no MAC; smc-mac is what makes capability "
                "replay tamper-evident"}},
        {"R6", {Severity::Medium,
                "capability enquiry observed before RRC security activation; "
                "radio-caps-after-rrc-security orders it after"}},
        {"R7", {Severity::High,
                "configuration update delivered without protection; an unprotected "
                "reallocation invites corruption and tracking"}},
        {"R8", {Severity::Medium,
                "same temporary identifier paged across epochs; guti-reallocation requires a "
                "refresh after paging"}},
        {"R9", {Severity::Medium,
                "reallocated identifier values are predictable; guti-reallocation requires "
                "unpredictable values"}},
    };
    return table;
}

}  // namespace

std::vector<AuditFinding> audit_trace(const proto::Trace& trace,
                                      const std::vector<std::string>& rules) {
    for (const auto& r : rules)
        if (rule_table().find(r) == rule_table().end()) throw Error("unknown audit rule '" + r + "'");

    std::map<std::string, std::vector<uint64_t>> hits;

    bool nas_secure_seen = false;
    bool rrc_smc_complete_seen = false;
    std::map<std::string, std::vector<uint64_t>> paged;
    std::vector<std::pair<uint64_t, identity::Guti>> assigned;

    for (const auto& ev : trace) {
        if (exposes(ev, ExposureKind::Supi)) hits["R1"].push_back(ev.seq);

        const bool pei_in_identity_response = [&] {
            const auto* resp = nas_payload<IdentityResponse>(ev);
            return resp && std::holds_alternative<identity::Pei>(resp->id);
        }();
        if (exposes(ev, ExposureKind::Pei) && (!nas_secure_seen || pei_in_identity_response))
            hits["R2"].push_back(ev.seq);

        if (ev.envelope.layer == Layer::Paging) {
            if (const auto* page = rrc_payload<Paging>(ev)) {
                if (std::holds_alternative<identity::Supi>(page->id)) hits["R3"].push_back(ev.seq);
                if (const auto* stmsi = std::get_if<identity::STmsi>(&page->id))
                    paged[identity::canonical(*stmsi)].push_back(ev.seq);
            }
        }

        if (const auto* smc = nas_payload<SecurityModeCommand>(ev)) {
            if (smc->selected.nea == secctx::Nea::NEA0) hits["R4"].push_back(ev.seq);
            if (!smc->mac) hits["R5"].push_back(ev.seq);
            nas_secure_seen = true;
        }
        if (const auto* rsmc = rrc_payload<RrcSecurityModeCommand>(ev)) {
            if (rsmc->selected.nea == secctx::Nea::NEA0) hits["R4"].push_back(ev.seq);
        }
        if (rrc_payload<RrcSecurityModeComplete>(ev)) rrc_smc_complete_seen = true;
        if (rrc_payload<UeCapabilityEnquiry>(ev) && !rrc_smc_complete_seen)
            hits["R6"].push_back(ev.seq);

        if (const auto* cuc = nas_payload<ConfigurationUpdateCommand>(ev)) {
            if (!ev.envelope.integrity_protected || !effectively_ciphered(ev.envelope))
                hits["R7"].push_back(ev.seq);
            if (cuc->new_guti) assigned.emplace_back(ev.seq, *cuc->new_guti);
        }
        if (const auto* accept = nas_payload<RegistrationAccept>(ev)) {
            if (accept->guti) assigned.emplace_back(ev.seq, *accept->guti);
        }
    }

    for (const auto& [text, seqs] : paged) {
        if (seqs.size() >= 2)
            hits["R8"].insert(hits["R8"].end(), seqs.begin(), seqs.end());
    }
    if (assigned.size() >= 2) {
        std::vector<identity::Guti> history;
        for (const auto& [seq, g] : assigned) history.push_back(g);
        if (identity::unpredictability_score(history) < identity::kUnpredictabilityThreshold)
            for (const auto& [seq, g] : assigned) hits["R9"].push_back(seq);
    }

    std::vector<AuditFinding> findings;
    for (const auto& rule : rules) {
        auto it = hits.find(rule);
        if (it == hits.end() || it->second.empty()) continue;
        std::sort(it->second.begin(), it->second.end());
        it->second.erase(std::unique(it->second.begin(), it->second.end()), it->second.end());
        const RuleHit& info = rule_table().at(rule);
        findings.push_back(AuditFinding{rule, info.severity, it->second, info.explanation});
    }
    return findings;
}

namespace {

const std::map<std::string, std::string>& explain_table() {
    static const std::map<std::string, std::string> table = {
        // attacks
        {"imsi_catching",
         "A fake base station lures the UE and asks for its permanent identity; a legacy NAS "
         "answers with the plaintext IMSI. Mitigation: supi-concealment — the UE only ever "
         "reveals the concealed identifier (SUCI), so the catcher learns nothing permanent."},
        {"imsi_paging_probe",
         "The attacker triggers traffic to the victim and sniffs the paging channel for a "
         "permanent identifier. Mitigation: paging-by-stmsi — pages carry only the shortened "
         "temporary identifier (5G-S-TMSI, TS 23.003)."},
        {"imei_catching",
         "A fake base station requests the equipment identity before any security is up. "
         "Mitigation: pei-in-secure-channel — the UE sends the PEI only inside the secured "
         "security-mode exchange (TS 33.501 clause 5.2.5)."},
        {"tmsi_linkability",
         "Silent pages over days link the victim's phone number to a constant temporary "
         "identifier. Mitigation: guti-reallocation — a fresh, unpredictable 5G-GUTI after "
         "every mandated event (TS 33.501 clause 6.12.3)."},
        {"crnti_tracking",
         "The radio-layer identifier in every packet header is correlated with triggered "
         "traffic to place the victim at a cell. Mitigation: rrc-ciphering — content linkage "
         "fails when RRC payloads are ciphered (the header identifier itself is never "
         "ciphered)."},
        {"ue_measurement_reports",
         "Unciphered measurement reports reveal neighbor-cell signal strengths, enough to "
         "triangulate the UE. Mitigation: rrc-ciphering."},
        {"security_caps_bidding_down",
         "An interceptor weakens the advertised security capabilities in the registration "
         "request. Mitigation: the enhanced security-mode exchange replays the received "
         "capabilities so the UE can spot the tamper; the smc-mac makes the replay itself "
         "tamper-evident (TS 33.501 clause 6.7.2)."},
        {"security_caps_bidding_down_extended",
         "The interceptor additionally rewrites the replayed capabilities inside the "
         "security-mode command so the replay check passes. Mitigation: smc-mac — without the "
         "command's MAC the second tamper is invisible and null algorithms get negotiated; "
         "with it, verification fails and the UE rejects the command."},
        {"radio_caps_bidding_down",
         "Tampering the radio-capability report downgrades the UE to weaker generations or "
         "bands. Mitigation: radio-caps-after-rrc-security — the enquiry happens only after "
         "RRC integrity is active, so tampering is detected."},
        {"guti_realloc_dos",
         "Bit-flips in an unprotected configuration update corrupt the reallocated 5G-GUTI; "
         "the UE adopts a value the network never issued and its next service request is not "
         "recognized. Mitigation: integrity protection on the configuration update."},
        {"guti_realloc_tracking",
         "After a silent page, the reallocated 5G-GUTI is readable in the unciphered "
         "configuration update, confirming the victim's presence in the cell. Mitigation: "
         "ciphering of the configuration update."},
        {"guti_refresh_neutralization",
         "Dropping the configuration update freezes the victim's temporary identifier. "
         "Mitigation: requesting an acknowledgment — the missing completion message exposes "
         "the suppression."},
        // rules
        {"R1", "Plaintext SUPI exposure anywhere in the trace. Mechanism: supi-concealment."},
        {"R2", "PEI observed outside an established NAS security context or in an identity "
               "response. Mechanism: pei-in-secure-channel."},
        {"R3", "Paging addressed by SUPI. Mechanism: paging-by-stmsi."},
        {"R4", "Null ciphering negotiated in a NAS or RRC security-mode command. Mechanism: "
               "rrc-ciphering / NAS ciphering choice."},
        {"R5", "NAS security-mode command without a MAC. Mechanism: smc-mac."},
        {"R6", "Capability enquiry before RRC security-mode completion. Mechanism: "
               "radio-caps-after-rrc-security."},
        {"R7", "Configuration update without integrity or effective ciphering. Mechanism: "
               "configuration-update protection."},
        {"R8", "The same temporary identifier paged across two or more epochs. Mechanism: "
               "guti-reallocation."},
        {"R9", "Reallocated GUTI values below the unpredictability threshold. Mechanism: "
               "guti-reallocation (unpredictable values)."},
        // mechanisms
        {"suci",
         "SUCI (Subscription Concealed Identifier): the concealed form of the SUPI built "
         "with the home-network public key — an ephemeral key agreement, a keyed stream "
         "cipher over the MSIN and an authentication tag. Only the home network can "
         "deconceal it, so identification never reveals the permanent identity."},
        {"supi-concealment", "See 'suci': concealment of the permanent subscriber identifier."},
        {"paging-by-stmsi",
         "Paging uses the 5G-S-TMSI, the shortened form of the 5G-GUTI, never the SUPI."},
        {"pei-in-secure-channel",
         "The equipment identity (PEI) is requested inside the NAS security-mode command and "
         "returned in the completion message, after integrity is active (TS 33.501 clause "
         "5.2.5)."},
        {"guti-reallocation",
         "The core reallocates the 5G-GUTI with an unpredictable value upon registration, "
         "service request after paging and periodic registration (TS 33.501 clause 6.12.3)."},
        {"rrc-ciphering",
         "Ciphering of RRC signaling. Optional per the specifications; leaving the null "
         "algorithm selected keeps radio-layer identifiers and measurements readable."},
        {"radio-caps-after-rrc-security",
         "The network asks for radio capabilities only after the RRC security-mode exchange "
         "completes, so the report is integrity protected."},
        {"smc-mac",
         "The NAS security-mode command carries a MAC computed under the freshly derived "
         "integrity key; the UE verifies it before trusting the replayed capabilities (TS "
         "33.501 clause 6.7.2)."},
    };
    return table;
}

}  // namespace

std::string explain(const std::string& id) {
    auto it = explain_table().find(id);
    if (it == explain_table().end()) throw Error("nothing known about '" + id + "'");
    return it->second;
}

std::vector<std::string> explainable_ids() {
    std::vector<std::string> ids;
    for (const auto& [k, v] : explain_table()) ids.push_back(k);
    return ids;
}

}  // namespace g5::conformance
