// Acceptance suite: one line per criterion, nonzero exit when any fails.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fuzz.hpp"
#include "g5/adversary.hpp"
#include "g5/cli.hpp"
#include "g5/conformance.hpp"
#include "g5/endpoints.hpp"
#include "g5/errors.hpp"

using namespace g5;
using adversary::AttackId;
using adversary::Outcome;

namespace {

constexpr uint64_t kSeed = 0xC0FFEE;
int failures = 0;

struct Criterion {
    explicit Criterion(std::string n) : name(std::move(n)) {}
    std::string name;
    bool ok = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail << "    failed: " << what << "\n";
        }
    }

    ~Criterion() {
        std::cout << (ok ? "PASS" : "FAIL") << "  " << name << "\n" << detail.str();
        if (!ok) ++failures;
        std::cout.flush();
    }
};

std::vector<profiles::NetworkProfile> preset_profiles() {
    std::vector<profiles::NetworkProfile> out;
    for (const auto& name : profiles::preset_names()) out.push_back(profiles::preset(name));
    return out;
}

Outcome attack_outcome(AttackId id, const profiles::NetworkProfile& p,
                       endpoints::UePolicy policy = endpoints::UePolicy::Permissive) {
    adversary::ScenarioParams params;
    params.ue_policy = policy;
    return adversary::run_attack(id, p, params, kSeed).verdict.outcome;
}

void criterion_1_table_matrix() {
    Criterion c("1. comparison-table matrix reproduction (exact, < 10 s)");

    const auto start = std::chrono::steady_clock::now();
    auto report =
        conformance::conformance_matrix(preset_profiles(), conformance::table_attacks(), kSeed);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const Outcome V = Outcome::Vulnerable, M = Outcome::Mitigated, P = Outcome::PartiallyMitigated;
    // columns: operator-nsa, operator-sa-a, operator-sa-b, operator-sa-c, oai
    const std::vector<std::vector<Outcome>> expected = {
        {V, M, M, M, M},  // imsi_catching
        {M, M, M, M, M},  // imsi_paging_probe
        {M, M, M, M, M},  // imei_catching
        {V, V, M, M, V},  // tmsi_linkability
        {V, V, V, V, V},  // crnti_tracking
        {V, V, V, V, V},  // ue_measurement_reports
        {P, P, P, P, M},  // security_caps_bidding_down
        {M, M, M, M, M},  // radio_caps_bidding_down
    };

    c.require(report.cells.size() == expected.size(), "matrix has 8 rows");
    for (std::size_t r = 0; r < expected.size() && r < report.cells.size(); ++r) {
        for (std::size_t col = 0; col < expected[r].size(); ++col) {
            if (report.cells[r][col] != expected[r][col]) {
                c.require(false, report.rows[r] + " x " + report.columns[col] + ": got " +
                                     adversary::to_string(report.cells[r][col]) + ", expected " +
                                     adversary::to_string(expected[r][col]));
            }
        }
    }
    c.require(secs < 10.0, "runtime " + std::to_string(secs) + " s under 10 s");
}

void criterion_2_new_vulnerabilities() {
    Criterion c("2. reallocation-command vulnerabilities and their fixes");

    for (const char* name : {"operator-sa-b", "operator-sa-c"}) {
        auto p = profiles::preset(name);
        c.require(attack_outcome(AttackId::GutiReallocDos, p) == Outcome::Vulnerable,
                  std::string(name) + " dos Vulnerable");
        c.require(attack_outcome(AttackId::GutiReallocTracking, p) == Outcome::Vulnerable,
                  std::string(name) + " tracking Vulnerable");

        auto fixed = p;
        fixed.protect_config_update = {true, true};
        c.require(attack_outcome(AttackId::GutiReallocDos, fixed) == Outcome::Mitigated,
                  std::string(name) + " dos Mitigated with protection");
        c.require(attack_outcome(AttackId::GutiReallocTracking, fixed) == Outcome::Mitigated,
                  std::string(name) + " tracking Mitigated with protection");
    }

    for (const auto& p : preset_profiles()) {
        if (!p.config_update_ack) continue;
        c.require(attack_outcome(AttackId::GutiRefreshNeutralization, p) == Outcome::Mitigated,
                  p.name + " neutralization Mitigated with ack requested");
    }
}

void criterion_3_extended_bidding_down() {
    Criterion c("3. extended bidding-down verdicts");

    for (const auto& p : preset_profiles()) {
        if (p.include_mac_in_smc) continue;
        c.require(attack_outcome(AttackId::SecurityCapsBiddingDownExtended, p,
                                 endpoints::UePolicy::Permissive) == Outcome::Vulnerable,
                  p.name + " Vulnerable without the mac and a permissive ue");
    }
    c.require(attack_outcome(AttackId::SecurityCapsBiddingDownExtended, profiles::preset("oai")) ==
                  Outcome::Mitigated,
              "oai Mitigated");
    c.require(attack_outcome(AttackId::SecurityCapsBiddingDownExtended, profiles::preset("oai"),
                             endpoints::UePolicy::Strict) == Outcome::Mitigated,
              "strict ue with the mac Mitigated");
}

void criterion_4_suci_properties() {
    Criterion c("4. concealment properties over 1,000 subscribers");

    Rng rng(kSeed);
    auto keys = identity::make_hn_keys(rng);
    int round_trips = 0, fresh = 0, exposures = 0, accepted_corruptions = 0;

    for (int i = 0; i < 1000; ++i) {
        identity::Supi s = identity::make_supi(rng.digits(3), rng.digits(2), rng.digits(10));
        identity::Suci a = identity::conceal_supi(s, keys.public_key, rng);
        identity::Suci b = identity::conceal_supi(s, keys.public_key, rng);

        if (identity::deconceal_suci(a, keys.private_key) == s) ++round_trips;
        if (a.scheme_output != b.scheme_output) ++fresh;
        if (identity::canonical(a).find(s.msin) != std::string::npos) ++exposures;

        for (std::size_t pos = 0; pos < a.scheme_output.size(); ++pos) {
            identity::Suci corrupted = a;
            corrupted.scheme_output[pos] ^= 0x20;
            try {
                (void)identity::deconceal_suci(corrupted, keys.private_key);
                ++accepted_corruptions;
            } catch (const Error&) {
            }
        }
    }

    c.require(round_trips == 1000, "round-trip identity 100%");
    c.require(fresh == 1000, "concealment freshness 100%");
    c.require(exposures == 0, "serialized form never contains the msin");
    c.require(accepted_corruptions == 0, "every single-byte corruption rejected");
}

void criterion_5_mac_tamper() {
    Criterion c("5. 10,000 single-bit tampers against the command mac");

    Rng rng(kSeed + 5);
    int accepted = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        secctx::MasterKey master{};
        if (trial % 100 == 0) {
            auto bytes = rng.bytes(master.size());
            std::copy(bytes.begin(), bytes.end(), master.begin());
        }
        static secctx::SecurityContext ctx;
        if (trial % 100 == 0) ctx = secctx::derive_context(master, {secctx::Nea::NEA2, secctx::Nia::NIA2});

        proto::SecurityModeCommand smc;
        smc.replayed_caps = testgen::caps(rng);
        smc.selected = testgen::selection(rng);
        smc.request_pei = rng.chance(1, 2);
        auto bytes = proto::mac_bytes(proto::Message{proto::NasMessage{smc}});
        auto tag = secctx::compute_activation_mac(ctx, secctx::Layer::Nas,
                                                  secctx::Direction::NetToUe, 0, bytes);

        std::size_t bit = rng.below(bytes.size() * 8);
        bytes[bit / 8] ^= static_cast<uint8_t>(1u << (bit % 8));
        if (secctx::verify_activation_mac(ctx, secctx::Layer::Nas, secctx::Direction::NetToUe, 0,
                                          bytes, tag))
            ++accepted;
    }
    c.require(accepted == 0, "0 tampered commands accepted, got " + std::to_string(accepted));
}

void criterion_6_guti_statistics() {
    Criterion c("6. reallocation statistics");

    Rng rng(kSeed + 6);
    auto with_tmsi = [](uint32_t t) { return identity::Guti{"001", "01", 0x11, 2, 1, t}; };

    {
        identity::GutiRegistry reg("001", "01");
        std::vector<identity::Guti> history;
        std::optional<identity::Guti> prev;
        for (int i = 0; i < 10001; ++i) {
            identity::Guti g = reg.allocate(rng, prev);
            if (prev) reg.release(*prev);
            history.push_back(g);
            prev = g;
        }
        double score = identity::unpredictability_score(history);
        c.require(std::abs(score - 0.5) <= 0.02,
                  "uniform allocator score " + std::to_string(score) + " within 0.5 +/- 0.02");
    }

    {
        std::vector<identity::Guti> constant(100, with_tmsi(0xabcd1234));
        c.require(identity::unpredictability_score(constant) == 0.0, "constant allocator scores 0");
    }

    {
        identity::GutiRegistry reg("001", "01");
        std::vector<identity::Guti> history;
        std::optional<identity::Guti> prev;
        for (int i = 0; i < 101; ++i) {
            identity::Guti g = reg.allocate_near(rng, prev);
            history.push_back(g);
            prev = g;
        }
        double score = identity::unpredictability_score(history);
        c.require(score < identity::kUnpredictabilityThreshold,
                  "near-equal allocator score " + std::to_string(score) + " below 0.3");
    }

    {
        auto findings =
            conformance::audit_trace(conformance::registration_scenario(profiles::preset("oai"), kSeed));
        bool r9 = false;
        for (const auto& f : findings) r9 = r9 || f.rule == "R9";
        c.require(r9, "oai scenario triggers audit rule R9");
    }
}

void criterion_7_ordering_and_downgrade() {
    Criterion c("7. capability ordering across 1,000 fuzzed profiles");

    Rng rng(kSeed + 7);
    int checked_order = 0, checked_attack = 0;
    for (int i = 0; i < 1000; ++i) {
        profiles::NetworkProfile p;
        p.name = "fuzz-" + std::to_string(i);
        p.supports_suci = rng.chance(3, 4);
        p.guti_policy.on_initial_registration = rng.chance(1, 2);
        p.guti_policy.on_mobility_registration = rng.chance(1, 2);
        p.guti_policy.on_service_request_after_paging = rng.chance(1, 2);
        p.guti_policy.on_periodic_registration = rng.chance(1, 2);
        if (rng.chance(1, 2)) p.guti_policy.periodic_refresh_interval_s = 600 + rng.below(7200);
        p.guti_allocator = rng.chance(1, 2) ? profiles::GutiAllocator::UniformRandom
                                            : profiles::GutiAllocator::StickyOrNearEqual;
        p.nas_ciphering = static_cast<secctx::Nea>(rng.below(3));
        p.rrc_ciphering = static_cast<secctx::Nea>(rng.below(3));
        p.include_mac_in_smc = rng.chance(1, 2);
        p.protect_config_update = {rng.chance(1, 2), rng.chance(1, 2)};
        p.config_update_ack = rng.chance(1, 2);
        p.pei_only_in_secure = rng.chance(3, 4);
        p.radio_caps_after_rrc_security = rng.chance(1, 2);
        p.context_survives_idle = rng.chance(1, 2);

        if (p.radio_caps_after_rrc_security) {
            endpoints::Simulation sim(p, rng.next_u64());
            auto outcome = endpoints::run_registration(sim.ue, sim.net, sim.channel);
            if (outcome != endpoints::RunOutcome::Connected) {
                c.require(false, p.name + " did not complete registration");
                continue;
            }
            bool complete_seen = false;
            for (const auto& ev : sim.channel.trace()) {
                const auto* rrc = std::get_if<proto::RrcMessage>(&ev.envelope.payload);
                if (!rrc) continue;
                if (std::holds_alternative<proto::RrcSecurityModeComplete>(*rrc))
                    complete_seen = true;
                if (std::holds_alternative<proto::UeCapabilityEnquiry>(*rrc) && !complete_seen)
                    c.require(false, p.name + " enquiry before rrc security completion");
            }
            ++checked_order;
        } else {
            if (attack_outcome(AttackId::RadioCapsBiddingDown, p) != Outcome::Vulnerable)
                c.require(false, p.name + " pre-security capabilities not judged Vulnerable");
            ++checked_attack;
        }
    }
    c.require(checked_order > 0 && checked_attack > 0, "both branches exercised");
}

void criterion_8_determinism() {
    Criterion c("8. determinism and trace codec");

    auto run_cli = [](const std::vector<std::string>& args, std::string& out) {
        std::ostringstream o, e;
        int code = cli::run(args, o, e);
        out = o.str();
        return code;
    };

    std::string out_a, out_b;
    const char* trace_a = "acc_trace_a.jsonl";
    const char* trace_b = "acc_trace_b.jsonl";
    run_cli({"simulate", "--profile", "operator-sa-b", "--trace", trace_a, "--paging-epochs", "2"},
            out_a);
    run_cli({"simulate", "--profile", "operator-sa-b", "--trace", trace_b, "--paging-epochs", "2"},
            out_b);
    auto slurp = [](const char* path) {
        std::ifstream f(path, std::ios::binary);
        std::ostringstream buf;
        buf << f.rdbuf();
        return buf.str();
    };
    c.require(out_a == out_b, "simulate stdout byte-identical");
    c.require(!slurp(trace_a).empty() && slurp(trace_a) == slurp(trace_b),
              "trace files byte-identical");
    std::remove(trace_a);
    std::remove(trace_b);

    std::string m1, m2;
    run_cli({"matrix", "--attacks", "all"}, m1);
    run_cli({"matrix", "--attacks", "all"}, m2);
    c.require(m1 == m2, "matrix output byte-identical");

    std::string serial;
    run_cli({"matrix", "--attacks", "all", "--serial"}, serial);
    c.require(m1 == serial, "parallel matrix equals the serial reference");

    Rng rng(kSeed + 8);
    int mismatches = 0;
    for (int i = 0; i < 1000; ++i) {
        proto::Trace t = testgen::trace(rng);
        if (proto::decode_trace(proto::encode_trace(t)) != t) ++mismatches;
    }
    c.require(mismatches == 0, "1,000 fuzzed traces round-trip losslessly");
}

}  // namespace

int main() {
    criterion_1_table_matrix();
    criterion_2_new_vulnerabilities();
    criterion_3_extended_bidding_down();
    criterion_4_suci_properties();
    criterion_5_mac_tamper();
    criterion_6_guti_statistics();
    criterion_7_ordering_and_downgrade();
    criterion_8_determinism();

    if (failures == 0)
        std::cout << "all acceptance criteria passed\n";
    else
        std::cout << failures << " acceptance criteria failed\n";
    return failures == 0 ? 0 : 1;
}
