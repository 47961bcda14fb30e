#include "g5/cli.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "g5/conformance.hpp"
#include "g5/endpoints.hpp"
#include "g5/errors.hpp"
#include "json.hpp"

namespace g5::cli {

namespace {

using adversary::AttackId;
using adversary::Outcome;

profiles::NetworkProfile resolve_profile(const std::string& spec) {
    const auto& names = profiles::preset_names();
    if (std::find(names.begin(), names.end(), spec) != names.end()) return profiles::preset(spec);
    if (spec == "hardened") return profiles::hardened();
    if (std::ifstream probe(spec); probe.good()) return profiles::load_profile(spec);
    std::string valid;
    for (const auto& n : names) valid += n + ", ";
    throw Error("unknown profile '" + spec + "' (valid: " + valid +
                "hardened, or a profile file path)");
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write file '" + path + "'");
    f << content;
}

nlohmann::json finding_json(const conformance::AuditFinding& f) {
    return nlohmann::json{{"rule", f.rule},
                          {"severity", conformance::to_string(f.severity)},
                          {"events", f.events},
                          {"explanation", f.explanation}};
}

void print_findings_text(std::ostream& out, const std::vector<conformance::AuditFinding>& fs) {
    if (fs.empty()) {
        out << "no findings\n";
        return;
    }
    for (const auto& f : fs) {
        out << f.rule << " [" << conformance::to_string(f.severity) << "] events";
        for (uint64_t seq : f.events) out << ' ' << seq;
        out << "\n    " << f.explanation << '\n';
    }
}

nlohmann::json verdict_json(const adversary::AttackVerdict& v) {
    return nlohmann::json{{"attack", adversary::to_string(v.attack)},
                          {"profile", v.profile},
                          {"outcome", adversary::to_string(v.outcome)},
                          {"property", adversary::to_string(v.property_violated)},
                          {"evidence", v.evidence},
                          {"note", v.note}};
}

struct SimulateArgs {
    std::string profile;
    std::string attack;
    uint64_t seed = kDefaultSeed;
    std::string trace_path;
    std::string format = "text";
    bool fail_on_vulnerable = false;
    bool strict_ue = false;
    int paging_epochs = 0;
};

int do_simulate(const SimulateArgs& a, std::ostream& out) {
    profiles::NetworkProfile profile = resolve_profile(a.profile);

    if (!a.attack.empty()) {
        adversary::ScenarioParams params;
        params.ue_policy =
            a.strict_ue ? endpoints::UePolicy::Strict : endpoints::UePolicy::Permissive;
        auto run = adversary::run_attack(adversary::attack_from_string(a.attack), profile, params,
                                         a.seed);
        if (!a.trace_path.empty()) write_file(a.trace_path, proto::encode_trace(run.trace));
        if (a.format == "json") {
            out << verdict_json(run.verdict).dump(2) << '\n';
        } else {
            out << "attack:   " << adversary::to_string(run.verdict.attack) << '\n'
                << "profile:  " << run.verdict.profile << '\n'
                << "outcome:  " << adversary::to_string(run.verdict.outcome) << '\n'
                << "property: " << adversary::to_string(run.verdict.property_violated) << '\n';
            out << "evidence:";
            for (uint64_t seq : run.verdict.evidence) out << ' ' << seq;
            out << '\n' << "note:     " << run.verdict.note << '\n';
        }
        if (a.fail_on_vulnerable && run.verdict.outcome == Outcome::Vulnerable) return 2;
        return 0;
    }

    // Clean run: registration scenario, optionally followed by silent-page
    // epochs, then an offline audit of the produced trace.
    endpoints::Simulation sim(profile, a.seed,
                              a.strict_ue ? endpoints::UePolicy::Strict
                                          : endpoints::UePolicy::Permissive);
    auto outcome = endpoints::run_registration(sim.ue, sim.net, sim.channel);
    for (int i = 0; i < 3 && outcome == endpoints::RunOutcome::Connected; ++i) {
        sim.ue.go_idle();
        sim.net.session_idle();
        sim.channel.advance(600);
        outcome = endpoints::run_registration(sim.ue, sim.net, sim.channel,
                                              proto::RegistrationType::Periodic);
    }
    for (int e = 0; e < a.paging_epochs && outcome == endpoints::RunOutcome::Connected; ++e) {
        sim.ue.go_idle();
        sim.net.session_idle();
        sim.channel.advance(86400);
        endpoints::run_paging_cycle(sim.net, sim.ue, {}, sim.channel);
    }
    proto::Trace trace = sim.channel.take_trace();
    if (!a.trace_path.empty()) write_file(a.trace_path, proto::encode_trace(trace));

    auto findings = conformance::audit_trace(trace);
    if (a.format == "json") {
        nlohmann::json j{{"profile", profile.name},
                         {"outcome", endpoints::to_string(outcome)},
                         {"events", trace.size()},
                         {"findings", nlohmann::json::array()}};
        for (const auto& f : findings) j["findings"].push_back(finding_json(f));
        out << j.dump(2) << '\n';
    } else {
        out << "profile: " << profile.name << '\n'
            << "outcome: " << endpoints::to_string(outcome) << '\n'
            << "events:  " << trace.size() << '\n';
        print_findings_text(out, findings);
    }
    return 0;
}

struct MatrixArgs {
    std::string profiles_csv = "operator-nsa,operator-sa-a,operator-sa-b,operator-sa-c,oai";
    std::string attacks = "table1";
    uint64_t seed = kDefaultSeed;
    std::string out_path;
    std::string format = "text";
    bool serial = false;
    bool combine_sa = false;
    std::string timestamp;
    bool fail_on_vulnerable = false;
};

int do_matrix(const MatrixArgs& a, std::ostream& out) {
    std::vector<profiles::NetworkProfile> cols;
    for (const auto& name : split_csv(a.profiles_csv)) cols.push_back(resolve_profile(name));

    std::vector<AttackId> attacks;
    if (a.attacks == "table1") {
        attacks = conformance::table_attacks();
    } else if (a.attacks == "all") {
        attacks = conformance::extended_attacks();
    } else {
        for (const auto& name : split_csv(a.attacks))
            attacks.push_back(adversary::attack_from_string(name));
    }

    auto report = conformance::conformance_matrix(
        cols, attacks, a.seed,
        a.serial ? conformance::Execution::Serial : conformance::Execution::Parallel);
    if (a.combine_sa) report = conformance::combine_operator_sa(report);
    if (!a.timestamp.empty()) report.generated_at = a.timestamp;

    if (!a.out_path.empty()) write_file(a.out_path, conformance::matrix_to_json_text(report));
    if (a.format == "json")
        out << conformance::matrix_to_json_text(report);
    else
        out << conformance::render_matrix_text(report);

    if (a.fail_on_vulnerable) {
        for (const auto& row : report.cells)
            for (Outcome o : row)
                if (o == Outcome::Vulnerable) return 2;
    }
    return 0;
}

int do_audit(const std::string& trace_path, const std::string& format, std::ostream& out) {
    std::ifstream in(trace_path, std::ios::binary);
    if (!in) throw Error("cannot open trace file '" + trace_path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    proto::Trace trace = proto::decode_trace(buf.str());
    auto findings = conformance::audit_trace(trace);
    if (format == "json") {
        nlohmann::json j{{"events", trace.size()}, {"findings", nlohmann::json::array()}};
        for (const auto& f : findings) j["findings"].push_back(finding_json(f));
        out << j.dump(2) << '\n';
    } else {
        out << "events: " << trace.size() << '\n';
        print_findings_text(out, findings);
    }
    return 0;
}

int do_list_profiles(std::ostream& out) {
    for (const auto& name : profiles::preset_names()) {
        auto p = profiles::preset(name);
        auto findings = profiles::validate(p);
        out << name << "\n"
            << "    suci=" << (p.supports_suci ? "yes" : "no")
            << " smc-mac=" << (p.include_mac_in_smc ? "yes" : "no")
            << " rrc-cipher=" << secctx::to_string(p.rrc_ciphering)
            << " paging-guti-update="
            << (p.guti_policy.on_service_request_after_paging ? "yes" : "no")
            << " config-update-protected="
            << (p.protect_config_update.integrity || p.protect_config_update.cipher ? "yes" : "no")
            << "\n    non-compliant mechanisms:";
        if (findings.empty()) out << " none";
        for (const auto& f : findings) out << ' ' << f.mechanism;
        out << '\n';
    }
    out << "hardened\n    every protection enabled (reference profile)\n";
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"g5sim - deterministic 5G control-plane privacy simulator"};
    app.require_subcommand(1);

    SimulateArgs sim_args;
    auto* sim = app.add_subcommand("simulate", "run one profile, optionally under an attack");
    sim->add_option("--profile", sim_args.profile, "preset name, 'hardened', or profile file")
        ->required();
    sim->add_option("--attack", sim_args.attack, "attack id (see 'explain')");
    sim->add_option("--seed", sim_args.seed, "simulation seed (default 12648430)");
    sim->add_option("--trace", sim_args.trace_path, "write the trace to this file");
    sim->add_option("--format", sim_args.format, "text or json")
        ->check(CLI::IsMember({"text", "json"}));
    sim->add_flag("--fail-on-vulnerable", sim_args.fail_on_vulnerable,
                  "exit 2 on a Vulnerable verdict");
    sim->add_flag("--strict-ue", sim_args.strict_ue,
                  "UE rejects a security-mode command without a MAC");
    sim->add_option("--paging-epochs", sim_args.paging_epochs,
                    "append this many silent-page days to a clean run");

    MatrixArgs mat_args;
    auto* mat = app.add_subcommand("matrix", "run the attack/profile conformance grid");
    mat->add_option("--profiles", mat_args.profiles_csv, "comma-separated profile specs");
    mat->add_option("--attacks", mat_args.attacks, "'table1', 'all', or comma-separated ids");
    mat->add_option("--seed", mat_args.seed, "simulation seed (default 12648430)");
    mat->add_option("--out", mat_args.out_path, "write the structured report to this file");
    mat->add_option("--format", mat_args.format, "text or json")
        ->check(CLI::IsMember({"text", "json"}));
    mat->add_flag("--serial", mat_args.serial, "use the serial reference instead of OpenMP");
    mat->add_flag("--combine-sa", mat_args.combine_sa,
                  "fold the operator-sa-* columns into one best-result column");
    mat->add_option("--timestamp", mat_args.timestamp,
                    "stamp the report with this string instead of the reproducible default");
    mat->add_flag("--fail-on-vulnerable", mat_args.fail_on_vulnerable,
                  "exit 2 when any cell is Vulnerable");

    std::string audit_path, audit_format = "text";
    auto* aud = app.add_subcommand("audit", "check a trace file against the audit rules");
    aud->add_option("--trace", audit_path, "trace file to audit")->required();
    aud->add_option("--format", audit_format, "text or json")
        ->check(CLI::IsMember({"text", "json"}));

    auto* lst = app.add_subcommand("list-profiles", "show the built-in deployment profiles");

    std::string explain_id;
    auto* exp = app.add_subcommand("explain", "describe an attack, audit rule, or mechanism");
    exp->add_option("id", explain_id, "attack id, rule id (R1..R9), or mechanism name")
        ->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (sim->parsed()) return do_simulate(sim_args, out);
        if (mat->parsed()) return do_matrix(mat_args, out);
        if (aud->parsed()) return do_audit(audit_path, audit_format, out);
        if (lst->parsed()) return do_list_profiles(out);
        if (exp->parsed()) {
            out << conformance::explain(explain_id) << '\n';
            return 0;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

}  // namespace g5::cli
