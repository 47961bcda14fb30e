#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "g5/adversary.hpp"
#include "g5/profiles.hpp"
#include "g5/proto.hpp"

namespace g5::conformance {

/// The eight-attack grid matching the published comparison table.
const std::vector<adversary::AttackId>& table_attacks();

/// All twelve procedures, including the reallocation-command family and the
/// extended bidding-down variant.
const std::vector<adversary::AttackId>& extended_attacks();

struct MatrixReport {
    std::vector<std::string> rows;     // attack ids
    std::vector<std::string> columns;  // profile names
    std::vector<std::vector<adversary::Outcome>> cells;  // [row][column]
    std::string generated_at;
    uint64_t seed = 0;
    bool operator==(const MatrixReport&) const = default;
};

enum class Execution : uint8_t { Serial, Parallel };

/// Fixed default so identical invocations give byte-identical reports; callers
/// wanting wall-clock stamps set MatrixReport::generated_at themselves.
inline constexpr const char* kReproducibleTimestamp = "1970-01-01T00:00:00Z";

/// Runs every (attack, profile) pair. Each cell draws from its own derived
/// seed, so the parallel path returns exactly what the serial reference does.
/// The bidding-down row combines the original and extended variants: original
/// success is Vulnerable, extended-only success is PartiallyMitigated.
MatrixReport conformance_matrix(const std::vector<profiles::NetworkProfile>& profiles,
                                const std::vector<adversary::AttackId>& attacks, uint64_t seed,
                                Execution exec = Execution::Parallel);

std::string render_matrix_text(const MatrixReport& report);
std::string matrix_to_json_text(const MatrixReport& report);

/// Folds the operator-sa-* columns into a single "operator-sa*" column
/// holding the best result achieved among them, the way the published
/// comparison reports the three SA networks.
MatrixReport combine_operator_sa(const MatrixReport& report);

/// Standard audit scenario: initial attach plus periodic re-registrations,
/// enough reallocation history for the unpredictability rule to apply.
proto::Trace registration_scenario(const profiles::NetworkProfile& profile, uint64_t seed,
                                   int re_registrations = 3, uint64_t gap_s = 600);

/// Paging-heavy scenario: one registration then silent-page epochs.
proto::Trace paging_scenario(const profiles::NetworkProfile& profile, uint64_t seed,
                             int epochs = 3, uint64_t interval_s = 86400);

enum class Severity : uint8_t { Medium, High };
const char* to_string(Severity s);

struct AuditFinding {
    std::string rule;      // "R1" .. "R9"
    Severity severity = Severity::Medium;
    std::vector<uint64_t> events;  // trace seq refs, at least one
    std::string explanation;       // names the protection mechanism violated
};

const std::vector<std::string>& all_rules();

/// Offline trace checks:
///   R1 plaintext SUPI exposure          R6 capability enquiry before RRC security
///   R2 PEI outside the secure channel   R7 unprotected configuration update
///   R3 paging by SUPI                   R8 GUTI unchanged across paging epochs
///   R4 null cipher negotiated           R9 GUTI unpredictability below threshold
///   R5 security-mode command without MAC
/// Throws Error on an unknown rule id.
std::vector<AuditFinding> audit_trace(const proto::Trace& trace,
                                      const std::vector<std::string>& rules = all_rules());

/// Human text for an attack id, an audit rule id, or a mechanism name
/// ("suci", "smc-mac", ...). Throws Error on unknown ids.
std::string explain(const std::string& id);

/// Every id explain() accepts.
std::vector<std::string> explainable_ids();

}  // namespace g5::conformance
