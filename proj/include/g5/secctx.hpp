#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace g5::secctx {

enum class Nea : uint8_t { NEA0 = 0, NEA1 = 1, NEA2 = 2, NEA3 = 3 };
enum class Nia : uint8_t { NIA0 = 0, NIA1 = 1, NIA2 = 2, NIA3 = 3 };

const char* to_string(Nea a);
const char* to_string(Nia a);
Nea nea_from_string(const std::string& s);
Nia nia_from_string(const std::string& s);

enum class Layer : uint8_t { Nas = 0, Rrc = 1, Paging = 2 };
enum class Direction : uint8_t { UeToNet = 0, NetToUe = 1 };

const char* to_string(Layer l);
const char* to_string(Direction d);

/// Advertised algorithm sets, one bit per algorithm index.
struct SecurityCapabilities {
    uint8_t nea_mask = 0;
    uint8_t nia_mask = 0;

    bool has(Nea a) const { return nea_mask & (1u << static_cast<uint8_t>(a)); }
    bool has(Nia a) const { return nia_mask & (1u << static_cast<uint8_t>(a)); }
    SecurityCapabilities& with(Nea a) { nea_mask |= (1u << static_cast<uint8_t>(a)); return *this; }
    SecurityCapabilities& with(Nia a) { nia_mask |= (1u << static_cast<uint8_t>(a)); return *this; }

    /// The mandatory baseline a spec-compliant UE advertises.
    static SecurityCapabilities standard();
    /// Only the null algorithms; the target of a bidding-down tamper.
    static SecurityCapabilities null_only();

    bool operator==(const SecurityCapabilities&) const = default;
};

std::string canonical(const SecurityCapabilities& caps);

/// Network-side algorithm choice, most preferred first.
struct AlgorithmPreference {
    std::vector<Nea> ciphering;
    std::vector<Nia> integrity;
};

struct Selection {
    Nea nea = Nea::NEA0;
    Nia nia = Nia::NIA0;
    bool operator==(const Selection&) const = default;
};

/// Highest-preference mutually supported algorithm per family.
/// Throws NegotiationError when an intersection is empty.
Selection select_algorithms(const SecurityCapabilities& ue_caps, const AlgorithmPreference& net);

using MasterKey = std::array<uint8_t, 32>;
using DerivedKey = std::array<uint8_t, 16>;

struct MacTag {
    uint32_t value = 0;
    bool operator==(const MacTag&) const = default;
};

/// Per-session key material and protection counters. Keys are purpose
/// separated by derivation label. One counter pair per protocol layer; the
/// RRC algorithm pair is negotiated separately from the NAS one and defaults
/// to it until the RRC security exchange runs.
struct SecurityContext {
    MasterKey master_key{};
    DerivedKey nas_int_key{};
    DerivedKey nas_enc_key{};
    DerivedKey rrc_int_key{};
    DerivedKey rrc_enc_key{};
    Nea selected_nea = Nea::NEA0;
    Nia selected_nia = Nia::NIA0;
    Nea rrc_nea = Nea::NEA0;
    Nia rrc_nia = Nia::NIA0;
    uint32_t ul_count = 0;      // NAS uplink
    uint32_t dl_count = 0;      // NAS downlink
    uint32_t rrc_ul_count = 0;
    uint32_t rrc_dl_count = 0;

    /// Returns the current count for (layer, direction) and advances it.
    uint32_t consume(Layer layer, Direction dir);
    uint32_t peek(Layer layer, Direction dir) const;

    Nea cipher_alg(Layer layer) const { return layer == Layer::Rrc ? rrc_nea : selected_nea; }
    Nia integrity_alg(Layer layer) const { return layer == Layer::Rrc ? rrc_nia : selected_nia; }

    bool operator==(const SecurityContext&) const = default;
};

/// Deterministic derivation of the four purpose-separated keys; counters
/// start at zero.
SecurityContext derive_context(const MasterKey& master, Selection selected);

/// Keyed 32-bit tag over (layer, direction, count, message). NIA0 yields the
/// all-zero tag regardless of input.
MacTag compute_mac(const SecurityContext& ctx, Layer layer, Direction dir, uint32_t count,
                   std::span<const uint8_t> message);

bool verify_mac(const SecurityContext& ctx, Layer layer, Direction dir, uint32_t count,
                std::span<const uint8_t> message, MacTag tag);

/// Tag for a security-mode activation command itself. Always keyed under the
/// derived integrity key: a null integrity selection applies to traffic after
/// activation, not to the command activating it.
MacTag compute_activation_mac(const SecurityContext& ctx, Layer layer, Direction dir,
                              uint32_t count, std::span<const uint8_t> message);

bool verify_activation_mac(const SecurityContext& ctx, Layer layer, Direction dir, uint32_t count,
                           std::span<const uint8_t> message, MacTag tag);

/// Keystream XOR keyed by (key, layer, direction, count). NEA0 is the
/// identity transform; decipher is its own inverse.
std::vector<uint8_t> cipher(const SecurityContext& ctx, Layer layer, Direction dir, uint32_t count,
                            std::span<const uint8_t> plaintext);
std::vector<uint8_t> decipher(const SecurityContext& ctx, Layer layer, Direction dir,
                              uint32_t count, std::span<const uint8_t> ciphertext);

}  // namespace g5::secctx
