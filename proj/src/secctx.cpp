#include "g5/secctx.hpp"

#include <sodium.h>

#include <cstring>

#include "g5/errors.hpp"

namespace g5::secctx {

namespace {

const char* kNeaNames[] = {"NEA0", "NEA1", "NEA2", "NEA3"};
const char* kNiaNames[] = {"NIA0", "NIA1", "NIA2", "NIA3"};

void ensure_sodium() {
    if (sodium_init() < 0) throw Error("libsodium initialization failed");
}

DerivedKey derive_key(const MasterKey& master, const char* label) {
    DerivedKey key{};
    crypto_generichash(key.data(), key.size(), reinterpret_cast<const uint8_t*>(label),
                       std::strlen(label), master.data(), master.size());
    return key;
}

struct FrameHeader {
    uint8_t alg;
    uint8_t layer;
    uint8_t dir;
    uint8_t pad = 0;
    uint32_t count;
};

const DerivedKey& int_key(const SecurityContext& ctx, Layer layer) {
    return layer == Layer::Rrc ? ctx.rrc_int_key : ctx.nas_int_key;
}

const DerivedKey& enc_key(const SecurityContext& ctx, Layer layer) {
    return layer == Layer::Rrc ? ctx.rrc_enc_key : ctx.nas_enc_key;
}

}  // namespace

const char* to_string(Nea a) { return kNeaNames[static_cast<uint8_t>(a) & 3]; }
const char* to_string(Nia a) { return kNiaNames[static_cast<uint8_t>(a) & 3]; }

Nea nea_from_string(const std::string& s) {
    for (uint8_t i = 0; i < 4; ++i)
        if (s == kNeaNames[i]) return static_cast<Nea>(i);
    throw ParseError("nea", "unknown ciphering algorithm '" + s + "'");
}

Nia nia_from_string(const std::string& s) {
    for (uint8_t i = 0; i < 4; ++i)
        if (s == kNiaNames[i]) return static_cast<Nia>(i);
    throw ParseError("nia", "unknown integrity algorithm '" + s + "'");
}

const char* to_string(Layer l) {
    switch (l) {
        case Layer::Nas: return "nas";
        case Layer::Rrc: return "rrc";
        case Layer::Paging: return "paging";
    }
    return "?";
}

const char* to_string(Direction d) { return d == Direction::UeToNet ? "ue->net" : "net->ue"; }

SecurityCapabilities SecurityCapabilities::standard() {
    SecurityCapabilities caps;
    caps.with(Nea::NEA0).with(Nea::NEA1).with(Nea::NEA2);
    caps.with(Nia::NIA0).with(Nia::NIA1).with(Nia::NIA2);
    return caps;
}

SecurityCapabilities SecurityCapabilities::null_only() {
    SecurityCapabilities caps;
    caps.with(Nea::NEA0).with(Nia::NIA0);
    return caps;
}

std::string canonical(const SecurityCapabilities& caps) {
    std::string out = "EA{";
    for (uint8_t i = 0; i < 4; ++i)
        if (caps.nea_mask & (1u << i)) out += static_cast<char>('0' + i);
    out += "}IA{";
    for (uint8_t i = 0; i < 4; ++i)
        if (caps.nia_mask & (1u << i)) out += static_cast<char>('0' + i);
    out += "}";
    return out;
}

Selection select_algorithms(const SecurityCapabilities& ue_caps, const AlgorithmPreference& net) {
    Selection sel;
    bool found = false;
    for (Nea a : net.ciphering) {
        if (ue_caps.has(a)) {
            sel.nea = a;
            found = true;
            break;
        }
    }
    if (!found) throw NegotiationError("no mutually supported ciphering algorithm");
    found = false;
    for (Nia a : net.integrity) {
        if (ue_caps.has(a)) {
            sel.nia = a;
            found = true;
            break;
        }
    }
    if (!found) throw NegotiationError("no mutually supported integrity algorithm");
    return sel;
}

uint32_t SecurityContext::consume(Layer layer, Direction dir) {
    uint32_t& c = layer == Layer::Rrc ? (dir == Direction::UeToNet ? rrc_ul_count : rrc_dl_count)
                                      : (dir == Direction::UeToNet ? ul_count : dl_count);
    return c++;
}

uint32_t SecurityContext::peek(Layer layer, Direction dir) const {
    return layer == Layer::Rrc ? (dir == Direction::UeToNet ? rrc_ul_count : rrc_dl_count)
                               : (dir == Direction::UeToNet ? ul_count : dl_count);
}

SecurityContext derive_context(const MasterKey& master, Selection selected) {
    ensure_sodium();
    SecurityContext ctx;
    ctx.master_key = master;
    ctx.nas_int_key = derive_key(master, "nas-int");
    ctx.nas_enc_key = derive_key(master, "nas-enc");
    ctx.rrc_int_key = derive_key(master, "rrc-int");
    ctx.rrc_enc_key = derive_key(master, "rrc-enc");
    ctx.selected_nea = selected.nea;
    ctx.selected_nia = selected.nia;
    ctx.rrc_nea = selected.nea;
    ctx.rrc_nia = selected.nia;
    return ctx;
}

namespace {

MacTag keyed_tag(const SecurityContext& ctx, Layer layer, Direction dir, uint32_t count,
                 std::span<const uint8_t> message) {
    ensure_sodium();
    const DerivedKey& key = int_key(ctx, layer);
    FrameHeader hdr{static_cast<uint8_t>(ctx.integrity_alg(layer)), static_cast<uint8_t>(layer),
                    static_cast<uint8_t>(dir), 0, count};
    uint8_t out[16];
    crypto_generichash_state st;
    crypto_generichash_init(&st, key.data(), key.size(), sizeof(out));
    crypto_generichash_update(&st, reinterpret_cast<const uint8_t*>(&hdr), sizeof(hdr));
    crypto_generichash_update(&st, message.data(), message.size());
    crypto_generichash_final(&st, out, sizeof(out));
    uint32_t tag = static_cast<uint32_t>(out[0]) | static_cast<uint32_t>(out[1]) << 8 |
                   static_cast<uint32_t>(out[2]) << 16 | static_cast<uint32_t>(out[3]) << 24;
    return MacTag{tag};
}

}  // namespace

MacTag compute_mac(const SecurityContext& ctx, Layer layer, Direction dir, uint32_t count,
                   std::span<const uint8_t> message) {
    if (ctx.integrity_alg(layer) == Nia::NIA0) return MacTag{0};
    return keyed_tag(ctx, layer, dir, count, message);
}

bool verify_mac(const SecurityContext& ctx, Layer layer, Direction dir, uint32_t count,
                std::span<const uint8_t> message, MacTag tag) {
    return compute_mac(ctx, layer, dir, count, message) == tag;
}

MacTag compute_activation_mac(const SecurityContext& ctx, Layer layer, Direction dir,
                              uint32_t count, std::span<const uint8_t> message) {
    return keyed_tag(ctx, layer, dir, count, message);
}

bool verify_activation_mac(const SecurityContext& ctx, Layer layer, Direction dir, uint32_t count,
                           std::span<const uint8_t> message, MacTag tag) {
    return compute_activation_mac(ctx, layer, dir, count, message) == tag;
}

namespace {

std::vector<uint8_t> keystream_xor(const SecurityContext& ctx, Layer layer, Direction dir,
                                   uint32_t count, std::span<const uint8_t> data) {
    if (ctx.cipher_alg(layer) == Nea::NEA0) return {data.begin(), data.end()};
    ensure_sodium();
    const DerivedKey& key = enc_key(ctx, layer);
    std::vector<uint8_t> out(data.size());
    uint8_t block[64];
    for (std::size_t off = 0; off < data.size(); off += sizeof(block)) {
        FrameHeader hdr{static_cast<uint8_t>(ctx.cipher_alg(layer)), static_cast<uint8_t>(layer),
                        static_cast<uint8_t>(dir), 0, count};
        uint64_t index = off / sizeof(block);
        crypto_generichash_state st;
        crypto_generichash_init(&st, key.data(), key.size(), sizeof(block));
        crypto_generichash_update(&st, reinterpret_cast<const uint8_t*>(&hdr), sizeof(hdr));
        crypto_generichash_update(&st, reinterpret_cast<const uint8_t*>(&index), sizeof(index));
        crypto_generichash_final(&st, block, sizeof(block));
        std::size_t n = std::min(sizeof(block), data.size() - off);
        for (std::size_t i = 0; i < n; ++i) out[off + i] = data[off + i] ^ block[i];
    }
    return out;
}

}  // namespace

std::vector<uint8_t> cipher(const SecurityContext& ctx, Layer layer, Direction dir, uint32_t count,
                            std::span<const uint8_t> plaintext) {
    return keystream_xor(ctx, layer, dir, count, plaintext);
}

std::vector<uint8_t> decipher(const SecurityContext& ctx, Layer layer, Direction dir,
                              uint32_t count, std::span<const uint8_t> ciphertext) {
    return keystream_xor(ctx, layer, dir, count, ciphertext);
}

}  // namespace g5::secctx
