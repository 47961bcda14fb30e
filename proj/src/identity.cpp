#include "g5/identity.hpp"

#include <sodium.h>

#include <algorithm>
#include <array>
#include <bit>
#include <stdexcept>

#include "g5/errors.hpp"
#include "g5/hex.hpp"

namespace g5::identity {

namespace {

constexpr std::size_t kCurveKeyBytes = 32;   // X25519 point / scalar
constexpr std::size_t kBoxKeyBytes = 32;     // secretbox key
constexpr std::size_t kTagBytes = 16;        // poly1305 tag

bool all_digits(const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

void require_digits(const std::string& s, std::size_t lo, std::size_t hi, const char* field) {
    if (!all_digits(s) || s.size() < lo || s.size() > hi)
        throw std::invalid_argument(std::string(field) + " must be " + std::to_string(lo) +
                                    (lo == hi ? "" : "-" + std::to_string(hi)) + " decimal digits");
}

void ensure_sodium() {
    if (sodium_init() < 0) throw Error("libsodium initialization failed");
}

// Per-concealment symmetric key: hash of the shared point, the ephemeral
// public value and the home-network public key. A fresh ephemeral means a
// fresh key, so a fixed secretbox nonce is safe.
std::array<uint8_t, kBoxKeyBytes> concealment_key(const uint8_t* shared, const uint8_t* epk,
                                                  const uint8_t* hnpk) {
    std::array<uint8_t, kBoxKeyBytes> key{};
    crypto_generichash_state st;
    crypto_generichash_init(&st, nullptr, 0, key.size());
    crypto_generichash_update(&st, shared, kCurveKeyBytes);
    crypto_generichash_update(&st, epk, kCurveKeyBytes);
    crypto_generichash_update(&st, hnpk, kCurveKeyBytes);
    crypto_generichash_final(&st, key.data(), key.size());
    return key;
}

int luhn_check_digit(const std::string& payload14) {
    int sum = 0;
    // Doubling applies to every second digit, starting with the second.
    for (std::size_t i = 0; i < payload14.size(); ++i) {
        int d = payload14[i] - '0';
        if (i % 2 == 1) {
            d *= 2;
            if (d > 9) d -= 9;
        }
        sum += d;
    }
    return (10 - sum % 10) % 10;
}

}  // namespace

Supi make_supi(std::string mcc, std::string mnc, std::string msin) {
    require_digits(mcc, 3, 3, "mcc");
    require_digits(mnc, 2, 3, "mnc");
    require_digits(msin, 9, 10, "msin");
    return Supi{std::move(mcc), std::move(mnc), std::move(msin)};
}

bool valid(const Supi& s) {
    return all_digits(s.mcc) && s.mcc.size() == 3 && all_digits(s.mnc) &&
           (s.mnc.size() == 2 || s.mnc.size() == 3) && all_digits(s.msin) &&
           (s.msin.size() == 9 || s.msin.size() == 10);
}

std::string canonical(const Supi& s) { return "imsi-" + s.mcc + s.mnc + s.msin; }

const char* to_string(SuciScheme s) {
    return s == SuciScheme::Null ? "null" : "sim-ecies";
}

SuciScheme suci_scheme_from_string(const std::string& s) {
    if (s == "null") return SuciScheme::Null;
    if (s == "sim-ecies") return SuciScheme::SimEcies;
    throw ParseError("scheme", "unknown SUCI scheme '" + s + "'");
}

std::string canonical(const Suci& s) {
    std::string out = "suci-" + s.mcc + "-" + s.mnc + "-" + s.routing_indicator + "-" +
                      to_string(s.scheme_id) + "-" + std::to_string(s.hn_key_id) + "-";
    if (s.scheme_id == SuciScheme::Null)
        out.append(s.scheme_output.begin(), s.scheme_output.end());
    else
        out += to_hex(s.scheme_output);
    return out;
}

HnKeyPair make_hn_keys(Rng& rng, uint8_t key_id) {
    ensure_sodium();
    HnKeyPair kp;
    kp.key_id = key_id;
    kp.private_key = rng.bytes(kCurveKeyBytes);
    kp.public_key.resize(kCurveKeyBytes);
    crypto_scalarmult_base(kp.public_key.data(), kp.private_key.data());
    return kp;
}

Suci conceal_supi(const Supi& supi, const std::vector<uint8_t>& hn_public_key, Rng& rng,
                  SuciScheme scheme, const std::string& routing_indicator, uint8_t hn_key_id) {
    if (!valid(supi)) throw std::invalid_argument("malformed SUPI");
    require_digits(routing_indicator, 1, 4, "routing_indicator");

    Suci suci;
    suci.mcc = supi.mcc;
    suci.mnc = supi.mnc;
    suci.routing_indicator = routing_indicator;
    suci.scheme_id = scheme;
    suci.hn_key_id = hn_key_id;

    if (scheme == SuciScheme::Null) {
        suci.scheme_output.assign(supi.msin.begin(), supi.msin.end());
        return suci;
    }

    ensure_sodium();
    if (hn_public_key.size() != kCurveKeyBytes)
        throw ConcealmentError("home-network public key must be 32 bytes");

    std::vector<uint8_t> esk = rng.bytes(kCurveKeyBytes);
    std::array<uint8_t, kCurveKeyBytes> epk{};
    crypto_scalarmult_base(epk.data(), esk.data());

    std::array<uint8_t, kCurveKeyBytes> shared{};
    if (crypto_scalarmult(shared.data(), esk.data(), hn_public_key.data()) != 0)
        throw ConcealmentError("home-network public key rejected by key agreement");

    auto key = concealment_key(shared.data(), epk.data(), hn_public_key.data());
    std::array<uint8_t, crypto_secretbox_NONCEBYTES> nonce{};  // fresh key per ephemeral

    std::vector<uint8_t> ct(supi.msin.size() + kTagBytes);
    crypto_secretbox_easy(ct.data(), reinterpret_cast<const uint8_t*>(supi.msin.data()),
                          supi.msin.size(), nonce.data(), key.data());

    suci.scheme_output.assign(epk.begin(), epk.end());
    suci.scheme_output.insert(suci.scheme_output.end(), ct.begin(), ct.end());
    return suci;
}

Supi deconceal_suci(const Suci& suci, const std::vector<uint8_t>& hn_private_key) {
    if (suci.scheme_id == SuciScheme::Null) {
        std::string msin(suci.scheme_output.begin(), suci.scheme_output.end());
        if (!all_digits(msin) || msin.size() < 9 || msin.size() > 10)
            throw IntegrityError("null-scheme SUCI carries a malformed msin");
        return Supi{suci.mcc, suci.mnc, msin};
    }

    ensure_sodium();
    if (hn_private_key.size() != kCurveKeyBytes)
        throw ConcealmentError("home-network private key must be 32 bytes");
    if (suci.scheme_output.size() < kCurveKeyBytes + kTagBytes + 9)
        throw IntegrityError("scheme output truncated");

    const uint8_t* epk = suci.scheme_output.data();
    const uint8_t* ct = epk + kCurveKeyBytes;
    const std::size_t ct_len = suci.scheme_output.size() - kCurveKeyBytes;

    std::array<uint8_t, kCurveKeyBytes> hnpk{};
    crypto_scalarmult_base(hnpk.data(), hn_private_key.data());

    std::array<uint8_t, kCurveKeyBytes> shared{};
    if (crypto_scalarmult(shared.data(), hn_private_key.data(), epk) != 0)
        throw IntegrityError("ephemeral public value rejected by key agreement");

    auto key = concealment_key(shared.data(), epk, hnpk.data());
    std::array<uint8_t, crypto_secretbox_NONCEBYTES> nonce{};

    std::vector<uint8_t> msin_bytes(ct_len - kTagBytes);
    if (crypto_secretbox_open_easy(msin_bytes.data(), ct, ct_len, nonce.data(), key.data()) != 0)
        throw IntegrityError("authentication tag mismatch");

    std::string msin(msin_bytes.begin(), msin_bytes.end());
    if (!all_digits(msin)) throw IntegrityError("deconcealed msin is not a digit string");
    return Supi{suci.mcc, suci.mnc, msin};
}

Pei make_pei(std::string tac, std::string snr) {
    require_digits(tac, 8, 8, "tac");
    require_digits(snr, 6, 6, "snr");
    int check = luhn_check_digit(tac + snr);
    return Pei{std::move(tac), std::move(snr), std::string(1, static_cast<char>('0' + check))};
}

bool luhn_ok(const Pei& p) {
    if (!all_digits(p.tac) || p.tac.size() != 8 || !all_digits(p.snr) || p.snr.size() != 6 ||
        !all_digits(p.check_digit) || p.check_digit.size() != 1)
        return false;
    return luhn_check_digit(p.tac + p.snr) == p.check_digit[0] - '0';
}

std::string canonical(const Pei& p) { return "imei-" + p.tac + p.snr + p.check_digit; }

namespace {

char hex_digit(uint64_t v) { return "0123456789abcdef"[v & 0xf]; }

std::string fixed_hex(uint64_t value, int digits) {
    std::string out(static_cast<std::size_t>(digits), '0');
    for (int i = digits - 1; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = hex_digit(value);
        value >>= 4;
    }
    return out;
}

}  // namespace

std::string canonical(const Guti& g) {
    uint64_t v = (static_cast<uint64_t>(g.amf_region) << 48) |
                 (static_cast<uint64_t>(g.amf_set & 0x3ff) << 38) |
                 (static_cast<uint64_t>(g.amf_pointer & 0x3f) << 32) | g.tmsi5g;
    return fixed_hex(v, 14);
}

STmsi s_tmsi_of(const Guti& g) { return STmsi{g.amf_set, g.amf_pointer, g.tmsi5g}; }

std::string canonical(const STmsi& s) {
    uint64_t v = (static_cast<uint64_t>(s.amf_set & 0x3ff) << 38) |
                 (static_cast<uint64_t>(s.amf_pointer & 0x3f) << 32) | s.tmsi5g;
    return fixed_hex(v, 12);
}

std::string canonical(const Crnti& c) { return "crnti-" + fixed_hex(c.value, 4); }

bool guti_update_due(GutiEvent event, const GutiUpdatePolicy& policy, uint64_t elapsed_s) {
    switch (event) {
        case GutiEvent::InitialRegistration: return policy.on_initial_registration;
        case GutiEvent::MobilityRegistration: return policy.on_mobility_registration;
        case GutiEvent::ServiceRequestAfterPaging: return policy.on_service_request_after_paging;
        case GutiEvent::PeriodicRegistration: return policy.on_periodic_registration;
        case GutiEvent::TimerExpiry:
            return policy.periodic_refresh_interval_s &&
                   elapsed_s >= *policy.periodic_refresh_interval_s;
    }
    return false;
}

bool compliant(const GutiUpdatePolicy& policy) {
    return policy.on_initial_registration && policy.on_mobility_registration &&
           policy.on_service_request_after_paging && policy.on_periodic_registration;
}

GutiRegistry::GutiRegistry(std::string mcc, std::string mnc, uint8_t amf_region, uint16_t amf_set,
                           uint8_t amf_pointer)
    : mcc_(std::move(mcc)),
      mnc_(std::move(mnc)),
      amf_region_(amf_region),
      amf_set_(amf_set),
      amf_pointer_(amf_pointer) {}

Guti GutiRegistry::with_tmsi(uint32_t tmsi) const {
    return Guti{mcc_, mnc_, amf_region_, amf_set_, amf_pointer_, tmsi};
}

Guti GutiRegistry::allocate(Rng& rng, const std::optional<Guti>& replacing) {
    if (live_.size() >= (1ull << 32)) throw AllocationError("tmsi space exhausted");
    for (int attempt = 0; attempt < 4096; ++attempt) {
        uint32_t tmsi = rng.next_u32();
        if (replacing && replacing->tmsi5g == tmsi) continue;
        if (live_.contains(tmsi)) continue;
        live_.insert(tmsi);
        return with_tmsi(tmsi);
    }
    throw AllocationError("no free tmsi found");
}

Guti GutiRegistry::allocate_near(Rng& rng, const std::optional<Guti>& previous) {
    if (!previous) return allocate(rng, std::nullopt);
    // Reuse the old value or land a small increment away.
    uint32_t tmsi = previous->tmsi5g + static_cast<uint32_t>(rng.below(4));
    while (tmsi != previous->tmsi5g && live_.contains(tmsi)) ++tmsi;
    live_.insert(tmsi);
    return with_tmsi(tmsi);
}

void GutiRegistry::release(const Guti& g) { live_.erase(g.tmsi5g); }

bool GutiRegistry::live(const Guti& g) const { return live_.contains(g.tmsi5g); }

double unpredictability_score(const std::vector<Guti>& history) {
    if (history.size() < 2) throw Error("unpredictability_score needs at least 2 samples");
    double flips = 0.0;
    for (std::size_t i = 1; i < history.size(); ++i)
        flips += std::popcount(history[i - 1].tmsi5g ^ history[i].tmsi5g);
    return flips / (32.0 * static_cast<double>(history.size() - 1));
}

}  // namespace g5::identity
