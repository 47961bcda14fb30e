#include <bit>
#include <set>

#include "doctest.h"
#include "g5/errors.hpp"
#include "g5/hex.hpp"
#include "g5/identity.hpp"

using namespace g5;
using namespace g5::identity;

namespace {

Supi random_supi(Rng& rng) { return make_supi(rng.digits(3), rng.digits(2), rng.digits(10)); }

}  // namespace

TEST_CASE("supi validation and canonical form") {
    Supi s = make_supi("001", "01", "0123456789");
    CHECK(canonical(s) == "imsi-001010123456789");
    CHECK(valid(s));
    CHECK_THROWS_AS(make_supi("00", "01", "0123456789"), std::invalid_argument);
    CHECK_THROWS_AS(make_supi("001", "0121", "0123456789"), std::invalid_argument);
    CHECK_THROWS_AS(make_supi("001", "01", "12345678"), std::invalid_argument);
    CHECK_THROWS_AS(make_supi("0a1", "01", "0123456789"), std::invalid_argument);
}

TEST_CASE("pei luhn check digit") {
    // Known layout: TAC 49015420, SNR 323751 carries check digit 8.
    Pei p = make_pei("49015420", "323751");
    CHECK(p.check_digit == "8");
    CHECK(luhn_ok(p));
    CHECK(canonical(p) == "imei-490154203237518");

    Pei bad = p;
    bad.snr = "323752";
    CHECK_FALSE(luhn_ok(bad));

    Rng rng(7);
    for (int i = 0; i < 50; ++i) {
        Pei q = make_pei(rng.digits(8), rng.digits(6));
        CHECK(luhn_ok(q));
        // flipping any digit breaks the check
        Pei r = q;
        std::size_t pos = static_cast<std::size_t>(rng.below(8));
        r.tac[pos] = static_cast<char>('0' + (r.tac[pos] - '0' + 1 + rng.below(9)) % 10);
        if (r.tac != q.tac) CHECK_FALSE(luhn_ok(r));
    }
}

TEST_CASE("null scheme suci carries the msin verbatim") {
    Rng rng(11);
    Supi s = make_supi("001", "01", "9876543210");
    auto keys = make_hn_keys(rng);
    Suci suci = conceal_supi(s, keys.public_key, rng, SuciScheme::Null);
    CHECK(std::string(suci.scheme_output.begin(), suci.scheme_output.end()) == s.msin);
    CHECK(canonical(suci).find("9876543210") != std::string::npos);
    CHECK(deconceal_suci(suci, keys.private_key) == s);
    // no key needed for the null scheme
    CHECK(deconceal_suci(suci, std::vector<uint8_t>{}) == s);
}

TEST_CASE("concealment round-trip, freshness and exposure") {
    Rng rng(42);
    auto keys = make_hn_keys(rng);

    for (int i = 0; i < 200; ++i) {
        Supi s = random_supi(rng);
        Suci suci = conceal_supi(s, keys.public_key, rng);
        CHECK(deconceal_suci(suci, keys.private_key) == s);
        CHECK(canonical(suci).find(s.msin) == std::string::npos);

        Suci again = conceal_supi(s, keys.public_key, rng);
        CHECK(suci.scheme_output != again.scheme_output);
        CHECK(suci.mcc == s.mcc);
        CHECK(suci.mnc == s.mnc);
    }
}

TEST_CASE("concealment error paths") {
    Rng rng(43);
    auto keys = make_hn_keys(rng);
    Supi s = make_supi("001", "01", "1234567890");

    CHECK_THROWS_AS(conceal_supi(s, std::vector<uint8_t>(31, 1), rng), ConcealmentError);

    Suci suci = conceal_supi(s, keys.public_key, rng);
    SUBCASE("every single-byte corruption is rejected") {
        for (std::size_t i = 0; i < suci.scheme_output.size(); ++i) {
            Suci corrupted = suci;
            corrupted.scheme_output[i] ^= 0x41;
            CHECK_THROWS_AS((void)deconceal_suci(corrupted, keys.private_key), IntegrityError);
        }
    }
    SUBCASE("wrong private key is an integrity failure, never a wrong supi") {
        auto other = make_hn_keys(rng);
        CHECK_THROWS_AS((void)deconceal_suci(suci, other.private_key), IntegrityError);
    }
    SUBCASE("truncated output is rejected") {
        Suci truncated = suci;
        truncated.scheme_output.resize(16);
        CHECK_THROWS_AS((void)deconceal_suci(truncated, keys.private_key), IntegrityError);
    }
}

TEST_CASE("s-tmsi projection") {
    Guti g{"001", "01", 0x11, 0x02, 0x01, 0};
    SUBCASE("zero tmsi") {
        STmsi s = s_tmsi_of(g);
        CHECK(s.tmsi5g == 0);
        CHECK(s.amf_set == 0x02);
        CHECK(s.amf_pointer == 0x01);
    }
    SUBCASE("field-wise copy") {
        Rng rng(3);
        for (int i = 0; i < 64; ++i) {
            Guti r{"001", "01", static_cast<uint8_t>(rng.below(256)),
                   static_cast<uint16_t>(rng.below(1024)), static_cast<uint8_t>(rng.below(64)),
                   rng.next_u32()};
            STmsi s = s_tmsi_of(r);
            CHECK(s.amf_set == r.amf_set);
            CHECK(s.amf_pointer == r.amf_pointer);
            CHECK(s.tmsi5g == r.tmsi5g);
        }
    }
    SUBCASE("amf region is not part of the projection") {
        Guti a = g, b = g;
        a.amf_region = 0x11;
        b.amf_region = 0x99;
        a.tmsi5g = b.tmsi5g = 0xdeadbeef;
        CHECK(s_tmsi_of(a) == s_tmsi_of(b));
        CHECK(canonical(a) != canonical(b));  // the full id still differs
    }
}

TEST_CASE("canonical identifier text forms") {
    Guti g{"001", "01", 0xab, 0x3ff, 0x3f, 0xdeadbeef};
    CHECK(canonical(g).size() == 14);
    CHECK(canonical(g) == "abffffdeadbeef");
    STmsi s = s_tmsi_of(g);
    CHECK(canonical(s).size() == 12);
    CHECK(canonical(s) == "ffffdeadbeef");
    CHECK(canonical(Crnti{0x4e21}) == "crnti-4e21");
}

TEST_CASE("guti registry allocation") {
    Rng rng(99);
    GutiRegistry reg("001", "01");

    SUBCASE("seeded determinism") {
        Rng a(5), b(5);
        GutiRegistry ra("001", "01"), rb("001", "01");
        CHECK(ra.allocate(a) == rb.allocate(b));
    }

    SUBCASE("distinct from live and replaced") {
        Guti first = reg.allocate(rng);
        Guti second = reg.allocate(rng, first);
        CHECK(first.tmsi5g != second.tmsi5g);
        CHECK(reg.live(first));
        CHECK(reg.live(second));
        CHECK(reg.live_count() == 2);
        reg.release(first);
        CHECK_FALSE(reg.live(first));
    }

    SUBCASE("compliant allocator clears the unpredictability threshold") {
        std::vector<Guti> history;
        std::optional<Guti> prev;
        for (int i = 0; i < 100; ++i) {
            Guti g = reg.allocate(rng, prev);
            if (prev) {
                CHECK(std::popcount(prev->tmsi5g ^ g.tmsi5g) >= 1);
                reg.release(*prev);
            }
            history.push_back(g);
            prev = g;
        }
        CHECK(unpredictability_score(history) >= kUnpredictabilityThreshold);
    }

    SUBCASE("sticky allocator stays below the threshold") {
        std::vector<Guti> history;
        std::optional<Guti> prev;
        for (int i = 0; i < 100; ++i) {
            Guti g = reg.allocate_near(rng, prev);
            history.push_back(g);
            prev = g;
        }
        CHECK(unpredictability_score(history) < kUnpredictabilityThreshold);
    }
}

TEST_CASE("guti update policy") {
    using enum GutiEvent;
    GutiUpdatePolicy sa_b{true, true, true, true, 90 * 60};
    GutiUpdatePolicy nsa{true, false, false, false, std::nullopt};

    CHECK(guti_update_due(ServiceRequestAfterPaging, sa_b));
    CHECK_FALSE(guti_update_due(ServiceRequestAfterPaging, nsa));
    CHECK(guti_update_due(TimerExpiry, sa_b, 90 * 60));
    CHECK(guti_update_due(TimerExpiry, sa_b, 2 * 60 * 60));
    CHECK_FALSE(guti_update_due(TimerExpiry, sa_b, 90 * 60 - 1));
    CHECK_FALSE(guti_update_due(TimerExpiry, nsa, 48 * 3600));

    CHECK(compliant(sa_b));
    CHECK_FALSE(compliant(nsa));
    for (GutiEvent ev : {InitialRegistration, MobilityRegistration, ServiceRequestAfterPaging,
                         PeriodicRegistration})
        CHECK(guti_update_due(ev, sa_b));
}

TEST_CASE("unpredictability score") {
    auto with_tmsi = [](uint32_t t) { return Guti{"001", "01", 0x11, 2, 1, t}; };

    SUBCASE("constant sequence scores zero") {
        std::vector<Guti> h(10, with_tmsi(0x1234));
        CHECK(unpredictability_score(h) == doctest::Approx(0.0));
    }

    SUBCASE("counter sequence matches the exact carry-chain oracle") {
        // Independent route: an increment flips the trailing ones plus the
        // first zero above them.
        const uint32_t start = 1000;
        const int n = 101;  // 100 consecutive pairs
        double expected_flips = 0;
        for (uint32_t v = start; v < start + static_cast<uint32_t>(n) - 1; ++v)
            expected_flips += std::countr_one(v) + 1;
        double expected = expected_flips / (32.0 * (n - 1));

        std::vector<Guti> h;
        for (int i = 0; i < n; ++i) h.push_back(with_tmsi(start + static_cast<uint32_t>(i)));
        CHECK(unpredictability_score(h) == doctest::Approx(expected).epsilon(1e-12));
        CHECK(unpredictability_score(h) < kUnpredictabilityThreshold);
    }

    SUBCASE("uniform random sequence scores one half") {
        Rng rng(2024);
        std::vector<Guti> h;
        for (int i = 0; i < 10001; ++i) h.push_back(with_tmsi(rng.next_u32()));
        CHECK(std::abs(unpredictability_score(h) - 0.5) <= 0.02);
    }

    SUBCASE("needs two samples") {
        std::vector<Guti> h{with_tmsi(1)};
        CHECK_THROWS_AS((void)unpredictability_score(h), Error);
    }
}
