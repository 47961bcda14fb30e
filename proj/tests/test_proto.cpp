#include <algorithm>
#include <set>

#include "doctest.h"
#include "fuzz.hpp"
#include "g5/errors.hpp"
#include "g5/proto.hpp"

using namespace g5;
using namespace g5::proto;

namespace {

secctx::SecurityContext test_ctx(secctx::Nea nea, secctx::Nia nia) {
    secctx::MasterKey master{};
    for (std::size_t i = 0; i < master.size(); ++i) master[i] = static_cast<uint8_t>(i * 7 + 1);
    return secctx::derive_context(master, {nea, nia});
}

bool has_exposure(const std::vector<Exposure>& exposed, ExposureKind kind) {
    return std::any_of(exposed.begin(), exposed.end(),
                       [kind](const Exposure& e) { return e.kind == kind; });
}

}  // namespace

TEST_CASE("protect builds envelopes per request") {
    auto ctx = test_ctx(secctx::Nea::NEA2, secctx::Nia::NIA2);
    NasMessage msg = IdentityRequest{IdentityKind::Suci};

    SUBCASE("plaintext envelope needs no context") {
        auto env = protect(Message{msg}, Layer::Nas, Direction::NetToUe, nullptr, false, false);
        CHECK_FALSE(env.integrity_protected);
        CHECK_FALSE(env.ciphered);
        CHECK_FALSE(env.mac.has_value());
        CHECK(env.count == 0);
    }

    SUBCASE("protection without a context is an error") {
        CHECK_THROWS_AS(protect(Message{msg}, Layer::Nas, Direction::NetToUe, nullptr, true, false),
                        Error);
        CHECK_THROWS_AS(protect(Message{msg}, Layer::Nas, Direction::NetToUe, nullptr, false, true),
                        Error);
    }

    SUBCASE("integrity sets the mac and consumes a count") {
        auto e1 = protect(Message{msg}, Layer::Nas, Direction::NetToUe, &ctx, true, false);
        auto e2 = protect(Message{msg}, Layer::Nas, Direction::NetToUe, &ctx, true, false);
        CHECK(e1.integrity_protected);
        CHECK(e1.mac.has_value());
        CHECK(e1.count == 0);
        CHECK(e2.count == 1);
        CHECK(ctx.dl_count == 2);
    }

    SUBCASE("the security-mode command mirrors its tag into the message") {
        SecurityModeCommand smc;
        smc.replayed_caps = secctx::SecurityCapabilities::standard();
        smc.selected = {secctx::Nea::NEA2, secctx::Nia::NIA2};
        auto env = protect(Message{NasMessage{smc}}, Layer::Nas, Direction::NetToUe, &ctx, true,
                           false);
        const auto& sent = std::get<SecurityModeCommand>(std::get<NasMessage>(env.payload));
        REQUIRE(sent.mac.has_value());
        CHECK(sent.mac == env.mac);
    }

    SUBCASE("requested ciphering records the algorithm in force") {
        auto env = protect(Message{msg}, Layer::Nas, Direction::NetToUe, &ctx, false, true);
        CHECK(env.ciphered);
        CHECK(env.cipher_alg == secctx::Nea::NEA2);
        CHECK(effectively_ciphered(env));

        auto null_ctx = test_ctx(secctx::Nea::NEA0, secctx::Nia::NIA2);
        auto null_env = protect(Message{msg}, Layer::Nas, Direction::NetToUe, &null_ctx, false, true);
        CHECK(null_env.ciphered);
        CHECK_FALSE(effectively_ciphered(null_env));
    }
}

TEST_CASE("exposure accounting") {
    identity::Supi supi{"001", "01", "1234567890"};

    SUBCASE("plaintext identity response exposes the supi") {
        SecurityEnvelope env;
        env.payload = NasMessage{IdentityResponse{supi}};
        auto exposed = exposed_fields(env);
        CHECK(has_exposure(exposed, ExposureKind::Supi));
    }

    SUBCASE("effective ciphering hides the payload but not the header") {
        SecurityEnvelope env;
        env.layer = Layer::Nas;
        env.ciphered = true;
        env.cipher_alg = secctx::Nea::NEA2;
        env.crnti = identity::Crnti{0x1001};
        env.payload = NasMessage{SecurityModeComplete{identity::make_pei("49015420", "323751")}};
        auto exposed = exposed_fields(env);
        CHECK_FALSE(has_exposure(exposed, ExposureKind::Pei));
        CHECK(has_exposure(exposed, ExposureKind::Crnti));
    }

    SUBCASE("null ciphering exposes like plaintext") {
        SecurityEnvelope env;
        env.ciphered = true;
        env.cipher_alg = secctx::Nea::NEA0;
        env.payload = NasMessage{SecurityModeComplete{identity::make_pei("49015420", "323751")}};
        CHECK(has_exposure(exposed_fields(env), ExposureKind::Pei));
    }

    SUBCASE("null-scheme suci exposes the underlying supi") {
        identity::Suci s;
        s.mcc = "001";
        s.mnc = "01";
        s.routing_indicator = "0";
        s.scheme_id = identity::SuciScheme::Null;
        s.scheme_output.assign(supi.msin.begin(), supi.msin.end());
        SecurityEnvelope env;
        env.payload = NasMessage{IdentityResponse{s}};
        auto exposed = exposed_fields(env);
        CHECK(has_exposure(exposed, ExposureKind::Suci));
        CHECK(has_exposure(exposed, ExposureKind::Supi));
    }

    SUBCASE("ciphering never enlarges the exposed set") {
        Rng rng(51);
        for (int i = 0; i < 300; ++i) {
            auto ev = testgen::trace_event(rng, 1);
            SecurityEnvelope open = ev.envelope;
            open.ciphered = false;
            SecurityEnvelope closed = ev.envelope;
            closed.ciphered = true;
            closed.cipher_alg = secctx::Nea::NEA2;
            auto open_set = exposed_fields(open);
            for (const auto& e : exposed_fields(closed))
                CHECK(std::find(open_set.begin(), open_set.end(), e) != open_set.end());
        }
    }
}

TEST_CASE("trace serialization") {
    SUBCASE("empty trace encodes to an empty stream") {
        CHECK(encode_trace({}).empty());
        CHECK(decode_trace("").empty());
    }

    SUBCASE("fuzzed traces round-trip losslessly") {
        Rng rng(77);
        for (int i = 0; i < 200; ++i) {
            Trace t = testgen::trace(rng);
            CHECK(decode_trace(encode_trace(t)) == t);
        }
    }

    SUBCASE("unknown message kind names the kind and the line") {
        Rng rng(1);
        Trace t;
        t.push_back(testgen::trace_event(rng, 1));
        std::string text = encode_trace(t);
        // splice an unknown kind into the second line
        std::string bad = text +
                          R"({"seq":2,"t":0,"dir":"ue->net","layer":"nas","integrity":false,)"
                          R"("ciphered":false,"alg":"NEA0","count":0,"msg":{"kind":"flux_capacitor"},)"
                          R"("exposed":[]})" "\n";
        try {
            decode_trace(bad);
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("flux_capacitor") != std::string::npos);
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
    }

    SUBCASE("malformed json names the line") {
        try {
            decode_trace("{not json\n");
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("line 1") != std::string::npos);
        }
    }
}

TEST_CASE("mac bytes exclude the command's own tag") {
    SecurityModeCommand smc;
    smc.replayed_caps = secctx::SecurityCapabilities::standard();
    smc.selected = {secctx::Nea::NEA2, secctx::Nia::NIA2};
    auto without = mac_bytes(Message{NasMessage{smc}});
    smc.mac = secctx::MacTag{0xdeadbeef};
    auto with = mac_bytes(Message{NasMessage{smc}});
    CHECK(without == with);

    // but tampering a covered field changes the bytes
    smc.replayed_caps = secctx::SecurityCapabilities::null_only();
    CHECK(mac_bytes(Message{NasMessage{smc}}) != with);
}

TEST_CASE("message kinds are stable wire names") {
    CHECK(message_kind(Message{NasMessage{IdentityRequest{}}}) == "identity_request");
    CHECK(message_kind(Message{RrcMessage{Paging{identity::STmsi{}}}}) == "paging");
}
