#include "soapguard/pipeline.hpp"

#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "testutil.hpp"

using soapguard::KeyStore;
using soapguard::PipelineScenario;
using soapguard::PipelineTranscript;
using soapguard::ReplayStore;
using soapguard::XmlNode;

namespace {

KeyStore test_keystore() {
    return KeyStore::from_json_text(
        "{\"k-bank\": \"000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f\"}");
}

PipelineScenario scenario(const std::string& json) { return soapguard::scenario_from_json(json); }

TEST(Corpus, GeneratesDocumentedLoanShape) {
    XmlNode msg = soapguard::generate_loan_message(7);
    soapguard::EnvelopeShape shape = soapguard::as_envelope(msg);
    ASSERT_TRUE(shape.header.has_value());

    const XmlNode& header = msg.children[0];
    ASSERT_EQ(header.children.size(), 4u);
    EXPECT_EQ(header.children[0].name, "To");
    EXPECT_EQ(header.children[0].inner_text(), "ClientProcessService");
    EXPECT_EQ(header.children[1].children[0].inner_text(), "RequestClient");
    EXPECT_EQ(header.children[2].name, "MessageID");
    EXPECT_EQ(header.children[2].inner_text().rfind("urn:uuid:", 0), 0u);
    EXPECT_EQ(header.children[3].name, "Action");

    const XmlNode& body = msg.children[1];
    ASSERT_NE(soapguard::id_of(body), nullptr);
    EXPECT_EQ(*soapguard::id_of(body), "1");
    const XmlNode& offer = body.children[0];
    EXPECT_EQ(offer.name, "issueLoanOffer");
    ASSERT_EQ(offer.children.size(), 4u);
    EXPECT_EQ(offer.children[0].children[1].inner_text().size(), 12u);
    long amount = std::stol(offer.children[2].inner_text());
    EXPECT_GE(amount, 1000);
    EXPECT_LT(amount, 1000000);
    std::string loan_type = offer.children[3].inner_text();
    EXPECT_TRUE(loan_type == "1" || loan_type == "2" || loan_type == "3");

    EXPECT_EQ(soapguard::serialize_canonical(soapguard::generate_loan_message(7)),
              soapguard::serialize_canonical(msg));
    EXPECT_NE(soapguard::serialize_canonical(soapguard::generate_loan_message(8)),
              soapguard::serialize_canonical(msg));
}

TEST(Corpus, GeneratedMessagesSignAndGuardCleanly) {
    KeyStore ks = test_keystore();
    testutil::SplitMix64 rng(99);
    for (int i = 0; i < 20; ++i) {
        XmlNode msg = soapguard::generate_loan_message(rng.next());
        XmlNode signed_msg = soapguard::sign(msg, {"1"}, "k-bank", ks);
        EXPECT_TRUE(soapguard::verify_naive(signed_msg, ks).accepted());

        XmlNode guarded = soapguard::attach_guards(msg, {"1"}, "k-bank", ks,
                                                   "urn:uuid:corpus-" + std::to_string(i),
                                                   1700000000);
        ReplayStore rs(300);
        EXPECT_TRUE(soapguard::verify_hardened(guarded, ks, rs, 1700000001).accepted());
    }
}

TEST(Corpus, WritesDeterministicFilesAndManifest) {
    std::string dir_a = ::testing::TempDir() + "corpus_a";
    std::string dir_b = ::testing::TempDir() + "corpus_b";
    soapguard::CorpusManifest manifest_a = soapguard::write_corpus(dir_a, 5, 42);
    soapguard::CorpusManifest manifest_b = soapguard::write_corpus(dir_b, 5, 42);

    ASSERT_EQ(manifest_a.entries.size(), 5u);
    EXPECT_EQ(manifest_a.seed, 42u);
    EXPECT_EQ(manifest_a.entries[0].file, "msg_001.xml");
    EXPECT_EQ(manifest_a.entries[4].file, "msg_005.xml");

    for (std::size_t i = 0; i < 5; ++i) {
        std::string file_a = testutil::read_file(dir_a + "/" + manifest_a.entries[i].file);
        std::string file_b = testutil::read_file(dir_b + "/" + manifest_b.entries[i].file);
        EXPECT_EQ(file_a, file_b);
        XmlNode msg = soapguard::parse(file_a);
        EXPECT_EQ(soapguard::message_meta(msg).message_id.value_or(""),
                  manifest_a.entries[i].message_id);
        EXPECT_FALSE(manifest_a.entries[i].message_id.empty());
    }
    EXPECT_EQ(testutil::read_file(dir_a + "/manifest.json"),
              testutil::read_file(dir_b + "/manifest.json"));

    EXPECT_THROW(soapguard::write_corpus(dir_a, 0, 42), soapguard::IoError);
}

TEST(Scenario, ParsesFieldsAndActions) {
    PipelineScenario s = scenario(R"({
        "seed": 7,
        "validator": "hardened",
        "expected": "detected",
        "nodes": [
            {"id": "client", "role": "client",
             "actions": [{"op": "attach_guards", "refs": ["1"], "key": "k-bank"}]},
            {"id": "mallory", "role": "attacker",
             "actions": [{"op": "wrap_body", "wrapper": "BogusHeader"}]},
            {"id": "server", "role": "server"}
        ]
    })");
    EXPECT_EQ(s.seed, 7u);
    EXPECT_EQ(s.validator, "hardened");
    EXPECT_EQ(s.expected, "detected");
    ASSERT_EQ(s.nodes.size(), 3u);
    EXPECT_EQ(s.nodes[0].id, "client");
    ASSERT_EQ(s.nodes[1].actions.size(), 1u);
    EXPECT_EQ(s.nodes[1].actions[0].op, "wrap_body");
}

TEST(Scenario, RejectsInvalidShapes) {
    const char* cases[] = {
        "not json",
        "[1]",
        R"({"validator": "naive", "expected": "detected", "nodes": []})",
        R"({"seed": -1, "validator": "naive", "expected": "detected", "nodes": []})",
        R"({"seed": 1, "validator": "softened", "expected": "detected",
            "nodes": [{"id": "c", "role": "client"}, {"id": "s", "role": "server"}]})",
        R"({"seed": 1, "validator": "naive", "expected": "maybe",
            "nodes": [{"id": "c", "role": "client"}, {"id": "s", "role": "server"}]})",
        R"({"seed": 1, "validator": "naive", "expected": "detected",
            "nodes": [{"id": "c", "role": "client"}]})",
        R"({"seed": 1, "validator": "naive", "expected": "detected",
            "nodes": [{"id": "s", "role": "server"}, {"id": "c", "role": "client"}]})",
        R"({"seed": 1, "validator": "naive", "expected": "detected",
            "nodes": [{"id": "c", "role": "client"}, {"id": "c2", "role": "client"},
                      {"id": "s", "role": "server"}]})",
        R"({"seed": 1, "validator": "naive", "expected": "detected",
            "nodes": [{"id": "c", "role": "client"}, {"id": "s", "role": "server",
                      "actions": [{"op": "sign"}]}]})",
        R"({"seed": 1, "validator": "naive", "expected": "detected",
            "nodes": [{"id": "c", "role": "client"}, {"id": "x", "role": "wizard"},
                      {"id": "s", "role": "server"}]})",
        R"({"seed": 1, "validator": "naive", "expected": "detected",
            "nodes": [{"id": "c", "role": "client",
                       "actions": [{"op": "wrap_body"}]},
                      {"id": "s", "role": "server"}]})",
        R"({"seed": 1, "validator": "naive", "expected": "detected",
            "nodes": [{"id": "c", "role": "client"},
                      {"id": "m", "role": "intermediary",
                       "actions": [{"op": "relocate_account"}]},
                      {"id": "s", "role": "server"}]})",
        R"({"seed": 1, "validator": "naive", "expected": "detected",
            "nodes": [{"id": "c", "role": "client", "actions": [{"noop": true}]},
                      {"id": "s", "role": "server"}]})",
    };
    for (const char* text : cases)
        EXPECT_THROW(scenario(text), soapguard::ScenarioInvalid) << text;
}

TEST(Pipeline, BenignSignedDeliveryGoesUndetected) {
    KeyStore ks = test_keystore();
    ReplayStore rs(300);
    PipelineScenario s = scenario(R"({
        "seed": 11, "validator": "naive", "expected": "undetected",
        "nodes": [
            {"id": "client", "role": "client", "actions": [{"op": "sign", "refs": ["1"]}]},
            {"id": "server", "role": "server"}
        ]
    })");
    PipelineTranscript t = soapguard::run_pipeline(s, ks, rs);
    EXPECT_EQ(t.outcome, "undetected");
    EXPECT_TRUE(t.matches_expected);
    ASSERT_EQ(t.hops.size(), 2u);
    EXPECT_EQ(t.hops[0].node_id, "client");
    EXPECT_EQ(t.hops[0].actions, (std::vector<std::string>{"sign"}));
    EXPECT_TRUE(t.hops[0].errors.empty());
    EXPECT_EQ(t.hops[0].digest_hex.size(), 64u);
    EXPECT_EQ(t.hops[0].digest_hex, t.hops[1].digest_hex);
    EXPECT_TRUE(t.final_report.accepted());
    EXPECT_EQ(t.final_report.mode, "naive");
}

TEST(Pipeline, WrapAgainstHardenedIsDetected) {
    KeyStore ks = test_keystore();
    ReplayStore rs(300);
    PipelineScenario s = scenario(R"({
        "seed": 13, "validator": "hardened", "expected": "detected",
        "nodes": [
            {"id": "client", "role": "client", "actions": [{"op": "attach_guards"}]},
            {"id": "mallory", "role": "attacker", "actions": [{"op": "wrap_body"}]},
            {"id": "server", "role": "server"}
        ]
    })");
    PipelineTranscript t = soapguard::run_pipeline(s, ks, rs);
    EXPECT_EQ(t.outcome, "detected");
    EXPECT_TRUE(t.matches_expected);
    ASSERT_EQ(t.hops.size(), 3u);
    EXPECT_NE(t.hops[0].digest_hex, t.hops[1].digest_hex);
    EXPECT_FALSE(t.final_report.find("guard.depth")->pass);
}

TEST(Pipeline, RelocationSlipsPastAccountValidator) {
    KeyStore ks = test_keystore();
    ReplayStore rs(300);
    PipelineScenario s = scenario(R"({
        "seed": 17, "validator": "account", "expected": "undetected",
        "nodes": [
            {"id": "client", "role": "client", "actions": [{"op": "attach_account"}]},
            {"id": "mallory", "role": "attacker", "actions": [{"op": "relocate_account"}]},
            {"id": "server", "role": "server"}
        ]
    })");
    PipelineTranscript t = soapguard::run_pipeline(s, ks, rs);
    EXPECT_EQ(t.outcome, "undetected");
    EXPECT_TRUE(t.matches_expected);
    EXPECT_TRUE(t.final_report.find("account.present")->pass);
    EXPECT_EQ(t.final_report.find("account.envelope-children"), nullptr);
}

TEST(Pipeline, ReplayDeliveryCaughtByHardenedOnly) {
    KeyStore ks = test_keystore();
    PipelineScenario hardened = scenario(R"({
        "seed": 19, "validator": "hardened", "expected": "detected",
        "nodes": [
            {"id": "client", "role": "client", "actions": [{"op": "attach_guards"}]},
            {"id": "mallory", "role": "attacker", "actions": [{"op": "replay"}]},
            {"id": "server", "role": "server"}
        ]
    })");
    ReplayStore rs(300);
    PipelineTranscript t = soapguard::run_pipeline(hardened, ks, rs);
    EXPECT_EQ(t.outcome, "detected");
    EXPECT_TRUE(t.matches_expected);
    EXPECT_FALSE(t.final_report.find("replay")->pass);

    PipelineScenario naive = scenario(R"({
        "seed": 19, "validator": "naive", "expected": "undetected",
        "nodes": [
            {"id": "client", "role": "client", "actions": [{"op": "sign"}]},
            {"id": "mallory", "role": "attacker", "actions": [{"op": "replay"}]},
            {"id": "server", "role": "server"}
        ]
    })");
    ReplayStore rs2(300);
    PipelineTranscript t2 = soapguard::run_pipeline(naive, ks, rs2);
    EXPECT_EQ(t2.outcome, "undetected");
    EXPECT_TRUE(t2.matches_expected);
}

TEST(Pipeline, BenignIntermediaryToleratedByHardened) {
    KeyStore ks = test_keystore();
    ReplayStore rs(300);
    PipelineScenario s = scenario(R"({
        "seed": 23, "validator": "hardened", "expected": "undetected",
        "nodes": [
            {"id": "client", "role": "client", "actions": [{"op": "attach_guards"}]},
            {"id": "proxy", "role": "intermediary",
             "actions": [{"op": "add_benign_header", "name": "Via"}]},
            {"id": "server", "role": "server"}
        ]
    })");
    PipelineTranscript t = soapguard::run_pipeline(s, ks, rs);
    EXPECT_EQ(t.outcome, "undetected");
    EXPECT_TRUE(t.matches_expected) << t.final_report.to_text();
}

TEST(Pipeline, IntermediaryAccountChainsAndStrictCheckTrips) {
    KeyStore ks = test_keystore();
    ReplayStore rs(300);
    PipelineScenario s = scenario(R"({
        "seed": 29, "validator": "account", "expected": "detected",
        "nodes": [
            {"id": "client", "role": "client", "actions": [{"op": "attach_account"}]},
            {"id": "broker", "role": "intermediary", "actions": [{"op": "attach_account"}]},
            {"id": "server", "role": "server"}
        ]
    })");
    PipelineTranscript t = soapguard::run_pipeline(s, ks, rs);
    EXPECT_EQ(t.outcome, "detected");
    EXPECT_TRUE(t.matches_expected);
    EXPECT_TRUE(t.hops[1].errors.empty());
    EXPECT_TRUE(t.final_report.find("account.present")->pass);
}

TEST(Pipeline, FailedActionIsRecordedAndRunContinues) {
    KeyStore ks = test_keystore();
    ReplayStore rs(300);
    PipelineScenario s = scenario(R"({
        "seed": 31, "validator": "naive", "expected": "detected",
        "nodes": [
            {"id": "client", "role": "client",
             "actions": [{"op": "sign", "refs": ["99"]}]},
            {"id": "server", "role": "server"}
        ]
    })");
    PipelineTranscript t = soapguard::run_pipeline(s, ks, rs);
    ASSERT_EQ(t.hops[0].errors.size(), 1u);
    EXPECT_EQ(t.hops[0].errors[0].rfind("sign: ", 0), 0u);
    EXPECT_EQ(t.outcome, "detected");
    EXPECT_TRUE(t.matches_expected);
    EXPECT_FALSE(t.final_report.find("signature.present")->pass);
}

TEST(Pipeline, TranscriptJsonIsStableAndDeterministic) {
    KeyStore ks = test_keystore();
    PipelineScenario s = scenario(R"({
        "seed": 13, "validator": "hardened", "expected": "detected",
        "nodes": [
            {"id": "client", "role": "client", "actions": [{"op": "attach_guards"}]},
            {"id": "mallory", "role": "attacker", "actions": [{"op": "wrap_body"}]},
            {"id": "server", "role": "server"}
        ]
    })");
    ReplayStore rs1(300);
    ReplayStore rs2(300);
    std::string dump1 = soapguard::run_pipeline(s, ks, rs1).to_json().dump(2);
    std::string dump2 = soapguard::run_pipeline(s, ks, rs2).to_json().dump(2);
    EXPECT_EQ(dump1, dump2);

    nlohmann::json doc = nlohmann::json::parse(dump1);
    ASSERT_TRUE(doc.contains("hops"));
    ASSERT_EQ(doc["hops"].size(), 3u);
    for (const char* field : {"node", "digest", "actions", "errors"})
        EXPECT_TRUE(doc["hops"][0].contains(field)) << field;
    EXPECT_TRUE(doc.contains("final_report"));
    EXPECT_EQ(doc["final_report"]["verdict"], "reject");
    EXPECT_EQ(doc["outcome"], "detected");
    EXPECT_EQ(doc["matches_expected"], true);
}

}  // namespace
