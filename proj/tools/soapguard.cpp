#include "soapguard/soapguard.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

int exit_code_for(const soapguard::Error& e) {
    switch (e.category()) {
        case soapguard::ErrorCategory::Input:
            return 2;
        case soapguard::ErrorCategory::Reference:
            return 3;
        case soapguard::ErrorCategory::Key:
            return 4;
        case soapguard::ErrorCategory::Attack:
            return 5;
    }
    return 2;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw soapguard::IoError("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Empty path means stdout.
void write_output(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw soapguard::IoError("cannot write " + path);
    out << text;
}

struct Options {
    std::string keystore;
    std::string input;
    std::string output;
    std::string mode = "plain";
    std::string verify_mode = "naive";
    std::string key = "k-bank";
    std::string node_id = "client";
    std::string message_id;
    std::string kind;
    std::string wrapper = "BogusHeader";
    std::string header_name = "Via";
    std::string attacker_body;
    std::string replay_db;
    std::string format = "text";
    std::string scenario;
    std::string corpus_dir;
    std::vector<std::string> refs{"1"};
    std::int64_t now = 1700000000;
    std::int64_t window = 300;
    std::uint64_t seed = 42;
    std::size_t count = 10;
};

soapguard::KeyStore load_keystore(const Options& opt) {
    if (opt.keystore.empty())
        throw soapguard::KeyStoreError("no keystore given (--keystore or SOAPGUARD_KEYSTORE)");
    return soapguard::KeyStore::load(opt.keystore);
}

int cmd_sign(const Options& opt) {
    soapguard::KeyStore ks = load_keystore(opt);
    soapguard::XmlNode root = soapguard::parse(read_file(opt.input));
    soapguard::XmlNode result;
    if (opt.mode == "plain") {
        result = soapguard::sign(std::move(root), opt.refs, opt.key, ks);
    } else if (opt.mode == "account") {
        result = soapguard::attach_account(std::move(root), opt.refs, opt.node_id, opt.key, ks);
    } else {
        std::string mid = opt.message_id.empty()
                              ? soapguard::message_meta(root).message_id.value_or("")
                              : opt.message_id;
        result = soapguard::attach_guards(std::move(root), opt.refs, opt.key, ks, mid, opt.now);
    }
    write_output(opt.output, soapguard::serialize_canonical(result) + "\n");
    return 0;
}

int cmd_verify(const Options& opt) {
    soapguard::KeyStore ks = load_keystore(opt);
    soapguard::XmlNode root = soapguard::parse(read_file(opt.input));
    soapguard::VerificationReport report;
    if (opt.verify_mode == "naive") {
        try {
            report = soapguard::verify_naive(root, ks);
        } catch (const soapguard::NoSignatureFound& e) {
            report.mode = "naive";
            report.add("signature.present", false, e.what());
        }
    } else if (opt.verify_mode == "account") {
        report = soapguard::verify_account(root, ks, soapguard::roles::ultimate_receiver);
    } else {
        soapguard::ReplayStore rs(opt.window);
        if (!opt.replay_db.empty()) rs.load(opt.replay_db);
        report = soapguard::verify_hardened(root, ks, rs, opt.now);
        if (!opt.replay_db.empty()) rs.save(opt.replay_db);
    }
    std::cout << (opt.format == "json" ? report.to_json().dump(2) + "\n" : report.to_text());
    return report.accepted() ? 0 : 1;
}

int cmd_attack(const Options& opt) {
    soapguard::KeyStore ks = load_keystore(opt);
    soapguard::XmlNode root = soapguard::parse(read_file(opt.input));
    soapguard::XmlNode body = opt.attacker_body.empty()
                                  ? soapguard::default_attacker_body()
                                  : soapguard::parse(read_file(opt.attacker_body));
    soapguard::XmlNode result;
    if (opt.kind == "wrap_body")
        result = soapguard::attack_wrap_body(std::move(root), body, opt.wrapper);
    else if (opt.kind == "relocate_account")
        result = soapguard::attack_relocate_account(std::move(root), body);
    else if (opt.kind == "reorder_signed")
        result = soapguard::attack_reorder_signed(std::move(root));
    else if (opt.kind == "replay")
        result = soapguard::attack_replay(std::move(root));
    else
        result = soapguard::add_benign_header(std::move(root), opt.header_name);

    // A rewriting attack is only interesting while the naive verifier stays
    // green; refuse to emit output that would not even pass that.
    try {
        if (!soapguard::verify_naive(result, ks).accepted()) {
            std::cerr << "soapguard: attack output fails naive verification\n";
            return 5;
        }
    } catch (const soapguard::NoSignatureFound&) {
        // Unsigned input: nothing to preserve.
    }
    write_output(opt.output, soapguard::serialize_canonical(result) + "\n");
    return 0;
}

int cmd_pipeline(const Options& opt) {
    soapguard::KeyStore ks = load_keystore(opt);
    soapguard::PipelineScenario scenario =
        soapguard::scenario_from_json(read_file(opt.scenario));
    soapguard::ReplayStore rs(opt.window);
    soapguard::PipelineTranscript transcript = soapguard::run_pipeline(scenario, ks, rs);

    std::string rendered;
    if (opt.format == "json") {
        rendered = transcript.to_json().dump(2) + "\n";
    } else {
        std::ostringstream os;
        for (const auto& hop : transcript.hops) {
            os << "hop " << hop.node_id << " digest " << hop.digest_hex << "\n";
            for (const auto& action : hop.actions) os << "  action " << action << "\n";
            for (const auto& error : hop.errors) os << "  error " << error << "\n";
        }
        os << transcript.final_report.to_text();
        os << "outcome: " << transcript.outcome
           << (transcript.matches_expected ? " (as expected)" : " (not as expected)") << "\n";
        rendered = os.str();
    }
    write_output(opt.output, rendered);
    return transcript.matches_expected ? 0 : 1;
}

int cmd_corpus(const Options& opt) {
    soapguard::CorpusManifest manifest = soapguard::write_corpus(opt.corpus_dir, opt.count, opt.seed);
    std::cout << "wrote " << manifest.entries.size() << " messages to " << opt.corpus_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    Options opt;
    CLI::App app{"XML signature wrapping attacks and defenses for SOAP messages"};
    app.require_subcommand(1);

    auto add_keystore = [&](CLI::App* sub) {
        sub->add_option("--keystore", opt.keystore, "key store JSON file")
            ->envname("SOAPGUARD_KEYSTORE");
    };

    CLI::App* sign = app.add_subcommand("sign", "sign a message, optionally with a protection header");
    sign->add_option("input", opt.input, "message file")->required();
    add_keystore(sign);
    sign->add_option("--out", opt.output, "output file (default stdout)");
    sign->add_option("--refs", opt.refs, "ids to sign (default 1)")->delimiter(',');
    sign->add_option("--key", opt.key, "signing key id");
    sign->add_option("--mode", opt.mode, "plain, account or guard")
        ->check(CLI::IsMember({"plain", "account", "guard"}));
    sign->add_option("--node-id", opt.node_id, "account issuer node id");
    sign->add_option("--message-id", opt.message_id, "guard MessageID (default: from header)");
    sign->add_option("--now", opt.now, "guard timestamp, seconds since epoch");

    CLI::App* verify = app.add_subcommand("verify", "verify a message and print a report");
    verify->add_option("input", opt.input, "message file")->required();
    add_keystore(verify);
    verify->add_option("--mode", opt.verify_mode, "naive, account or hardened")
        ->check(CLI::IsMember({"naive", "account", "hardened"}));
    verify->add_option("--format", opt.format, "text or json")
        ->check(CLI::IsMember({"text", "json"}));
    verify->add_option("--replay-db", opt.replay_db, "replay store file, loaded and saved");
    verify->add_option("--window", opt.window, "freshness and replay window, seconds")
        ->check(CLI::PositiveNumber);
    verify->add_option("--now", opt.now, "verification time, seconds since epoch");

    CLI::App* attack = app.add_subcommand("attack", "apply a rewriting attack to a message");
    attack->add_option("input", opt.input, "message file")->required();
    add_keystore(attack);
    attack->add_option("--kind", opt.kind, "attack kind")
        ->required()
        ->check(CLI::IsMember({"wrap_body", "relocate_account", "reorder_signed", "replay",
                               "add_benign_header"}));
    attack->add_option("--out", opt.output, "output file (default stdout)");
    attack->add_option("--wrapper", opt.wrapper, "wrapper header name for wrap_body");
    attack->add_option("--header", opt.header_name, "header name for add_benign_header");
    attack->add_option("--attacker-body", opt.attacker_body, "replacement Body file");

    CLI::App* pipeline = app.add_subcommand("pipeline", "run a multi-hop scenario");
    pipeline->add_option("scenario", opt.scenario, "scenario JSON file")->required();
    add_keystore(pipeline);
    pipeline->add_option("--out", opt.output, "transcript file (default stdout)");
    pipeline->add_option("--format", opt.format, "text or json")
        ->check(CLI::IsMember({"text", "json"}));
    pipeline->add_option("--window", opt.window, "server freshness and replay window, seconds")
        ->check(CLI::PositiveNumber);

    CLI::App* corpus = app.add_subcommand("corpus", "generate a benign message corpus");
    corpus->add_option("out_dir", opt.corpus_dir, "output directory")->required();
    corpus->add_option("--count", opt.count, "number of messages");
    corpus->add_option("--seed", opt.seed, "corpus seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (sign->parsed()) return cmd_sign(opt);
        if (verify->parsed()) return cmd_verify(opt);
        if (attack->parsed()) return cmd_attack(opt);
        if (pipeline->parsed()) return cmd_pipeline(opt);
        return cmd_corpus(opt);
    } catch (const soapguard::Error& e) {
        std::cerr << "soapguard: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "soapguard: " << e.what() << "\n";
        return 2;
    }
}
