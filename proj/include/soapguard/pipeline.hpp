#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "soapguard/account.hpp"
#include "soapguard/attack.hpp"
#include "soapguard/clock.hpp"
#include "soapguard/corpus.hpp"
#include "soapguard/dsig.hpp"
#include "soapguard/errors.hpp"
#include "soapguard/guard.hpp"
#include "soapguard/keystore.hpp"
#include "soapguard/report.hpp"

namespace soapguard {

struct ScenarioAction {
    std::string op;
    nlohmann::json params;
};

struct ScenarioNode {
    std::string id;
    std::string role;
    std::vector<ScenarioAction> actions;
};

struct PipelineScenario {
    std::uint64_t seed = 0;
    std::string validator;
    std::vector<ScenarioNode> nodes;
    std::string expected;
};

namespace detail {

inline bool action_allowed(const std::string& role, const std::string& op) {
    if (role == "client")
        return op == "sign" || op == "attach_account" || op == "attach_guards";
    if (role == "intermediary") return op == "add_benign_header" || op == "attach_account";
    if (role == "attacker")
        return op == "wrap_body" || op == "relocate_account" || op == "reorder_signed" ||
               op == "replay" || op == "add_benign_header";
    return false;
}

inline std::vector<std::string> json_string_list(const nlohmann::json& value,
                                                 const std::string& what) {
    if (!value.is_array()) throw ScenarioInvalid(what + " must be an array of strings");
    std::vector<std::string> out;
    for (const auto& item : value) {
        if (!item.is_string()) throw ScenarioInvalid(what + " must be an array of strings");
        out.push_back(item.get<std::string>());
    }
    return out;
}

}  // namespace detail

inline PipelineScenario scenario_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ScenarioInvalid(std::string("scenario is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ScenarioInvalid("scenario must be a JSON object");

    PipelineScenario scenario;
    if (!doc.contains("seed") || !doc["seed"].is_number_unsigned())
        throw ScenarioInvalid("scenario needs a non-negative integer seed");
    scenario.seed = doc["seed"].get<std::uint64_t>();

    if (!doc.contains("validator") || !doc["validator"].is_string())
        throw ScenarioInvalid("scenario needs a validator string");
    scenario.validator = doc["validator"].get<std::string>();
    if (scenario.validator != "naive" && scenario.validator != "account" &&
        scenario.validator != "hardened")
        throw ScenarioInvalid("validator must be naive, account, or hardened");

    if (!doc.contains("expected") || !doc["expected"].is_string())
        throw ScenarioInvalid("scenario needs an expected string");
    scenario.expected = doc["expected"].get<std::string>();
    if (scenario.expected != "detected" && scenario.expected != "undetected")
        throw ScenarioInvalid("expected must be detected or undetected");

    if (!doc.contains("nodes") || !doc["nodes"].is_array() || doc["nodes"].size() < 2)
        throw ScenarioInvalid("scenario needs at least a client and a server node");
    for (const auto& node_json : doc["nodes"]) {
        if (!node_json.is_object()) throw ScenarioInvalid("node must be an object");
        ScenarioNode node;
        if (!node_json.contains("id") || !node_json["id"].is_string() ||
            node_json["id"].get<std::string>().empty())
            throw ScenarioInvalid("node needs a nonempty id");
        node.id = node_json["id"].get<std::string>();
        if (!node_json.contains("role") || !node_json["role"].is_string())
            throw ScenarioInvalid("node needs a role");
        node.role = node_json["role"].get<std::string>();
        if (node.role != "client" && node.role != "intermediary" && node.role != "attacker" &&
            node.role != "server")
            throw ScenarioInvalid("unknown role " + node.role);
        if (node_json.contains("actions")) {
            if (!node_json["actions"].is_array())
                throw ScenarioInvalid("actions must be an array");
            for (const auto& action_json : node_json["actions"]) {
                if (!action_json.is_object() || !action_json.contains("op") ||
                    !action_json["op"].is_string())
                    throw ScenarioInvalid("action needs an op string");
                ScenarioAction action;
                action.op = action_json["op"].get<std::string>();
                action.params = action_json;
                if (node.role == "server")
                    throw ScenarioInvalid("server nodes take no actions");
                if (!detail::action_allowed(node.role, action.op))
                    throw ScenarioInvalid("role " + node.role + " cannot perform " + action.op);
                node.actions.push_back(std::move(action));
            }
        }
        scenario.nodes.push_back(std::move(node));
    }

    if (scenario.nodes.front().role != "client")
        throw ScenarioInvalid("first node must be the client");
    if (scenario.nodes.back().role != "server")
        throw ScenarioInvalid("last node must be the server");
    for (std::size_t i = 0; i < scenario.nodes.size(); ++i) {
        const std::string& role = scenario.nodes[i].role;
        if (role == "client" && i != 0) throw ScenarioInvalid("exactly one client, first");
        if (role == "server" && i + 1 != scenario.nodes.size())
            throw ScenarioInvalid("exactly one server, last");
    }
    return scenario;
}

struct PipelineHop {
    std::string node_id;
    std::string digest_hex;
    std::vector<std::string> actions;
    std::vector<std::string> errors;
};

struct PipelineTranscript {
    std::vector<PipelineHop> hops;
    VerificationReport final_report;
    std::string outcome;
    bool matches_expected = false;

    nlohmann::json to_json() const {
        nlohmann::json doc;
        doc["hops"] = nlohmann::json::array();
        for (const auto& hop : hops) {
            nlohmann::json h;
            h["node"] = hop.node_id;
            h["digest"] = hop.digest_hex;
            h["actions"] = hop.actions;
            h["errors"] = hop.errors;
            doc["hops"].push_back(std::move(h));
        }
        doc["final_report"] = final_report.to_json();
        doc["outcome"] = outcome;
        doc["matches_expected"] = matches_expected;
        return doc;
    }
};

namespace detail {

inline std::optional<std::string> last_signature_value(const XmlNode& root) {
    std::optional<std::string> value;
    for (const NodePath& path : find_signature_paths(root)) {
        try {
            value = parse_signature(root, path).signature_value_hex;
        } catch (const Error&) {
        }
    }
    return value;
}

inline XmlNode apply_action(XmlNode msg, const ScenarioNode& node, const ScenarioAction& action,
                            const KeyStore& ks, std::int64_t now) {
    const nlohmann::json& p = action.params;
    auto refs = [&]() -> std::vector<std::string> {
        if (p.contains("refs")) return json_string_list(p["refs"], "refs");
        return {"1"};
    };
    std::string key = p.contains("key") && p["key"].is_string() ? p["key"].get<std::string>()
                                                                : "k-bank";
    if (action.op == "sign") return sign(std::move(msg), refs(), key, ks);
    if (action.op == "attach_account") {
        std::string node_id = p.contains("node_id") && p["node_id"].is_string()
                                  ? p["node_id"].get<std::string>()
                                  : node.id;
        // Later accounts chain over the newest signature, as each hop extends
        // the previous one's proof.
        std::optional<std::string> previous_hex = last_signature_value(msg);
        std::optional<Bytes> previous;
        if (previous_hex) previous = from_hex(*previous_hex);
        std::vector<std::string> account_refs =
            p.contains("refs") ? json_string_list(p["refs"], "refs")
                               : (previous ? std::vector<std::string>{}
                                           : std::vector<std::string>{"1"});
        return attach_account(std::move(msg), account_refs, node_id, key, ks, previous);
    }
    if (action.op == "attach_guards") {
        std::string message_id;
        if (p.contains("message_id") && p["message_id"].is_string())
            message_id = p["message_id"].get<std::string>();
        else
            message_id = message_meta(msg).message_id.value_or("");
        return attach_guards(std::move(msg), refs(), key, ks, message_id, now);
    }
    if (action.op == "wrap_body") {
        std::string wrapper = p.contains("wrapper") && p["wrapper"].is_string()
                                  ? p["wrapper"].get<std::string>()
                                  : "BogusHeader";
        return attack_wrap_body(std::move(msg), default_attacker_body(), wrapper);
    }
    if (action.op == "relocate_account")
        return attack_relocate_account(std::move(msg), default_attacker_body());
    if (action.op == "reorder_signed") return attack_reorder_signed(std::move(msg));
    if (action.op == "replay") return attack_replay(std::move(msg));
    if (action.op == "add_benign_header") {
        std::string name = p.contains("name") && p["name"].is_string()
                               ? p["name"].get<std::string>()
                               : "Via";
        return add_benign_header(std::move(msg), name);
    }
    throw ScenarioInvalid("unknown action op " + action.op);
}

}  // namespace detail

// Deterministic multi-hop walk: the client builds the message, every hop
// mutates it in order under a virtual clock, the server verifies last. An
// attacker replay action makes the server verify the delivery twice; the
// second verdict is the one that counts.
inline PipelineTranscript run_pipeline(const PipelineScenario& scenario, const KeyStore& ks,
                                       ReplayStore& rs, std::int64_t start_time = 1700000000,
                                       std::int64_t tick_seconds = 1) {
    PipelineTranscript transcript;
    VirtualClock clock(start_time);
    XmlNode msg = generate_loan_message(scenario.seed);
    bool replay_delivery = false;

    for (const ScenarioNode& node : scenario.nodes) {
        PipelineHop hop;
        hop.node_id = node.id;
        for (const ScenarioAction& action : node.actions) {
            hop.actions.push_back(action.op);
            if (action.op == "replay") replay_delivery = true;
            try {
                // Copy in so a throwing action leaves the message untouched.
                XmlNode next = detail::apply_action(msg, node, action, ks, clock.now());
                msg = std::move(next);
            } catch (const Error& e) {
                hop.errors.push_back(action.op + ": " + e.what());
            }
        }
        if (node.role == "server") {
            auto verify_once = [&]() -> VerificationReport {
                if (scenario.validator == "naive") {
                    try {
                        return verify_naive(msg, ks);
                    } catch (const NoSignatureFound& e) {
                        VerificationReport report;
                        report.mode = "naive";
                        report.add("signature.present", false, e.what());
                        return report;
                    }
                }
                if (scenario.validator == "account")
                    return verify_account(msg, ks, roles::ultimate_receiver);
                return verify_hardened(msg, ks, rs, clock.now());
            };
            transcript.final_report = verify_once();
            if (replay_delivery) {
                clock.advance(tick_seconds);
                transcript.final_report = verify_once();
            }
        }
        hop.digest_hex = to_hex(sha256(serialize_canonical(msg)));
        transcript.hops.push_back(std::move(hop));
        clock.advance(tick_seconds);
    }

    transcript.outcome = transcript.final_report.accepted() ? "undetected" : "detected";
    transcript.matches_expected = transcript.outcome == scenario.expected;
    return transcript;
}

}  // namespace soapguard
