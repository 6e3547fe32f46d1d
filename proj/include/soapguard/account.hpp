#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "soapguard/dsig.hpp"
#include "soapguard/errors.hpp"
#include "soapguard/keystore.hpp"
#include "soapguard/report.hpp"
#include "soapguard/soap.hpp"
#include "soapguard/xml.hpp"

namespace soapguard {

// Structural facts a sender notarizes about its message. Ref order follows
// the signing order, so serialized field order is deterministic.
struct SoapAccount {
    long no_child_of_envelope = 0;
    long no_child_of_header = 0;
    long no_signed_objects = 0;
    std::vector<std::pair<std::string, std::string>> parent_of;
    std::vector<std::pair<std::string, std::vector<std::string>>> sibling_of;
    std::vector<std::pair<std::string, std::string>> extensions;
};

struct AccountChainLink {
    SoapAccount account;
    std::string node_id;
    std::optional<Bytes> previous_signature_value;
};

struct AccountPolicy {
    // Gates the fragile comparisons (sibling lists and header child count)
    // that legitimate intermediaries invalidate by design.
    bool strict_siblings = true;
};

inline SoapAccount compute_account(const XmlNode& root,
                                   const std::vector<std::string>& signed_ref_ids,
                                   const IdAttrSet& id_attrs = default_id_attrs()) {
    EnvelopeShape shape = as_envelope(root);
    SoapAccount account;
    account.no_child_of_envelope = static_cast<long>(element_child_indices(root).size());
    account.no_child_of_header =
        shape.header
            ? static_cast<long>(element_child_indices(node_at(root, *shape.header)).size())
            : 0;
    account.no_signed_objects = static_cast<long>(signed_ref_ids.size());
    for (const auto& ref_id : signed_ref_ids) {
        NodePath path = resolve_reference(root, "#" + ref_id, id_attrs);
        const XmlNode& parent = node_at(root, parent_of(path));
        account.parent_of.emplace_back(ref_id, parent.name);
        std::vector<std::string> siblings;
        for (std::size_t idx : element_child_indices(parent))
            if (idx != path.back()) siblings.push_back(parent.children[idx].name);
        account.sibling_of.emplace_back(ref_id, std::move(siblings));
    }
    return account;
}

namespace detail {

inline bool all_digits(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (c < '0' || c > '9') return false;
    return true;
}

inline std::string join_names(const std::vector<std::string>& names) {
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i > 0) out += ", ";
        out += names[i];
    }
    return out;
}

inline std::vector<std::string> split_names(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t comma = text.find(',', start);
        std::string item = text.substr(
            start, comma == std::string::npos ? std::string::npos : comma - start);
        while (!item.empty() && (item.front() == ' ' || item.front() == '\n')) item.erase(0, 1);
        while (!item.empty() && (item.back() == ' ' || item.back() == '\n')) item.pop_back();
        if (!item.empty()) out.push_back(item);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace detail

// Field elements named as the recorded shape prescribes: numeric ref ids are
// baked into the element name (ParentOfId1); anything else falls back to a
// refId attribute.
inline XmlNode account_to_xml(const SoapAccount& account, const std::string& account_id,
                              const std::string& node_id) {
    XmlNode node = XmlNode::element("SoapAccount", {{"Id", account_id}, {"nodeId", node_id}});
    auto add_field = [&](const std::string& name, const std::string& text) {
        node.children.push_back(
            XmlNode::element(name, {}, text.empty() ? std::vector<XmlNode>{}
                                                    : std::vector<XmlNode>{XmlNode::text_node(text)}));
    };
    add_field("NoOfChildOfEnvelope", std::to_string(account.no_child_of_envelope));
    add_field("NoOfChildOfHeader", std::to_string(account.no_child_of_header));
    add_field("NoOfSignedObject", std::to_string(account.no_signed_objects));
    for (const auto& [ref_id, parent] : account.parent_of) {
        if (detail::all_digits(ref_id)) {
            add_field("ParentOfId" + ref_id, parent);
        } else {
            XmlNode field = XmlNode::element("ParentOf", {{"refId", ref_id}},
                                             {XmlNode::text_node(parent)});
            node.children.push_back(std::move(field));
        }
    }
    for (const auto& [ref_id, siblings] : account.sibling_of) {
        std::string text = detail::join_names(siblings);
        std::vector<XmlNode> content;
        if (!text.empty()) content.push_back(XmlNode::text_node(text));
        if (detail::all_digits(ref_id)) {
            node.children.push_back(XmlNode::element("SiblingOfId" + ref_id, {}, std::move(content)));
        } else {
            node.children.push_back(
                XmlNode::element("SiblingOf", {{"refId", ref_id}}, std::move(content)));
        }
    }
    for (const auto& [name, value] : account.extensions)
        add_field(name, value);
    return node;
}

// Reads recorded facts back out of a SoapAccount element.
inline SoapAccount account_from_xml(const XmlNode& node) {
    SoapAccount account;
    auto as_long = [](const XmlNode& n) -> long {
        try {
            return std::stol(n.inner_text());
        } catch (const std::exception&) {
            throw MalformedXml("SoapAccount field " + n.name + " is not a number");
        }
    };
    for (const auto& child : node.children) {
        if (!child.is_element()) continue;
        const std::string& name = child.name;
        if (name == "NoOfChildOfEnvelope") {
            account.no_child_of_envelope = as_long(child);
        } else if (name == "NoOfChildOfHeader") {
            account.no_child_of_header = as_long(child);
        } else if (name == "NoOfSignedObject") {
            account.no_signed_objects = as_long(child);
        } else if (name.rfind("ParentOfId", 0) == 0) {
            account.parent_of.emplace_back(name.substr(10), child.inner_text());
        } else if (name == "ParentOf" && child.attr("refId") != nullptr) {
            account.parent_of.emplace_back(*child.attr("refId"), child.inner_text());
        } else if (name.rfind("SiblingOfId", 0) == 0) {
            account.sibling_of.emplace_back(name.substr(11),
                                            detail::split_names(child.inner_text()));
        } else if (name == "SiblingOf" && child.attr("refId") != nullptr) {
            account.sibling_of.emplace_back(*child.attr("refId"),
                                            detail::split_names(child.inner_text()));
        } else {
            account.extensions.emplace_back(name, child.inner_text());
        }
    }
    return account;
}

struct AttachAccountResult {
    XmlNode root;
    std::string account_id;
    Bytes signature_value;
};

// Construction order matters: the account block and an (empty, if new)
// Security block are both in place before counting, so the recorded counters
// describe the message as it will be received.
inline AttachAccountResult attach_account_detailed(
    XmlNode root, const std::vector<std::string>& signed_ref_ids, const std::string& node_id,
    const std::string& key_id, const KeyStore& ks,
    const std::optional<Bytes>& previous_signature = std::nullopt,
    const IdAttrSet& id_attrs = default_id_attrs()) {
    ks.key(key_id);

    EnvelopeShape shape = as_envelope(root);
    if (!shape.header) {
        insert_child(root, {}, 0, XmlNode::element("Header"));
        shape = as_envelope(root);
    }
    std::string account_id = fresh_numeric_id(root, id_attrs);

    XmlNode& header = node_at(root, *shape.header);
    std::size_t insert_at = header.children.size();
    bool have_security = false;
    for (std::size_t i = 0; i < header.children.size(); ++i) {
        if (header.children[i].is_element() &&
            local_name(header.children[i].name) == "Security") {
            insert_at = i;
            have_security = true;
            break;
        }
    }
    header.children.insert(header.children.begin() + static_cast<std::ptrdiff_t>(insert_at),
                           XmlNode::element("SoapAccount"));
    if (!have_security) header.children.push_back(XmlNode::element("Security"));

    std::vector<std::string> all_refs = signed_ref_ids;
    all_refs.push_back(account_id);

    // Temporary id so the account's own ref resolves during counting.
    header.children[insert_at].set_attr("Id", account_id);
    SoapAccount account = compute_account(root, all_refs, id_attrs);
    header.children[insert_at] = account_to_xml(account, account_id, node_id);

    SignResult result =
        sign_detailed(std::move(root), all_refs, key_id, ks, previous_signature, id_attrs);
    return {std::move(result.root), std::move(account_id), std::move(result.signature_value)};
}

inline XmlNode attach_account(XmlNode root, const std::vector<std::string>& signed_ref_ids,
                              const std::string& node_id, const std::string& key_id,
                              const KeyStore& ks,
                              const std::optional<Bytes>& previous_signature = std::nullopt,
                              const IdAttrSet& id_attrs = default_id_attrs()) {
    return attach_account_detailed(std::move(root), signed_ref_ids, node_id, key_id, ks,
                                   previous_signature, id_attrs)
        .root;
}

namespace detail {

// Reference count of the signature covering ref_id, if any. Each account must
// be signed by its creator, so its counter is scoped to that signature.
inline std::optional<long> covering_signature_ref_count(const XmlNode& root,
                                                        const std::string& ref_id) {
    for (const NodePath& path : find_signature_paths(root)) {
        try {
            SignatureBlock sig = parse_signature(root, path);
            for (const auto& ref : sig.references)
                if (ref.uri == "#" + ref_id)
                    return static_cast<long>(sig.references.size());
        } catch (const Error&) {
            // Unparseable signatures already fail their structure check.
        }
    }
    return std::nullopt;
}

}  // namespace detail

// The published validation procedure, bypass included: presence is checked
// document-wide, but recorded facts are only compared for accounts sitting in
// a header block this node actually processes. An account parked under
// role="none" is present yet never compared.
inline VerificationReport verify_account(const XmlNode& root, const KeyStore& ks,
                                         std::string_view node_role,
                                         const AccountPolicy& policy = {},
                                         const IdAttrSet& id_attrs = default_id_attrs()) {
    VerificationReport report;
    report.mode = "account";

    std::vector<NodePath> all_accounts;
    for_each_element(root, [&](const NodePath& path, const XmlNode& node) {
        if (local_name(node.name) == "SoapAccount") all_accounts.push_back(path);
    });
    report.add("account.present", !all_accounts.empty(),
               all_accounts.empty() ? "no SoapAccount element anywhere in the message"
                                    : std::to_string(all_accounts.size()) + " account(s) found");

    if (!detail::append_signature_checks(report, root, ks, id_attrs))
        report.add("signature.present", false, "no Signature under any Security header");

    std::vector<NodePath> visible;
    std::vector<HeaderBlock> blocks;
    try {
        blocks = processed_blocks(root, node_role);
    } catch (const NotAnEnvelope& e) {
        report.add("account.envelope", false, e.what());
        return report;
    }
    for (const auto& path : all_accounts)
        for (const auto& block : blocks)
            if (path_is_prefix(block.path, path)) {
                visible.push_back(path);
                break;
            }

    std::size_t ordinal = 0;
    for (const NodePath& path : visible) {
        ++ordinal;
        std::string prefix = ordinal == 1 ? "account." : "account" + std::to_string(ordinal) + ".";
        const XmlNode& node = node_at(root, path);
        SoapAccount recorded;
        try {
            recorded = account_from_xml(node);
        } catch (const Error& e) {
            report.add(prefix + "structure", false, e.what());
            continue;
        }

        EnvelopeShape shape = as_envelope(root);
        long envelope_children = static_cast<long>(element_child_indices(root).size());
        long header_children =
            shape.header
                ? static_cast<long>(element_child_indices(node_at(root, *shape.header)).size())
                : 0;
        report.add(prefix + "envelope-children", envelope_children == recorded.no_child_of_envelope,
                   "recorded " + std::to_string(recorded.no_child_of_envelope) + ", found " +
                       std::to_string(envelope_children));
        if (policy.strict_siblings) {
            report.add(prefix + "header-children", header_children == recorded.no_child_of_header,
                       "recorded " + std::to_string(recorded.no_child_of_header) + ", found " +
                           std::to_string(header_children));
        }
        const std::string* account_id = id_of(node, id_attrs);
        std::optional<long> sig_refs =
            account_id ? detail::covering_signature_ref_count(root, *account_id) : std::nullopt;
        if (!sig_refs) {
            report.add(prefix + "signed-objects", false,
                       "account is not covered by any signature");
        } else {
            report.add(prefix + "signed-objects", *sig_refs == recorded.no_signed_objects,
                       "recorded " + std::to_string(recorded.no_signed_objects) + ", found " +
                           std::to_string(*sig_refs));
        }

        for (const auto& [ref_id, recorded_parent] : recorded.parent_of) {
            std::string name = prefix + "parent";
            try {
                NodePath ref_path = resolve_reference(root, "#" + ref_id, id_attrs);
                const XmlNode& parent = node_at(root, parent_of(ref_path));
                report.add(name, parent.name == recorded_parent,
                           "ref " + ref_id + ": recorded " + recorded_parent + ", found " +
                               parent.name);
            } catch (const Error& e) {
                report.add(name, false, "ref " + ref_id + ": " + e.what());
            }
        }
        if (policy.strict_siblings) {
            for (const auto& [ref_id, recorded_siblings] : recorded.sibling_of) {
                std::string name = prefix + "siblings";
                try {
                    NodePath ref_path = resolve_reference(root, "#" + ref_id, id_attrs);
                    const XmlNode& parent = node_at(root, parent_of(ref_path));
                    std::vector<std::string> found;
                    for (std::size_t idx : element_child_indices(parent))
                        if (idx != ref_path.back()) found.push_back(parent.children[idx].name);
                    report.add(name, found == recorded_siblings,
                               "ref " + ref_id + ": recorded [" +
                                   detail::join_names(recorded_siblings) + "], found [" +
                                   detail::join_names(found) + "]");
                } catch (const Error& e) {
                    report.add(name, false, "ref " + ref_id + ": " + e.what());
                }
            }
        }
    }
    return report;
}

// Shows the documented false positive: a legitimate header insertion flips a
// strict account validation from accept to reject.
inline std::pair<VerificationReport, VerificationReport> sibling_fragility_demo(
    const XmlNode& root, const std::string& benign_header_name, const KeyStore& ks,
    std::string_view node_role, const AccountPolicy& policy = {},
    const IdAttrSet& id_attrs = default_id_attrs()) {
    if (benign_header_name.empty()) throw InvalidHeaderName("header name must be nonempty");
    VerificationReport before = verify_account(root, ks, node_role, policy, id_attrs);

    XmlNode mutated = root;
    EnvelopeShape shape = as_envelope(mutated);
    if (!shape.header) {
        insert_child(mutated, {}, 0, XmlNode::element("Header"));
        shape = as_envelope(mutated);
    }
    XmlNode benign = XmlNode::element(benign_header_name, {{"role", std::string(roles::next)}});
    insert_child(mutated, *shape.header, 0, std::move(benign));

    VerificationReport after = verify_account(mutated, ks, node_role, policy, id_attrs);
    return {std::move(before), std::move(after)};
}

}  // namespace soapguard
