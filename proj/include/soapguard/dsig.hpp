#pragma once

#include <optional>
#include <string>
#include <vector>

#include "soapguard/crypto.hpp"
#include "soapguard/errors.hpp"
#include "soapguard/keystore.hpp"
#include "soapguard/report.hpp"
#include "soapguard/soap.hpp"
#include "soapguard/xml.hpp"

namespace soapguard {

namespace algs {
inline constexpr std::string_view c14n = "urn:soapguard:c14n:v1";
inline constexpr std::string_view sha256 = "urn:soapguard:sha256";
inline constexpr std::string_view hmac_sha256 = "urn:soapguard:hmac-sha256";
}  // namespace algs

struct Reference {
    std::string uri;
    std::string digest_method;
    std::string digest_value_hex;
};

struct SignatureBlock {
    NodePath path;
    std::string canonicalization_method;
    std::string signature_method;
    std::vector<Reference> references;
    std::string signature_value_hex;
    std::string key_id;
    bool chained = false;
};

inline Bytes digest_element(const XmlNode& root, const NodePath& path) {
    return sha256(serialize_canonical(node_at(root, path)));
}

// Signature elements under a Security header, in document order. Nesting
// depth under Security does not matter, by the same location independence
// the rest of the model lives with.
inline std::vector<NodePath> find_signature_paths(const XmlNode& root) {
    std::vector<NodePath> security_paths;
    for_each_element(root, [&](const NodePath& path, const XmlNode& node) {
        if (local_name(node.name) == "Security") security_paths.push_back(path);
    });
    std::vector<NodePath> out;
    for_each_element(root, [&](const NodePath& path, const XmlNode& node) {
        if (local_name(node.name) != "Signature") return;
        for (const auto& sec : security_paths) {
            if (sec.size() < path.size() && path_is_prefix(sec, path)) {
                out.push_back(path);
                return;
            }
        }
    });
    return out;
}

namespace detail {

inline const XmlNode* child_by_local_name(const XmlNode& node, std::string_view local) {
    for (const auto& c : node.children)
        if (c.is_element() && local_name(c.name) == local) return &c;
    return nullptr;
}

}  // namespace detail

// Structural read of one Signature element; throws MalformedXml on shape
// violations so validators can turn them into report entries.
inline SignatureBlock parse_signature(const XmlNode& root, const NodePath& path) {
    const XmlNode& sig = node_at(root, path);
    SignatureBlock block;
    block.path = path;
    const std::string* chained = sig.attr("chained");
    block.chained = chained != nullptr && *chained == "true";

    const XmlNode* signed_info = detail::child_by_local_name(sig, "SignedInfo");
    if (signed_info == nullptr) throw MalformedXml("Signature without SignedInfo");
    const XmlNode* c14n = detail::child_by_local_name(*signed_info, "CanonicalizationMethod");
    const XmlNode* method = detail::child_by_local_name(*signed_info, "SignatureMethod");
    if (c14n == nullptr || c14n->attr("Algorithm") == nullptr)
        throw MalformedXml("SignedInfo without CanonicalizationMethod");
    if (method == nullptr || method->attr("Algorithm") == nullptr)
        throw MalformedXml("SignedInfo without SignatureMethod");
    block.canonicalization_method = *c14n->attr("Algorithm");
    block.signature_method = *method->attr("Algorithm");

    for (const auto& child : signed_info->children) {
        if (!child.is_element() || local_name(child.name) != "Reference") continue;
        const std::string* uri = child.attr("URI");
        if (uri == nullptr) throw MalformedXml("Reference without URI");
        const XmlNode* dm = detail::child_by_local_name(child, "DigestMethod");
        const XmlNode* dv = detail::child_by_local_name(child, "DigestValue");
        if (dm == nullptr || dm->attr("Algorithm") == nullptr)
            throw MalformedXml("Reference without DigestMethod");
        if (dv == nullptr) throw MalformedXml("Reference without DigestValue");
        block.references.push_back({*uri, *dm->attr("Algorithm"), dv->inner_text()});
    }
    if (block.references.empty()) throw MalformedXml("Signature without references");

    const XmlNode* value = detail::child_by_local_name(sig, "SignatureValue");
    if (value == nullptr) throw MalformedXml("Signature without SignatureValue");
    block.signature_value_hex = value->inner_text();

    const XmlNode* key_info = detail::child_by_local_name(sig, "KeyInfo");
    if (key_info == nullptr) throw MalformedXml("Signature without KeyInfo");
    const XmlNode* key_id = detail::child_by_local_name(*key_info, "KeyId");
    if (key_id == nullptr) throw MalformedXml("KeyInfo without KeyId");
    block.key_id = key_id->inner_text();
    return block;
}

// Step one of the two-step verification: resolve each URI and compare
// digests. Resolution is location-independent on purpose; that property is
// the vulnerability under study, not an implementation shortcut.
inline std::vector<Check> reference_validation(const XmlNode& root, const SignatureBlock& sig,
                                               const std::string& name_prefix = "",
                                               const IdAttrSet& id_attrs = default_id_attrs()) {
    std::vector<Check> checks;
    for (const auto& ref : sig.references) {
        Check check;
        check.name = name_prefix + "reference[" + ref.uri + "]";
        if (ref.digest_method != algs::sha256) {
            check.pass = false;
            check.detail = "unknown digest method " + ref.digest_method;
            checks.push_back(std::move(check));
            continue;
        }
        try {
            NodePath target = resolve_reference(root, ref.uri, id_attrs);
            std::string actual = to_hex(digest_element(root, target));
            if (actual == ref.digest_value_hex) {
                check.pass = true;
                check.detail = "digest match for " + node_at(root, target).name + " at depth " +
                               std::to_string(depth_of(target));
            } else {
                check.pass = false;
                check.detail = "digest mismatch: recorded " + ref.digest_value_hex.substr(0, 12) +
                               "…, computed " + actual.substr(0, 12) + "…";
            }
        } catch (const Error& e) {
            check.pass = false;
            check.detail = e.what();
        }
        checks.push_back(std::move(check));
    }
    return checks;
}

// Step two: recompute the HMAC over canonical SignedInfo (plus the previous
// signature value when chained) and compare in constant time.
inline Check signature_validation(const XmlNode& root, const SignatureBlock& sig,
                                  const KeyStore& ks,
                                  const std::optional<Bytes>& previous_signature = std::nullopt,
                                  const std::string& name_prefix = "") {
    Check check;
    check.name = name_prefix + "signature";
    if (sig.signature_method != algs::hmac_sha256) {
        check.pass = false;
        check.detail = "unknown signature method " + sig.signature_method;
        return check;
    }
    if (sig.canonicalization_method != algs::c14n) {
        check.pass = false;
        check.detail = "unknown canonicalization method " + sig.canonicalization_method;
        return check;
    }
    const XmlNode* signed_info = detail::child_by_local_name(node_at(root, sig.path), "SignedInfo");
    if (signed_info == nullptr) {
        check.pass = false;
        check.detail = "SignedInfo missing";
        return check;
    }
    if (sig.chained && !previous_signature) {
        check.pass = false;
        check.detail = "chained signature without a predecessor";
        return check;
    }
    std::string input = serialize_canonical(*signed_info);
    Bytes message(input.begin(), input.end());
    if (sig.chained)
        message.insert(message.end(), previous_signature->begin(), previous_signature->end());
    Bytes expected = hmac_sha256(ks.key(sig.key_id), message);
    Bytes recorded;
    try {
        recorded = from_hex(sig.signature_value_hex);
    } catch (const Error&) {
        check.pass = false;
        check.detail = "SignatureValue is not valid hex";
        return check;
    }
    check.pass = constant_time_eq(expected, recorded);
    check.detail = check.pass ? "hmac match under key " + sig.key_id
                              : "hmac mismatch under key " + sig.key_id;
    return check;
}

namespace detail {

// Shared by all three validators. Returns false when no signature exists so
// callers can choose between throwing and recording.
inline bool append_signature_checks(VerificationReport& report, const XmlNode& root,
                                    const KeyStore& ks, const IdAttrSet& id_attrs) {
    std::vector<NodePath> paths = find_signature_paths(root);
    if (paths.empty()) return false;
    std::optional<Bytes> previous_value;
    for (std::size_t i = 0; i < paths.size(); ++i) {
        std::string prefix = i == 0 ? "" : "sig" + std::to_string(i + 1) + ".";
        SignatureBlock sig;
        try {
            sig = parse_signature(root, paths[i]);
        } catch (const Error& e) {
            report.add(prefix + "signature.structure", false, e.what());
            previous_value = std::nullopt;
            continue;
        }
        for (auto& check : reference_validation(root, sig, prefix, id_attrs))
            report.checks.push_back(std::move(check));
        std::optional<Bytes> chain_input = sig.chained ? previous_value : std::nullopt;
        try {
            report.checks.push_back(signature_validation(root, sig, ks, chain_input, prefix));
        } catch (const UnknownKey& e) {
            report.add(prefix + "signature", false, e.what());
        }
        try {
            previous_value = from_hex(sig.signature_value_hex);
        } catch (const Error&) {
            previous_value = std::nullopt;
        }
    }
    return true;
}

}  // namespace detail

// The baseline verifier: both steps for every signature, and nothing else.
// No structural awareness whatsoever.
inline VerificationReport verify_naive(const XmlNode& root, const KeyStore& ks,
                                       const IdAttrSet& id_attrs = default_id_attrs()) {
    VerificationReport report;
    report.mode = "naive";
    if (!detail::append_signature_checks(report, root, ks, id_attrs))
        throw NoSignatureFound("no Signature under any Security header");
    return report;
}

// ---------------------------------------------------------------------------
// Signing.

struct SignResult {
    XmlNode root;
    std::string bst_id;
    Bytes signature_value;
};

// Builds the Security/BST/Signature material. Digests are computed after all
// non-Signature structure (Security, BST, any caller-inserted headers) is in
// place, so a reference to Header or Envelope stays consistent.
inline SignResult sign_detailed(XmlNode root, const std::vector<std::string>& ref_ids,
                                const std::string& key_id, const KeyStore& ks,
                                const std::optional<Bytes>& previous_signature = std::nullopt,
                                const IdAttrSet& id_attrs = default_id_attrs()) {
    const Bytes& key = ks.key(key_id);

    EnvelopeShape shape = as_envelope(root);
    if (!shape.header) {
        insert_child(root, {}, 0, XmlNode::element("Header"));
        shape = as_envelope(root);
    }
    XmlNode& header = node_at(root, *shape.header);

    std::size_t security_idx = header.children.size();
    bool have_security = false;
    for (std::size_t i = 0; i < header.children.size(); ++i) {
        if (header.children[i].is_element() &&
            local_name(header.children[i].name) == "Security") {
            security_idx = i;
            have_security = true;
            break;
        }
    }
    if (!have_security) {
        header.children.push_back(XmlNode::element("Security"));
        security_idx = header.children.size() - 1;
    }

    std::string bst_id = fresh_numeric_id(root, id_attrs);
    std::string token = to_hex(sha256(key_id)).substr(0, 12);
    header.children[security_idx].children.push_back(
        XmlNode::element("BST", {{"id", bst_id}}, {XmlNode::text_node(token)}));

    XmlNode signed_info = XmlNode::element(
        "SignedInfo", {},
        {XmlNode::element("CanonicalizationMethod", {{"Algorithm", std::string(algs::c14n)}}),
         XmlNode::element("SignatureMethod", {{"Algorithm", std::string(algs::hmac_sha256)}})});
    for (const auto& ref_id : ref_ids) {
        NodePath target = resolve_reference(root, "#" + ref_id, id_attrs);
        std::string digest = to_hex(digest_element(root, target));
        signed_info.children.push_back(XmlNode::element(
            "Reference", {{"URI", "#" + ref_id}},
            {XmlNode::element("DigestMethod", {{"Algorithm", std::string(algs::sha256)}}),
             XmlNode::element("DigestValue", {}, {XmlNode::text_node(digest)})}));
    }

    std::string canon = serialize_canonical(signed_info);
    Bytes message(canon.begin(), canon.end());
    if (previous_signature)
        message.insert(message.end(), previous_signature->begin(), previous_signature->end());
    Bytes signature_value = hmac_sha256(key, message);

    XmlNode signature = XmlNode::element("Signature");
    if (previous_signature) signature.set_attr("chained", "true");
    signature.children.push_back(std::move(signed_info));
    signature.children.push_back(XmlNode::element(
        "SignatureValue", {}, {XmlNode::text_node(to_hex(signature_value))}));
    signature.children.push_back(XmlNode::element(
        "KeyInfo", {},
        {XmlNode::element("KeyId", {}, {XmlNode::text_node(key_id)}),
         XmlNode::element("Reference", {{"URI", bst_id}})}));
    header.children[security_idx].children.push_back(std::move(signature));

    return {std::move(root), std::move(bst_id), std::move(signature_value)};
}

inline XmlNode sign(XmlNode root, const std::vector<std::string>& ref_ids,
                    const std::string& key_id, const KeyStore& ks,
                    const std::optional<Bytes>& previous_signature = std::nullopt,
                    const IdAttrSet& id_attrs = default_id_attrs()) {
    return sign_detailed(std::move(root), ref_ids, key_id, ks, previous_signature, id_attrs).root;
}

}  // namespace soapguard
