#pragma once

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "soapguard/clock.hpp"
#include "soapguard/dsig.hpp"
#include "soapguard/errors.hpp"
#include "soapguard/keystore.hpp"
#include "soapguard/report.hpp"
#include "soapguard/soap.hpp"
#include "soapguard/xml.hpp"

namespace soapguard {

// One triple per signed reference: where the element lives (depth), under
// what (parent name), and under exactly which node (parent id).
struct GuardRecord {
    std::string ref_id;
    std::size_t depth = 0;
    std::string parent_name;
    std::string parent_wsu_id;
};

struct GuardHeader {
    std::vector<GuardRecord> records;
    std::string message_id;
    std::int64_t timestamp = 0;
};

// First-seen times per message id. Check-and-insert is one serialized step;
// freshness and replay share the single window.
class ReplayStore {
public:
    enum class Result { Fresh, Replayed };

    explicit ReplayStore(std::int64_t window_seconds = 300) : window_(window_seconds) {}

    ReplayStore(const ReplayStore&) = delete;
    ReplayStore& operator=(const ReplayStore&) = delete;

    std::int64_t window_seconds() const { return window_; }

    Result replay_seen(const std::string& message_id, std::int64_t now) {
        std::lock_guard<std::mutex> lock(mutex_);
        for (auto it = seen_.begin(); it != seen_.end();) {
            if (now - it->second > window_)
                it = seen_.erase(it);
            else
                ++it;
        }
        auto it = seen_.find(message_id);
        if (it != seen_.end() && now - it->second <= window_) return Result::Replayed;
        seen_[message_id] = now;
        return Result::Fresh;
    }

    // Same decision, no state change: used when a message already failed
    // earlier checks and must not poison the store.
    Result peek(const std::string& message_id, std::int64_t now) const {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = seen_.find(message_id);
        if (it != seen_.end() && now - it->second <= window_) return Result::Replayed;
        return Result::Fresh;
    }

    std::optional<std::int64_t> first_seen(const std::string& message_id) const {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = seen_.find(message_id);
        if (it == seen_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t size() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return seen_.size();
    }

    // Missing file means a fresh store; a present but unreadable one is an error.
    void load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) return;
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw IoError("replay db " + path + " is not valid JSON: " + e.what());
        }
        if (!doc.is_object()) throw IoError("replay db " + path + " must be a JSON object");
        std::map<std::string, std::int64_t> parsed;
        for (auto& [key, value] : doc.items()) {
            if (!value.is_number_integer())
                throw IoError("replay db entry " + key + " must be an integer");
            parsed[key] = value.get<std::int64_t>();
        }
        std::lock_guard<std::mutex> lock(mutex_);
        seen_ = std::move(parsed);
    }

    void save(const std::string& path) const {
        nlohmann::json doc = nlohmann::json::object();
        {
            std::lock_guard<std::mutex> lock(mutex_);
            for (const auto& [id, t] : seen_) doc[id] = t;
        }
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write replay db " + path);
        out << doc.dump(2) << "\n";
    }

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::int64_t> seen_;
    std::int64_t window_;
};

namespace detail {

// Content-derived, so identical inputs give identical ids across runs while
// distinct messages never collide in practice.
inline std::string derived_uuid(const std::string& seed_bytes, std::size_t counter) {
    Bytes digest = sha256(seed_bytes + ":" + std::to_string(counter));
    std::string hex = to_hex(digest);
    return hex.substr(0, 8) + "-" + hex.substr(8, 4) + "-" + hex.substr(12, 4) + "-" +
           hex.substr(16, 4) + "-" + hex.substr(20, 12);
}

}  // namespace detail

inline std::vector<GuardRecord> compute_guards(const XmlNode& root,
                                               const std::vector<std::string>& ref_ids,
                                               const IdAttrSet& id_attrs = default_id_attrs()) {
    std::vector<GuardRecord> records;
    for (const auto& ref_id : ref_ids) {
        NodePath path = resolve_reference(root, "#" + ref_id, id_attrs);
        const XmlNode& parent = node_at(root, parent_of(path));
        const std::string* parent_id = id_of(parent, id_attrs);
        records.push_back({ref_id, depth_of(path), parent.name, parent_id ? *parent_id : ""});
    }
    return records;
}

inline XmlNode guard_to_xml(const GuardHeader& guard, const std::string& guard_id,
                            const std::string& id_attr_name) {
    XmlNode node = XmlNode::element("Guard", {{id_attr_name, guard_id}});
    node.children.push_back(
        XmlNode::element("MessageID", {}, {XmlNode::text_node(guard.message_id)}));
    node.children.push_back(
        XmlNode::element("Timestamp", {}, {XmlNode::text_node(format_timestamp(guard.timestamp))}));
    for (const auto& record : guard.records) {
        node.children.push_back(XmlNode::element("GuardRef", {{"refId", record.ref_id},
                                                              {"depth", std::to_string(record.depth)},
                                                              {"parentName", record.parent_name},
                                                              {"parentId", record.parent_wsu_id}}));
    }
    return node;
}

inline GuardHeader guard_from_xml(const XmlNode& node) {
    GuardHeader guard;
    const XmlNode* mid = nullptr;
    const XmlNode* ts = nullptr;
    for (const auto& child : node.children) {
        if (!child.is_element()) continue;
        if (local_name(child.name) == "MessageID") {
            mid = &child;
        } else if (local_name(child.name) == "Timestamp") {
            ts = &child;
        } else if (local_name(child.name) == "GuardRef") {
            GuardRecord record;
            const std::string* ref_id = child.attr("refId");
            const std::string* depth = child.attr("depth");
            const std::string* parent_name = child.attr("parentName");
            const std::string* parent_id = child.attr("parentId");
            if (ref_id == nullptr || depth == nullptr || parent_name == nullptr ||
                parent_id == nullptr)
                throw MalformedXml("GuardRef missing a required attribute");
            record.ref_id = *ref_id;
            try {
                record.depth = static_cast<std::size_t>(std::stoul(*depth));
            } catch (const std::exception&) {
                throw MalformedXml("GuardRef depth is not a number");
            }
            record.parent_name = *parent_name;
            record.parent_wsu_id = *parent_id;
            guard.records.push_back(std::move(record));
        }
    }
    if (mid == nullptr || mid->inner_text().empty())
        throw MalformedXml("Guard without a MessageID");
    if (ts == nullptr) throw MalformedXml("Guard without a Timestamp");
    guard.message_id = mid->inner_text();
    guard.timestamp = parse_timestamp(ts->inner_text());
    return guard;
}

struct AttachGuardsResult {
    XmlNode root;
    std::string guard_id;
};

// Protects refs with the three location facts plus signed MessageID and
// Timestamp. Parents lacking an id get a content-derived one first; the guard
// block itself is signed alongside the refs so none of it can be stripped.
inline AttachGuardsResult attach_guards_detailed(XmlNode root,
                                                 const std::vector<std::string>& ref_ids,
                                                 const std::string& key_id, const KeyStore& ks,
                                                 const std::string& message_id,
                                                 std::int64_t timestamp,
                                                 const IdAttrSet& id_attrs = default_id_attrs()) {
    ks.key(key_id);
    if (message_id.empty()) throw MalformedXml("guard message id must be nonempty");
    if (id_attrs.empty()) throw MalformedXml("id attribute set must be nonempty");

    EnvelopeShape shape = as_envelope(root);
    if (!shape.header) {
        insert_child(root, {}, 0, XmlNode::element("Header"));
        shape = as_envelope(root);
    }
    for (const auto& block : header_blocks(root))
        if (local_name(block.name) == "Guard")
            throw AlreadyGuarded("message already carries a Guard header");

    std::string seed = serialize_canonical(root);
    std::size_t counter = 0;
    auto fresh_uuid = [&] {
        WsuIdIndex index = build_wsu_id_index(root, id_attrs);
        while (true) {
            std::string candidate = detail::derived_uuid(seed, counter++);
            if (index.find(candidate) == index.end()) return candidate;
        }
    };

    for (const auto& ref_id : ref_ids) {
        NodePath path = resolve_reference(root, "#" + ref_id, id_attrs);
        XmlNode& parent = node_at(root, parent_of(path));
        if (id_of(parent, id_attrs) == nullptr) parent.set_attr(id_attrs.front(), fresh_uuid());
    }

    GuardHeader guard;
    guard.records = compute_guards(root, ref_ids, id_attrs);
    guard.message_id = message_id;
    guard.timestamp = timestamp;
    std::string guard_id = fresh_uuid();

    XmlNode& header = node_at(root, *shape.header);
    std::size_t insert_at = header.children.size();
    for (std::size_t i = 0; i < header.children.size(); ++i) {
        if (header.children[i].is_element() &&
            local_name(header.children[i].name) == "Security") {
            insert_at = i;
            break;
        }
    }
    header.children.insert(header.children.begin() + static_cast<std::ptrdiff_t>(insert_at),
                           guard_to_xml(guard, guard_id, id_attrs.front()));

    std::vector<std::string> all_refs = ref_ids;
    all_refs.push_back(guard_id);
    SignResult result = sign_detailed(std::move(root), all_refs, key_id, ks, std::nullopt, id_attrs);
    return {std::move(result.root), std::move(guard_id)};
}

inline XmlNode attach_guards(XmlNode root, const std::vector<std::string>& ref_ids,
                             const std::string& key_id, const KeyStore& ks,
                             const std::string& message_id, std::int64_t timestamp,
                             const IdAttrSet& id_attrs = default_id_attrs()) {
    return attach_guards_detailed(std::move(root), ref_ids, key_id, ks, message_id, timestamp,
                                  id_attrs)
        .root;
}

inline ReplayStore::Result replay_seen(ReplayStore& rs, const std::string& message_id,
                                       std::int64_t now) {
    return rs.replay_seen(message_id, now);
}

// The recommended validator. Order matters: id uniqueness first so duplicated
// ids cannot confuse anything downstream, then the baseline signature checks,
// then the structural guard comparison, then time.
inline VerificationReport verify_hardened(const XmlNode& root, const KeyStore& ks,
                                          ReplayStore& rs, std::int64_t now,
                                          const IdAttrSet& id_attrs = default_id_attrs()) {
    VerificationReport report;
    report.mode = "hardened";

    WsuIdIndex index = build_wsu_id_index(root, id_attrs);
    std::string duplicated;
    for (const auto& [id, paths] : index)
        if (paths.size() > 1) duplicated += (duplicated.empty() ? "" : ", ") + id;
    report.add("uniqueness", duplicated.empty(),
               duplicated.empty() ? "all ids unique" : "duplicated id(s): " + duplicated);

    if (!detail::append_signature_checks(report, root, ks, id_attrs))
        report.add("signature.present", false, "no Signature under any Security header");

    std::vector<NodePath> guard_paths;
    try {
        for (const auto& block : header_blocks(root)) {
            if (local_name(block.name) != "Guard") continue;
            // A guard parked under any other role is unseen by the receiver.
            if (block.role != roles::ultimate_receiver) continue;
            guard_paths.push_back(block.path);
        }
    } catch (const NotAnEnvelope& e) {
        report.add("guard.present", false, e.what());
        return report;
    }
    if (guard_paths.size() != 1) {
        report.add("guard.present", false,
                   guard_paths.empty()
                       ? "no Guard header targeted at the ultimate receiver"
                       : "multiple Guard headers targeted at the ultimate receiver");
        return report;
    }
    report.add("guard.present", true, "one Guard header targeted at the ultimate receiver");

    const XmlNode& guard_node = node_at(root, guard_paths.front());
    GuardHeader guard;
    try {
        guard = guard_from_xml(guard_node);
    } catch (const Error& e) {
        report.add("guard.structure", false, e.what());
        return report;
    }

    const std::string* guard_id = id_of(guard_node, id_attrs);
    std::optional<SignatureBlock> covering;
    if (guard_id != nullptr) {
        for (const NodePath& path : find_signature_paths(root)) {
            try {
                SignatureBlock sig = parse_signature(root, path);
                for (const auto& ref : sig.references)
                    if (ref.uri == "#" + *guard_id) covering = sig;
            } catch (const Error&) {
            }
            if (covering) break;
        }
    }
    report.add("guard.signed", covering.has_value(),
               covering ? "guard id #" + *guard_id + " is a signed reference"
                        : "guard is not covered by any signature");

    if (covering) {
        std::set<std::string> signed_refs;
        for (const auto& ref : covering->references)
            if (ref.uri != "#" + *guard_id && !ref.uri.empty() && ref.uri[0] == '#')
                signed_refs.insert(ref.uri.substr(1));
        std::set<std::string> guarded_refs;
        for (const auto& record : guard.records) guarded_refs.insert(record.ref_id);
        report.add("guard.coverage", signed_refs == guarded_refs,
                   signed_refs == guarded_refs
                       ? "one guard record per signed reference"
                       : "guard records do not match the signature's references");
    }

    for (const auto& record : guard.records) {
        std::string suffix = "ref " + record.ref_id + ": ";
        try {
            NodePath path = resolve_reference(root, "#" + record.ref_id, id_attrs);
            const XmlNode& parent = node_at(root, parent_of(path));
            const std::string* parent_id = id_of(parent, id_attrs);
            std::string found_id = parent_id ? *parent_id : "";
            report.add("guard.depth", depth_of(path) == record.depth,
                       suffix + "recorded depth " + std::to_string(record.depth) + ", found " +
                           std::to_string(depth_of(path)));
            report.add("guard.parent", parent.name == record.parent_name,
                       suffix + "recorded parent " + record.parent_name + ", found " + parent.name);
            report.add("guard.parent-id", found_id == record.parent_wsu_id,
                       suffix + "recorded parent id " + record.parent_wsu_id + ", found " +
                           (found_id.empty() ? "(none)" : found_id));
        } catch (const Error& e) {
            report.add("guard.ref", false, suffix + e.what());
        }
    }

    std::int64_t age = now >= guard.timestamp ? now - guard.timestamp : guard.timestamp - now;
    report.add("freshness", age <= rs.window_seconds(),
               "timestamp " + format_timestamp(guard.timestamp) + ", now " + format_timestamp(now) +
                   ", window " + std::to_string(rs.window_seconds()) + "s");

    if (report.accepted()) {
        ReplayStore::Result result = rs.replay_seen(guard.message_id, now);
        report.add("replay", result == ReplayStore::Result::Fresh,
                   result == ReplayStore::Result::Fresh
                       ? "message id first seen; recorded"
                       : "message id already seen within the window");
    } else {
        ReplayStore::Result result = rs.peek(guard.message_id, now);
        report.add("replay", result == ReplayStore::Result::Fresh,
                   std::string(result == ReplayStore::Result::Fresh ? "message id not seen"
                                                                    : "message id already seen") +
                       "; store untouched because earlier checks failed");
    }
    return report;
}

}  // namespace soapguard
