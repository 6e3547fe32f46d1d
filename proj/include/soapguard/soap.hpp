#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "soapguard/errors.hpp"
#include "soapguard/xml.hpp"

namespace soapguard {

namespace roles {
inline constexpr std::string_view none = "none";
inline constexpr std::string_view next = "next";
inline constexpr std::string_view ultimate_receiver = "ultimateReceiver";
}  // namespace roles

// Paths into the envelope; the caller keeps the root alive.
struct EnvelopeShape {
    std::optional<NodePath> header;
    NodePath body;
};

// Element children must be exactly [Header, Body] or [Body], matched by local
// name. Anything else is not an envelope this toolkit reasons about.
inline EnvelopeShape as_envelope(const XmlNode& root) {
    if (!root.is_element() || local_name(root.name) != "Envelope")
        throw NotAnEnvelope("root element is " + root.name);
    for (const auto& child : root.children)
        if (child.is_text()) throw NotAnEnvelope("text content directly under Envelope");
    auto elems = element_child_indices(root);
    if (elems.size() == 1 && local_name(root.children[elems[0]].name) == "Body")
        return EnvelopeShape{std::nullopt, {elems[0]}};
    if (elems.size() == 2 && local_name(root.children[elems[0]].name) == "Header" &&
        local_name(root.children[elems[1]].name) == "Body")
        return EnvelopeShape{NodePath{elems[0]}, {elems[1]}};
    throw NotAnEnvelope("Envelope children must be [Header, Body] or [Body]");
}

struct HeaderBlock {
    NodePath path;
    std::string name;
    std::string role;  // effective role; absent attribute means ultimateReceiver
    bool must_understand = false;
};

inline std::vector<HeaderBlock> header_blocks(const XmlNode& root) {
    EnvelopeShape shape = as_envelope(root);
    std::vector<HeaderBlock> blocks;
    if (!shape.header) return blocks;
    const XmlNode& header = node_at(root, *shape.header);
    for (std::size_t i = 0; i < header.children.size(); ++i) {
        const XmlNode& child = header.children[i];
        if (!child.is_element()) continue;
        HeaderBlock block;
        block.path = *shape.header;
        block.path.push_back(i);
        block.name = child.name;
        const std::string* role = child.attr("role");
        block.role = role ? *role : std::string(roles::ultimate_receiver);
        const std::string* mu = child.attr("mustUnderstand");
        block.must_understand = mu != nullptr && (*mu == "true" || *mu == "1");
        blocks.push_back(std::move(block));
    }
    return blocks;
}

// SOAP targeting: "none" is processed by nobody, "next" by every node, and
// any other role only by a node acting in exactly that role. This filter is
// what the relocation attacks exploit to park signed material out of sight.
inline bool role_processes(std::string_view block_role, std::string_view node_role) {
    if (block_role == roles::none) return false;
    return block_role == roles::next || block_role == node_role;
}

inline std::vector<HeaderBlock> processed_blocks(const XmlNode& root, std::string_view node_role) {
    std::vector<HeaderBlock> out;
    for (auto& block : header_blocks(root))
        if (role_processes(block.role, node_role)) out.push_back(std::move(block));
    return out;
}

struct MessageMeta {
    std::optional<std::string> message_id;
    std::optional<std::string> to;
    std::optional<std::string> action;
};

// First direct header child per local name, in document order.
inline MessageMeta message_meta(const XmlNode& root) {
    MessageMeta meta;
    for (const auto& block : header_blocks(root)) {
        const XmlNode& node = node_at(root, block.path);
        std::string local = local_name(block.name);
        if (local == "MessageID" && !meta.message_id)
            meta.message_id = node.inner_text();
        else if (local == "To" && !meta.to)
            meta.to = node.inner_text();
        else if (local == "Action" && !meta.action)
            meta.action = node.inner_text();
    }
    return meta;
}

}  // namespace soapguard
