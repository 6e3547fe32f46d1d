#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "soapguard/errors.hpp"

namespace soapguard {

enum class NodeKind { Element, Text };

struct XmlAttr {
    std::string name;
    std::string value;

    friend bool operator==(const XmlAttr&, const XmlAttr&) = default;
};

// Names are kept literally; prefixes are never expanded. Matching against
// structural element names goes through local_name() instead.
struct XmlNode {
    NodeKind kind = NodeKind::Element;
    std::string name;
    std::vector<XmlAttr> attrs;
    std::vector<XmlNode> children;
    std::string text;

    static XmlNode element(std::string name, std::vector<XmlAttr> attrs = {},
                           std::vector<XmlNode> children = {}) {
        XmlNode n;
        n.kind = NodeKind::Element;
        n.name = std::move(name);
        n.attrs = std::move(attrs);
        n.children = std::move(children);
        return n;
    }

    static XmlNode text_node(std::string text) {
        XmlNode n;
        n.kind = NodeKind::Text;
        n.text = std::move(text);
        return n;
    }

    bool is_element() const { return kind == NodeKind::Element; }
    bool is_text() const { return kind == NodeKind::Text; }

    const std::string* attr(std::string_view attr_name) const {
        for (const auto& a : attrs)
            if (a.name == attr_name) return &a.value;
        return nullptr;
    }

    void set_attr(std::string_view attr_name, std::string value) {
        for (auto& a : attrs) {
            if (a.name == attr_name) {
                a.value = std::move(value);
                return;
            }
        }
        attrs.push_back({std::string(attr_name), std::move(value)});
    }

    void remove_attr(std::string_view attr_name) {
        std::erase_if(attrs, [&](const XmlAttr& a) { return a.name == attr_name; });
    }

    // Concatenated text of direct text children.
    std::string inner_text() const {
        std::string out;
        for (const auto& c : children)
            if (c.is_text()) out += c.text;
        return out;
    }
};

// Attribute order is not significant.
inline bool operator==(const XmlNode& a, const XmlNode& b) {
    if (a.kind != b.kind) return false;
    if (a.kind == NodeKind::Text) return a.text == b.text;
    if (a.name != b.name) return false;
    auto sorted_attrs = [](const XmlNode& n) {
        auto copy = n.attrs;
        std::sort(copy.begin(), copy.end(),
                  [](const XmlAttr& x, const XmlAttr& y) { return x.name < y.name; });
        return copy;
    };
    if (sorted_attrs(a) != sorted_attrs(b)) return false;
    return a.children == b.children;
}

// Child indices from the root; {} addresses the root itself.
using NodePath = std::vector<std::size_t>;

inline std::string local_name(std::string_view name) {
    auto pos = name.rfind(':');
    return std::string(pos == std::string_view::npos ? name : name.substr(pos + 1));
}

inline const XmlNode& node_at(const XmlNode& root, const NodePath& path) {
    const XmlNode* cur = &root;
    for (std::size_t idx : path) {
        if (!cur->is_element() || idx >= cur->children.size())
            throw InvalidPath("path step out of range");
        cur = &cur->children[idx];
    }
    return *cur;
}

inline XmlNode& node_at(XmlNode& root, const NodePath& path) {
    return const_cast<XmlNode&>(node_at(static_cast<const XmlNode&>(root), path));
}

inline std::size_t depth_of(const NodePath& path) { return path.size(); }

inline NodePath parent_of(const NodePath& path) {
    if (path.empty()) throw RootHasNoParent();
    return NodePath(path.begin(), path.end() - 1);
}

inline bool path_is_prefix(const NodePath& prefix, const NodePath& path) {
    if (prefix.size() > path.size()) return false;
    return std::equal(prefix.begin(), prefix.end(), path.begin());
}

// Document-order walk over elements only; fn(path, node).
template <typename Fn>
void for_each_element(const XmlNode& root, Fn&& fn) {
    struct Walker {
        Fn& fn;
        void go(const XmlNode& node, NodePath& path) {
            if (!node.is_element()) return;
            fn(static_cast<const NodePath&>(path), node);
            for (std::size_t i = 0; i < node.children.size(); ++i) {
                path.push_back(i);
                go(node.children[i], path);
                path.pop_back();
            }
        }
    };
    NodePath path;
    Walker{fn}.go(root, path);
}

inline std::vector<std::size_t> element_child_indices(const XmlNode& node) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < node.children.size(); ++i)
        if (node.children[i].is_element()) out.push_back(i);
    return out;
}

// Detaches and returns the subtree at path.
inline XmlNode remove_subtree(XmlNode& root, const NodePath& path) {
    if (path.empty()) throw InvalidPath("cannot remove the root");
    XmlNode& parent = node_at(root, parent_of(path));
    std::size_t idx = path.back();
    if (idx >= parent.children.size()) throw InvalidPath("path step out of range");
    XmlNode removed = std::move(parent.children[idx]);
    parent.children.erase(parent.children.begin() + static_cast<std::ptrdiff_t>(idx));
    return removed;
}

// Inserts child under parent_path at index (clamped to append).
inline void insert_child(XmlNode& root, const NodePath& parent_path, std::size_t index,
                         XmlNode child) {
    XmlNode& parent = node_at(root, parent_path);
    if (!parent.is_element()) throw InvalidPath("cannot insert under a text node");
    index = std::min(index, parent.children.size());
    parent.children.insert(parent.children.begin() + static_cast<std::ptrdiff_t>(index),
                           std::move(child));
}

// ---------------------------------------------------------------------------
// Parsing. Deliberately strict: declarations, PIs, comments, CDATA and DTDs
// are rejected rather than skipped, so every accepted document lives in the
// canonical subset. Whitespace-only text is insignificant and dropped.

namespace detail {

inline bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

inline bool is_name_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == ':';
}

inline bool is_name_char(char c) {
    return is_name_start(c) || (c >= '0' && c <= '9') || c == '-' || c == '.';
}

class Parser {
public:
    explicit Parser(std::string_view input) : in_(input) {}

    XmlNode parse_document() {
        skip_ws();
        if (pos_ >= in_.size() || in_[pos_] != '<') throw MalformedXml("expected root element");
        check_markup();
        XmlNode root = parse_element();
        skip_ws();
        if (pos_ != in_.size()) throw MalformedXml("content after root element");
        return root;
    }

private:
    void skip_ws() {
        while (pos_ < in_.size() && is_ws(in_[pos_])) ++pos_;
    }

    [[noreturn]] void fail(const std::string& msg) {
        throw MalformedXml(msg + " at offset " + std::to_string(pos_));
    }

    // Call with in_[pos_] == '<'; rejects every non-element markup form.
    void check_markup() {
        if (pos_ + 1 >= in_.size()) fail("truncated markup");
        char next = in_[pos_ + 1];
        if (next == '?') fail("processing instructions and declarations are not allowed");
        if (next == '!') {
            if (in_.compare(pos_, 4, "<!--") == 0) fail("comments are not allowed");
            if (in_.compare(pos_, 9, "<![CDATA[") == 0) fail("CDATA sections are not allowed");
            fail("DTD markup is not allowed");
        }
    }

    std::string parse_name() {
        if (pos_ >= in_.size() || !is_name_start(in_[pos_])) fail("expected name");
        std::size_t start = pos_;
        while (pos_ < in_.size() && is_name_char(in_[pos_])) ++pos_;
        return std::string(in_.substr(start, pos_ - start));
    }

    std::string decode_entity() {
        // in_[pos_] == '&'
        static const std::pair<std::string_view, char> table[] = {
            {"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'}, {"&quot;", '"'}, {"&apos;", '\''}};
        for (auto [entity, ch] : table) {
            if (in_.compare(pos_, entity.size(), entity) == 0) {
                pos_ += entity.size();
                return std::string(1, ch);
            }
        }
        fail("unknown entity reference");
    }

    std::string parse_attr_value() {
        if (pos_ >= in_.size() || (in_[pos_] != '"' && in_[pos_] != '\'')) {
            fail("expected quoted attribute value");
        }
        char quote = in_[pos_++];
        std::string value;
        while (true) {
            if (pos_ >= in_.size()) fail("unterminated attribute value");
            char c = in_[pos_];
            if (c == quote) {
                ++pos_;
                return value;
            }
            if (c == '<') fail("'<' in attribute value");
            if (c == '&') {
                value += decode_entity();
            } else {
                value.push_back(c);
                ++pos_;
            }
        }
    }

    XmlNode parse_element() {
        ++pos_;  // consume '<'
        XmlNode node = XmlNode::element(parse_name());
        while (true) {
            bool had_ws = pos_ < in_.size() && is_ws(in_[pos_]);
            skip_ws();
            if (pos_ >= in_.size()) fail("unterminated start tag");
            if (in_[pos_] == '>') {
                ++pos_;
                break;
            }
            if (in_.compare(pos_, 2, "/>") == 0) {
                pos_ += 2;
                return node;
            }
            if (!had_ws) fail("expected whitespace before attribute");
            std::string attr_name = parse_name();
            if (node.attr(attr_name) != nullptr) fail("duplicate attribute " + attr_name);
            skip_ws();
            if (pos_ >= in_.size() || in_[pos_] != '=') fail("expected '=' after attribute name");
            ++pos_;
            skip_ws();
            node.attrs.push_back({std::move(attr_name), parse_attr_value()});
        }
        // content until matching end tag
        while (true) {
            std::string text;
            while (pos_ < in_.size() && in_[pos_] != '<') {
                if (in_[pos_] == '&')
                    text += decode_entity();
                else
                    text.push_back(in_[pos_++]);
            }
            if (!text.empty() &&
                !std::all_of(text.begin(), text.end(), [](char c) { return is_ws(c); })) {
                node.children.push_back(XmlNode::text_node(std::move(text)));
            }
            if (pos_ >= in_.size()) fail("unterminated element " + node.name);
            if (in_.compare(pos_, 2, "</") == 0) {
                pos_ += 2;
                std::string close = parse_name();
                if (close != node.name)
                    fail("mismatched end tag </" + close + "> for <" + node.name + ">");
                skip_ws();
                if (pos_ >= in_.size() || in_[pos_] != '>') fail("malformed end tag");
                ++pos_;
                return node;
            }
            check_markup();
            node.children.push_back(parse_element());
        }
    }

    std::string_view in_;
    std::size_t pos_ = 0;
};

inline void escape_text_into(std::string& out, const std::string& text) {
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out.push_back(c);
        }
    }
}

inline void escape_attr_into(std::string& out, const std::string& value) {
    for (char c : value) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
}

inline void serialize_into(std::string& out, const XmlNode& node) {
    if (node.is_text()) {
        escape_text_into(out, node.text);
        return;
    }
    out.push_back('<');
    out += node.name;
    auto sorted = node.attrs;
    std::sort(sorted.begin(), sorted.end(),
              [](const XmlAttr& a, const XmlAttr& b) { return a.name < b.name; });
    for (const auto& a : sorted) {
        out.push_back(' ');
        out += a.name;
        out += "=\"";
        escape_attr_into(out, a.value);
        out.push_back('"');
    }
    out.push_back('>');
    for (const auto& c : node.children) serialize_into(out, c);
    out += "</";
    out += node.name;
    out.push_back('>');
}

}  // namespace detail

inline XmlNode parse(std::string_view input) { return detail::Parser(input).parse_document(); }

// Canonical form: attributes sorted by name, five-entity escaping, expanded
// end tags, no declaration, no insignificant whitespace. Equal trees produce
// equal bytes, so digests over this form are structure digests.
inline std::string serialize_canonical(const XmlNode& node) {
    std::string out;
    detail::serialize_into(out, node);
    return out;
}

// ---------------------------------------------------------------------------
// Id indexing and reference resolution.

// Priority-ordered attribute names that can carry an element id.
using IdAttrSet = std::vector<std::string>;

inline const IdAttrSet& default_id_attrs() {
    static const IdAttrSet attrs{"wsu:Id", "Id", "id"};
    return attrs;
}

// First configured attribute present wins; one id per element.
inline const std::string* id_of(const XmlNode& node,
                                const IdAttrSet& id_attrs = default_id_attrs()) {
    for (const auto& name : id_attrs) {
        if (const std::string* v = node.attr(name)) return v;
    }
    return nullptr;
}

// id value -> paths of all elements carrying it. Multiple paths per id are
// preserved so validators can detect duplication instead of masking it.
using WsuIdIndex = std::map<std::string, std::vector<NodePath>>;

inline WsuIdIndex build_wsu_id_index(const XmlNode& root,
                                     const IdAttrSet& id_attrs = default_id_attrs()) {
    WsuIdIndex index;
    for_each_element(root, [&](const NodePath& path, const XmlNode& node) {
        if (const std::string* id = id_of(node, id_attrs)) index[*id].push_back(path);
    });
    return index;
}

// Smallest positive integer (as decimal string) unused as an id anywhere in
// the document. Keeps generated ids in the "1", "2", "3" range.
inline std::string fresh_numeric_id(const XmlNode& root,
                                    const IdAttrSet& id_attrs = default_id_attrs()) {
    WsuIdIndex index = build_wsu_id_index(root, id_attrs);
    for (std::size_t n = 1;; ++n) {
        std::string candidate = std::to_string(n);
        if (index.find(candidate) == index.end()) return candidate;
    }
}

// Resolves a same-document "#id" URI. The match is by id value anywhere in the
// tree, which is exactly the location independence the wrapping attacks abuse.
inline NodePath resolve_reference(const XmlNode& root, const std::string& uri,
                                  const IdAttrSet& id_attrs = default_id_attrs()) {
    if (uri.empty() || uri[0] != '#')
        throw ReferenceNotFound("unsupported reference URI: " + uri);
    std::string id = uri.substr(1);
    WsuIdIndex index = build_wsu_id_index(root, id_attrs);
    auto it = index.find(id);
    if (it == index.end() || it->second.empty())
        throw ReferenceNotFound("no element with id " + id);
    if (it->second.size() > 1) throw AmbiguousReference("id " + id + " is not unique");
    return it->second.front();
}

}  // namespace soapguard
