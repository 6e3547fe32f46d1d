#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "soapguard/errors.hpp"
#include "soapguard/soap.hpp"
#include "soapguard/xml.hpp"

namespace soapguard {

namespace detail {

// Deterministic across platforms, unlike std:: distributions.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t below(std::uint64_t bound) { return next() % bound; }

private:
    std::uint64_t state_;
};

inline std::string random_ssn_like(SplitMix64& rng) {
    static const char alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
    std::string out;
    for (int i = 0; i < 12; ++i) out += alphabet[rng.below(sizeof(alphabet) - 1)];
    return out;
}

inline std::string random_uuid_text(SplitMix64& rng) {
    static const char digits[] = "0123456789abcdef";
    std::string out = "urn:uuid:";
    for (int block : {8, 4, 4, 4, 12}) {
        if (out.size() > 9) out += '-';
        for (int i = 0; i < block; ++i) out += digits[rng.below(16)];
    }
    return out;
}

}  // namespace detail

// A fresh banking request: fixed routing headers, seeded client identity,
// amount, and message id. Same seed, same bytes.
inline XmlNode generate_loan_message(std::uint64_t seed) {
    detail::SplitMix64 rng(seed);
    static const char* first_names[] = {"John",  "Mary",  "Robert", "Linda",
                                        "Peter", "Nadia", "Omar",   "Ivy"};
    static const char* last_names[] = {"Abraham", "Major", "Lewis", "Okafor",
                                       "Pan",     "Silva", "Haas",  "Zhou"};
    static const char* usernames[] = {"Piter Pan", "Wendy Darling", "James Hook", "Tiger Lily"};
    static const char* passwords[] = {"qwerty123", "hunter2bank", "s3cretpw", "letmein99"};

    std::string client_name = std::string(first_names[rng.below(8)]) + " " +
                              last_names[rng.below(8)];
    std::string ssn = detail::random_ssn_like(rng);
    std::string username = usernames[rng.below(4)];
    std::string password = passwords[rng.below(4)];
    std::string amount = std::to_string(1000 + rng.below(999000));
    std::string loan_type = std::to_string(1 + rng.below(3));
    std::string message_id = detail::random_uuid_text(rng);

    return XmlNode::element(
        "Envelope", {},
        {XmlNode::element(
             "Header", {},
             {XmlNode::element("To", {}, {XmlNode::text_node("ClientProcessService")}),
              XmlNode::element("ReplyTo", {},
                               {XmlNode::element("Address", {},
                                                 {XmlNode::text_node("RequestClient")})}),
              XmlNode::element("MessageID", {}, {XmlNode::text_node(message_id)}),
              XmlNode::element("Action")}),
         XmlNode::element(
             "Body", {{"Id", "1"}},
             {XmlNode::element(
                 "issueLoanOffer", {},
                 {XmlNode::element("clientData",
                                   {},
                                   {XmlNode::element("clientName", {},
                                                     {XmlNode::text_node(client_name)}),
                                    XmlNode::element("clientSSN", {},
                                                     {XmlNode::text_node(ssn)})}),
                  XmlNode::element("employeeData",
                                   {},
                                   {XmlNode::element("password", {},
                                                     {XmlNode::text_node(password)}),
                                    XmlNode::element("username", {},
                                                     {XmlNode::text_node(username)})}),
                  XmlNode::element("loanAmount", {}, {XmlNode::text_node(amount)}),
                  XmlNode::element("loanType", {}, {XmlNode::text_node(loan_type)})})})});
}

struct CorpusEntry {
    std::string file;
    std::string message_id;
};

struct CorpusManifest {
    std::uint64_t seed = 0;
    std::vector<CorpusEntry> entries;
};

inline std::string corpus_file_name(std::size_t index) {
    std::string digits = std::to_string(index + 1);
    while (digits.size() < 3) digits.insert(digits.begin(), '0');
    return "msg_" + digits + ".xml";
}

inline CorpusManifest write_corpus(const std::string& out_dir, std::size_t count,
                                   std::uint64_t seed) {
    if (count == 0) throw IoError("corpus count must be at least 1");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create corpus dir " + out_dir + ": " + ec.message());

    CorpusManifest manifest;
    manifest.seed = seed;
    detail::SplitMix64 rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        XmlNode msg = generate_loan_message(rng.next());
        std::string name = corpus_file_name(i);
        std::string path = out_dir + "/" + name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write corpus file " + path);
        out << serialize_canonical(msg) << "\n";
        manifest.entries.push_back({name, message_meta(msg).message_id.value_or("")});
    }

    nlohmann::json doc;
    doc["seed"] = manifest.seed;
    doc["count"] = manifest.entries.size();
    doc["entries"] = nlohmann::json::array();
    for (const auto& entry : manifest.entries)
        doc["entries"].push_back({{"file", entry.file}, {"message_id", entry.message_id}});
    std::string manifest_path = out_dir + "/manifest.json";
    std::ofstream out(manifest_path, std::ios::binary);
    if (!out) throw IoError("cannot write " + manifest_path);
    out << doc.dump(2) << "\n";
    return manifest;
}

}  // namespace soapguard
